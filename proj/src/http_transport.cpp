#include <httplib.h>

#include "cwatch/error.hpp"
#include "cwatch/fetch.hpp"

namespace cwatch {

HttpResponse HttpTransport::get(const Url& url, const FetchPolicy& policy) {
  httplib::Client client(url.origin());
  auto secs = std::chrono::duration_cast<std::chrono::seconds>(policy.timeout);
  auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(policy.timeout - secs);
  client.set_connection_timeout(secs.count(), usecs.count());
  client.set_read_timeout(secs.count(), usecs.count());
  client.set_write_timeout(secs.count(), usecs.count());
  client.set_follow_location(true);

  httplib::Headers headers = {{"User-Agent", policy.user_agent}};
  auto res = client.Get(url.target(), headers);
  if (!res) {
    auto err = res.error();
    std::string what = httplib::to_string(err);
    if (err == httplib::Error::ConnectionTimeout || err == httplib::Error::Read)
      throw FetchError("timeout", "request timed out: " + url.str() + " (" + what + ")");
    throw FetchError("network", "request failed: " + url.str() + " (" + what + ")");
  }
  HttpResponse out;
  out.status = res->status;
  out.body = std::move(res->body);
  if (res->has_header("Content-Type")) out.content_type = res->get_header_value("Content-Type");
  return out;
}

}  // namespace cwatch
