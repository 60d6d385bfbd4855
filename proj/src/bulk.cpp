#include "cwatch/bulk.hpp"

#include <httplib.h>
#include <json.hpp>

#include <algorithm>
#include <fstream>
#include <mutex>
#include <optional>
#include <thread>

#include "cwatch/error.hpp"
#include "cwatch/fs_util.hpp"

namespace cwatch {

namespace {

std::string trim(std::string_view s) {
  auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

struct Outcome {
  std::optional<std::string> thread_id;
  std::string failure;
};

Outcome fetch_one(const std::string& url, Fetcher& fetcher, DefinitionRegistry& defs, Store& store) {
  try {
    std::string key = normalize_source_url(url);
    if (auto existing = store.find_thread_by_url(key)) return {*existing, {}};
    ThreadExtraction extraction = fetcher.fetch_thread(key, defs);
    if (!extraction.thread) {
      std::string reason = "extraction-failed";
      for (const auto& d : extraction.diagnostics)
        if (d.is_error()) {
          reason += ": " + d.code;
          break;
        }
      return {std::nullopt, reason};
    }
    return {store.put_thread(*extraction.thread).thread_id, {}};
  } catch (const FetchError& e) {
    return {std::nullopt, e.code() + ": " + e.what()};
  } catch (const Error& e) {
    return {std::nullopt, e.code() + ": " + e.what()};
  } catch (const std::exception& e) {
    return {std::nullopt, std::string("internal: ") + e.what()};
  }
}

}  // namespace

FixtureSearchProvider::FixtureSearchProvider(std::filesystem::path results_file)
    : results_file_(std::move(results_file)) {}

std::vector<std::string> FixtureSearchProvider::search(const std::string&, int limit) {
  std::string text;
  try {
    text = read_file(results_file_);
  } catch (const Error& e) {
    throw Error("search-provider", std::string("cannot read search fixture: ") + e.what());
  }
  std::vector<std::string> urls;
  std::size_t pos = 0;
  while (pos <= text.size() && static_cast<int>(urls.size()) < limit) {
    auto end = text.find('\n', pos);
    if (end == std::string::npos) end = text.size();
    std::string line = trim(std::string_view(text).substr(pos, end - pos));
    if (!line.empty() && line[0] != '#') urls.push_back(line);
    pos = end + 1;
  }
  return urls;
}

LiveSearchProvider::LiveSearchProvider(std::string endpoint, std::string api_key, std::chrono::milliseconds timeout)
    : endpoint_(std::move(endpoint)), api_key_(std::move(api_key)), timeout_(timeout) {}

std::vector<std::string> parse_search_response(std::string_view body) {
  using nlohmann::json;
  json j = json::parse(body, nullptr, false);
  if (j.is_discarded()) throw Error("search-provider", "search response is not JSON");
  const json* list = nullptr;
  if (j.is_array()) list = &j;
  else if (j.contains("webPages") && j["webPages"].contains("value")) list = &j["webPages"]["value"];
  else if (j.contains("results")) list = &j["results"];
  if (!list || !list->is_array()) throw Error("search-provider", "search response has no result list");
  std::vector<std::string> urls;
  for (const auto& item : *list) {
    if (item.is_string()) urls.push_back(item.get<std::string>());
    else if (item.is_object() && item.contains("url") && item["url"].is_string()) urls.push_back(item["url"].get<std::string>());
  }
  return urls;
}

std::vector<std::string> LiveSearchProvider::search(const std::string& keywords, int limit) {
  auto url = parse_url(endpoint_);
  if (!url) throw Error("search-provider", "search endpoint is not an absolute URL: " + endpoint_);
  httplib::Client client(url->origin());
  auto secs = std::chrono::duration_cast<std::chrono::seconds>(timeout_);
  client.set_connection_timeout(secs.count(), 0);
  client.set_read_timeout(secs.count(), 0);
  std::string target = url->path + (url->query ? "?" + *url->query + "&" : "?") + "q=" + url_encode(keywords) +
                       "&count=" + std::to_string(limit);
  httplib::Headers headers = {{"Ocp-Apim-Subscription-Key", api_key_}};
  auto res = client.Get(target, headers);
  if (!res) throw Error("search-provider", "search request failed: " + httplib::to_string(res.error()));
  if (res->status != 200) throw Error("search-provider", "search API returned HTTP " + std::to_string(res->status));
  auto urls = parse_search_response(res->body);
  if (static_cast<int>(urls.size()) > limit) urls.resize(limit);
  return urls;
}

BulkFetchReport bulk_fetch(const std::string& keywords, int limit, SearchProvider& provider, Fetcher& fetcher,
                           DefinitionRegistry& defs, Store& store, const BulkOptions& options) {
  if (limit < 1) throw Error("invalid-limit", "limit must be at least 1");
  std::vector<std::string> urls = provider.search(keywords, limit);
  if (static_cast<int>(urls.size()) > limit) urls.resize(limit);

  BulkFetchReport report;
  report.keywords = keywords;
  report.urls_found = static_cast<int>(urls.size());

  std::vector<std::string> supported;
  for (const auto& u : urls) {
    std::string key;
    try {
      key = normalize_source_url(u);
    } catch (const Error&) {
      continue;
    }
    if (defs.match(key)) supported.push_back(u);
  }
  report.urls_supported = static_cast<int>(supported.size());

  std::vector<Outcome> outcomes(supported.size());
  std::atomic<std::size_t> next{0};
  std::atomic<int> done{0};
  std::mutex progress_mutex;
  auto worker = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < supported.size();) {
      outcomes[i] = fetch_one(supported[i], fetcher, defs, store);
      int n = ++done;
      if (options.progress) {
        std::lock_guard lock(progress_mutex);
        options.progress(n, static_cast<int>(supported.size()));
      }
    }
  };
  int workers = std::clamp<int>(options.workers, 1, std::max<int>(1, static_cast<int>(supported.size())));
  std::vector<std::thread> pool;
  for (int w = 1; w < workers; ++w) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  for (std::size_t i = 0; i < supported.size(); ++i) {
    if (outcomes[i].thread_id) report.threads_stored.push_back(*outcomes[i].thread_id);
    else report.failures.emplace_back(supported[i], outcomes[i].failure);
  }
  return report;
}

}  // namespace cwatch
