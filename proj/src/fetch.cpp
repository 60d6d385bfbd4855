#include "cwatch/fetch.hpp"

#include <algorithm>
#include <cctype>
#include <set>
#include <thread>

#include "cwatch/error.hpp"
#include "cwatch/fs_util.hpp"

namespace cwatch {

namespace {

std::optional<std::string> charset_of(const std::optional<std::string>& content_type) {
  if (!content_type) return std::nullopt;
  std::string lower = *content_type;
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  auto pos = lower.find("charset=");
  if (pos == std::string::npos) return std::nullopt;
  std::string value = content_type->substr(pos + 8);
  value.erase(std::remove(value.begin(), value.end(), '"'), value.end());
  auto end = value.find_first_of("; \t");
  if (end != std::string::npos) value.resize(end);
  if (value.empty()) return std::nullopt;
  return value;
}

bool transient_status(int status) { return status >= 500 || status == 408 || status == 429; }

}  // namespace

void validate_policy(const FetchPolicy& policy) {
  if (policy.per_host_min_delay.count() < 0) throw Error("invalid-policy", "per_host_min_delay must be >= 0");
  if (policy.max_retries < 0) throw Error("invalid-policy", "max_retries must be >= 0");
  if (policy.max_pages_per_thread < 1) throw Error("invalid-policy", "max_pages_per_thread must be >= 1");
  if (policy.timeout.count() <= 0) throw Error("invalid-policy", "timeout must be > 0");
  if (policy.backoff_base.count() < 0) throw Error("invalid-policy", "backoff_base must be >= 0");
}

Clock::time_point SystemClock::now() {
  return std::chrono::time_point_cast<std::chrono::milliseconds>(std::chrono::system_clock::now());
}

void SystemClock::sleep_until(time_point t) { std::this_thread::sleep_until(t); }

VirtualClock::VirtualClock(time_point start) : now_(start) {}

Clock::time_point VirtualClock::now() {
  std::lock_guard lock(mutex_);
  return now_;
}

void VirtualClock::sleep_until(time_point t) {
  std::lock_guard lock(mutex_);
  if (t > now_) now_ = t;
}

void VirtualClock::advance(std::chrono::milliseconds d) {
  std::lock_guard lock(mutex_);
  now_ += d;
}

FixtureTransport::FixtureTransport(std::filesystem::path root) : root_(std::move(root)) {}

HttpResponse FixtureTransport::get(const Url& url, const FetchPolicy&) {
  std::filesystem::path rel = url.host;
  std::string path = url.path;
  if (path.find("..") != std::string::npos) return {400, "", std::nullopt};
  rel /= std::filesystem::path(path).relative_path();
  std::filesystem::path full = root_ / rel;
  std::error_code ec;
  if (!std::filesystem::is_regular_file(full, ec)) return {404, "", std::nullopt};
  return {200, read_file(full), std::nullopt};
}

SchemeTransport::SchemeTransport(std::shared_ptr<Transport> fixtures, std::shared_ptr<Transport> http)
    : fixtures_(std::move(fixtures)), http_(std::move(http)) {}

HttpResponse SchemeTransport::get(const Url& url, const FetchPolicy& policy) {
  if (url.scheme == "fixture") {
    if (!fixtures_) throw FetchError("network", "fixture scheme is not configured");
    return fixtures_->get(url, policy);
  }
  if (url.scheme == "http" || url.scheme == "https") {
    if (!http_) throw FetchError("network", "http transport is not configured");
    return http_->get(url, policy);
  }
  throw FetchError("invalid-url", "unsupported scheme: " + url.scheme);
}

PolitenessGate::PolitenessGate(Clock& clock, std::chrono::milliseconds min_delay)
    : clock_(clock), min_delay_(min_delay) {}

PolitenessGate::Pass PolitenessGate::enter(const std::string& host) {
  HostSlot* slot;
  {
    std::lock_guard lock(map_mutex_);
    auto& entry = hosts_[host];
    if (!entry) entry = std::make_unique<HostSlot>();
    slot = entry.get();
  }
  std::unique_lock lock(slot->mutex);
  if (slot->last_end) clock_.sleep_until(*slot->last_end + min_delay_);
  return Pass(std::move(lock), *slot, clock_);
}

std::string normalize_source_url(std::string_view url) {
  auto parsed = parse_url(url);
  if (!parsed || parsed->host.empty()) throw Error("invalid-url", "not an absolute URL: " + std::string(url));
  parsed->fragment.reset();
  return parsed->str();
}

Fetcher::Fetcher(std::shared_ptr<Transport> transport, std::shared_ptr<Clock> clock, FetchPolicy policy)
    : transport_(std::move(transport)),
      clock_(std::move(clock)),
      policy_(std::move(policy)),
      gate_(*clock_, policy_.per_host_min_delay) {
  validate_policy(policy_);
}

RawPage Fetcher::fetch_page(std::string_view url_text) {
  auto url = parse_url(url_text);
  if (!url || url->host.empty()) throw FetchError("invalid-url", "not an absolute URL: " + std::string(url_text));
  url->fragment.reset();

  for (int attempt = 0;; ++attempt) {
    bool last = attempt >= policy_.max_retries;
    HttpResponse response;
    Clock::time_point started;
    try {
      auto pass = gate_.enter(url->host);
      started = clock_->now();
      response = transport_->get(*url, policy_);
    } catch (const FetchError& e) {
      if (e.code() == "invalid-url" || last) throw;
      clock_->sleep_until(clock_->now() + policy_.backoff_base * (1LL << attempt));
      continue;
    }
    if (response.status >= 200 && response.status < 300) {
      if (response.body.empty()) throw FetchError("empty-body", "empty response body: " + url->str(), response.status);
      RawPage page;
      page.url = url->str();
      page.body = std::move(response.body);
      page.declared_encoding = charset_of(response.content_type);
      page.fetched_at = std::chrono::time_point_cast<std::chrono::seconds>(started);
      return page;
    }
    if (!transient_status(response.status) || last)
      throw FetchError("http-status", "HTTP " + std::to_string(response.status) + " for " + url->str(),
                       response.status);
    clock_->sleep_until(clock_->now() + policy_.backoff_base * (1LL << attempt));
  }
}

ThreadExtraction Fetcher::fetch_thread(std::string_view url_text, DefinitionRegistry& defs) {
  std::string source_url = normalize_source_url(url_text);
  auto def = defs.match(source_url);
  if (!def) throw Error("unsupported-site", "no site definition matches " + source_url);

  std::vector<PageExtraction> pages;
  std::set<std::string> visited;
  std::optional<std::string> next = source_url;
  Timestamp fetched_at{};
  while (next && static_cast<int>(pages.size()) < policy_.max_pages_per_thread) {
    std::string page_url = normalize_source_url(*next);
    if (!visited.insert(page_url).second) break;
    RawPage raw = fetch_page(page_url);
    if (pages.empty()) fetched_at = raw.fetched_at;
    CleanDocument doc = clean_html(raw);
    pages.push_back(extract_page(doc, *def));
    next = pages.back().next_page;
  }

  bool capped = next && !visited.count(normalize_source_url(*next));
  ThreadExtraction result = assemble_thread(std::move(pages), *def, source_url, fetched_at);
  if (capped)
    result.diagnostics.push_back({ExtractionDiagnostic::Severity::warning, "page-cap-reached",
                                  def->thread_rules.next_page_selector.value_or(""), *next});
  if (result.thread) result.thread = resolve_name_mentions(std::move(*result.thread));
  return result;
}

}  // namespace cwatch
