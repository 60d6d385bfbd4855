#pragma once

#include <chrono>
#include <condition_variable>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "cwatch/extract.hpp"
#include "cwatch/html.hpp"
#include "cwatch/site_definition.hpp"
#include "cwatch/url.hpp"

namespace cwatch {

struct FetchPolicy {
  std::chrono::milliseconds per_host_min_delay{1000};
  int max_retries = 2;
  std::chrono::milliseconds timeout{15000};
  int max_pages_per_thread = 50;
  std::string user_agent = "commentwatcher/1.0";
  // Wait before retry i (0-based) is backoff_base * 2^i.
  std::chrono::milliseconds backoff_base{500};
};

// Throws cwatch::Error("invalid-policy") when a field is out of range.
void validate_policy(const FetchPolicy& policy);

// Wall clock used for politeness, backoff and fetched_at stamps.
class Clock {
 public:
  using time_point = std::chrono::sys_time<std::chrono::milliseconds>;

  virtual ~Clock() = default;
  virtual time_point now() = 0;
  virtual void sleep_until(time_point t) = 0;
};

class SystemClock : public Clock {
 public:
  time_point now() override;
  void sleep_until(time_point t) override;
};

// Time only moves when someone sleeps. Sleepers jump the clock forward to
// their wake-up time, so tests run instantly while keeping the ordering a
// real clock would produce for serialized callers.
class VirtualClock : public Clock {
 public:
  explicit VirtualClock(time_point start = time_point{std::chrono::milliseconds{1363219200000}});

  time_point now() override;
  void sleep_until(time_point t) override;
  void advance(std::chrono::milliseconds d);

 private:
  std::mutex mutex_;
  time_point now_;
};

struct HttpResponse {
  int status = 0;
  std::string body;
  std::optional<std::string> content_type;
};

// One request, no retries. Throws FetchError("timeout") or
// FetchError("network") when no response arrives.
class Transport {
 public:
  virtual ~Transport() = default;
  virtual HttpResponse get(const Url& url, const FetchPolicy& policy) = 0;
};

// fixture://host/path maps to <root>/host/path; a missing file is a 404.
class FixtureTransport : public Transport {
 public:
  explicit FixtureTransport(std::filesystem::path root);
  HttpResponse get(const Url& url, const FetchPolicy& policy) override;

 private:
  std::filesystem::path root_;
};

class HttpTransport : public Transport {
 public:
  HttpResponse get(const Url& url, const FetchPolicy& policy) override;
};

// Dispatches on scheme: fixture to `fixtures` (if configured), http(s) to `http`.
class SchemeTransport : public Transport {
 public:
  SchemeTransport(std::shared_ptr<Transport> fixtures, std::shared_ptr<Transport> http);
  HttpResponse get(const Url& url, const FetchPolicy& policy) override;

 private:
  std::shared_ptr<Transport> fixtures_;
  std::shared_ptr<Transport> http_;
};

// Serializes requests per host. A request may start only once the delay
// has passed since the previous request to that host finished, so start
// times are spaced by at least the delay as well.
class PolitenessGate {
 private:
  struct HostSlot {
    std::mutex mutex;
    std::optional<Clock::time_point> last_end;
  };

 public:
  PolitenessGate(Clock& clock, std::chrono::milliseconds min_delay);

  // Keeps the host reserved; releasing it records the finish time.
  class Pass {
   public:
    Pass(std::unique_lock<std::mutex> lock, HostSlot& slot, Clock& clock)
        : lock_(std::move(lock)), slot_(&slot), clock_(&clock) {}
    Pass(Pass&& other) noexcept = default;
    Pass& operator=(Pass&&) = delete;
    ~Pass() {
      if (lock_.owns_lock()) slot_->last_end = clock_->now();
    }

   private:
    std::unique_lock<std::mutex> lock_;
    HostSlot* slot_;
    Clock* clock_;
  };

  // Blocks until the host is free and rested.
  Pass enter(const std::string& host);

 private:
  Clock& clock_;
  std::chrono::milliseconds min_delay_;
  std::mutex map_mutex_;
  std::map<std::string, std::unique_ptr<HostSlot>> hosts_;
};

// Parses an absolute URL and drops its fragment; the result is the thread
// key used for duplicate detection. Throws cwatch::Error("invalid-url").
std::string normalize_source_url(std::string_view url);

class Fetcher {
 public:
  Fetcher(std::shared_ptr<Transport> transport, std::shared_ptr<Clock> clock, FetchPolicy policy);

  // Retries 5xx, 408, 429, timeouts and network errors with exponential
  // backoff; other statuses fail at once. Throws FetchError with codes
  // "http-status", "timeout", "network", "empty-body", "invalid-url".
  RawPage fetch_page(std::string_view url);

  // Fetches, cleans and extracts every page reachable through the
  // definition's next_page rule (bounded by max_pages_per_thread), then
  // resolves name mentions. Throws Error("unsupported-site") when no
  // definition matches; fetch errors propagate; parse errors come back as
  // diagnostics with no thread.
  ThreadExtraction fetch_thread(std::string_view url, DefinitionRegistry& defs);

  const FetchPolicy& policy() const noexcept { return policy_; }
  Clock& clock() noexcept { return *clock_; }

 private:
  std::shared_ptr<Transport> transport_;
  std::shared_ptr<Clock> clock_;
  FetchPolicy policy_;
  PolitenessGate gate_;
};

}  // namespace cwatch
