#pragma once

#include <condition_variable>
#include <deque>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "cwatch/bulk.hpp"
#include "cwatch/config.hpp"
#include "cwatch/error.hpp"
#include "cwatch/fetch.hpp"
#include "cwatch/site_definition.hpp"
#include "cwatch/store.hpp"
#include "cwatch/timeline.hpp"

namespace cwatch {

// HTTP status for an error code: 400 malformed request, 404 unknown id, 409
// wrong state, 422 rejected parameters, 502 upstream failure, 500 otherwise.
int http_status(std::string_view code);

// {"error": code, "message": ...}
std::string error_document(const Error& e);

enum class JobKind { bulk_fetch, extraction };
std::string_view to_string(JobKind k);

struct JobTicket {
  std::string job_id;
  JobKind kind = JobKind::extraction;
  ExtractionStatus status = ExtractionStatus::pending;
  std::optional<double> progress;
  std::optional<std::string> error;
  nlohmann::ordered_json data = nlohmann::ordered_json::object();  // kind-specific fields

  nlohmann::ordered_json to_json() const;
};

class JobContext {
 public:
  virtual ~JobContext() = default;
  virtual void progress(double fraction) = 0;
};

// Bounded worker pool. A job's work returns fields merged into its ticket;
// an exception fails the job with "<code>: <message>".
class JobManager {
 public:
  using Work = std::function<nlohmann::ordered_json(JobContext&)>;

  explicit JobManager(int workers);
  // Runs the queued jobs to completion before returning.
  ~JobManager();

  std::string submit(JobKind kind, Work work, nlohmann::ordered_json data = nlohmann::ordered_json::object());
  // Throws cwatch::Error("not-found").
  JobTicket get(const std::string& job_id) const;
  JobTicket wait(const std::string& job_id) const;

 private:
  class Context;
  void worker();

  mutable std::mutex mutex_;
  mutable std::condition_variable changed_;
  std::map<std::string, JobTicket> tickets_;
  std::deque<std::pair<std::string, Work>> queue_;
  std::uint64_t next_id_ = 1;
  bool stopping_ = false;
  std::vector<std::thread> workers_;
};

struct NetworkQuery {
  std::optional<std::set<int>> topics;  // nullopt: no filter
  bool keep_isolated = true;
  std::string format = "graphml";
};

struct TimelineQuery {
  int intervals = 10;
  GroupBy group_by = GroupBy::forum;
};

// Core operations behind both the CLI and the HTTP service. Every method
// returning std::string produces the exact document either surface emits.
class App {
 public:
  explicit App(Config config, std::shared_ptr<Transport> transport = nullptr, std::shared_ptr<Clock> clock = nullptr,
               std::shared_ptr<SearchProvider> search = nullptr);

  const Config& config() const noexcept { return config_; }
  Store& store() noexcept { return store_; }
  DefinitionRegistry& definitions() noexcept { return definitions_; }
  Fetcher& fetcher() noexcept { return fetcher_; }
  JobManager& jobs() noexcept { return jobs_; }

  std::string health();

  // Synchronous single-thread fetch. Throws Error("unsupported-site"),
  // Error("extraction-failed") or the fetcher's errors.
  std::string fetch(const std::string& url);

  std::string bulk_fetch(const std::string& keywords, int limit);
  std::string submit_bulk_fetch(const std::string& keywords, int limit);  // ticket

  std::string job(const std::string& job_id);

  std::string threads(const ThreadFilter& filter);
  // format: json | canonical
  std::string thread(const std::string& thread_id, const std::string& format = "json");

  // Validates, stores a pending record and queues the run. Returns the ticket.
  std::string submit_extraction(const std::vector<std::string>& thread_ids, const std::string& algorithm,
                                const std::map<std::string, std::string>& params);
  // Like submit_extraction but waits; returns the extraction id.
  std::string run_extraction(const std::vector<std::string>& thread_ids, const std::string& algorithm,
                             const std::map<std::string, std::string>& params);

  std::string extraction(const std::string& extraction_id);
  std::string extractions();

  // Views need a done extraction: Error("not-ready") while pending or
  // running, Error("extraction-failed") after a failure.
  std::string topics_view(const std::string& extraction_id);
  std::string network_view(const std::string& extraction_id, const NetworkQuery& query);
  std::string timeline_view(const std::string& extraction_id, const TimelineQuery& query);

  std::string sources();
  std::string add_source(const std::string& definition_text, bool replace);

 private:
  struct Prepared {
    std::string extraction_id;
    std::string job_id;
  };
  Prepared prepare_extraction(const std::vector<std::string>& thread_ids, const std::string& algorithm,
                              const std::map<std::string, std::string>& params);
  ExtractionRecord finished_extraction(const std::string& extraction_id);
  std::vector<CanonicalThread> load_threads(const CorpusSelection& corpus);
  SearchProvider& search_provider();

  Config config_;
  Store store_;
  DefinitionRegistry definitions_;
  std::shared_ptr<Clock> clock_;
  Fetcher fetcher_;
  std::shared_ptr<SearchProvider> search_;
  std::mutex search_mutex_;
  JobManager jobs_;
};

// Parses "1,5,7" (empty string = empty set). Throws Error("bad-request").
std::set<int> parse_topic_list(std::string_view text);

// Shared JSON rendering: two-space indent, trailing newline.
std::string dump_document(const nlohmann::ordered_json& j);

}  // namespace cwatch
