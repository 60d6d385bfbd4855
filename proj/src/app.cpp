#include "cwatch/app.hpp"

#include <charconv>
#include <cstdlib>

#include "cwatch/canonical.hpp"
#include "cwatch/error.hpp"
#include "cwatch/network.hpp"
#include "cwatch/topics.hpp"

namespace cwatch {

using nlohmann::ordered_json;

namespace {

ordered_json optional_time(const std::optional<Timestamp>& t) {
  return t ? ordered_json(format_iso8601(*t)) : ordered_json(nullptr);
}

ordered_json summary_json(const ThreadSummary& s) {
  return {{"thread_id", s.thread_id},   {"title", s.title},
          {"site_id", s.site_id},       {"source_url", s.source_url},
          {"post_count", s.post_count}, {"first_post", optional_time(s.first_post)},
          {"last_post", optional_time(s.last_post)}, {"fetched_at", format_iso8601(s.fetched_at)},
          {"revision", s.revision}};
}

ordered_json diagnostic_json(const ExtractionDiagnostic& d) {
  return {{"severity", std::string(to_string(d.severity))},
          {"code", d.code},
          {"selector", d.selector},
          {"context", d.context}};
}

ordered_json report_json(const BulkFetchReport& r) {
  ordered_json failures = ordered_json::array();
  for (const auto& [url, reason] : r.failures) failures.push_back({{"url", url}, {"reason", reason}});
  return {{"keywords", r.keywords},
          {"urls_found", r.urls_found},
          {"urls_supported", r.urls_supported},
          {"threads_stored", r.threads_stored},
          {"failures", failures}};
}

ordered_json definition_json(const SiteDefinition& d) {
  return {{"site_id", d.site_id}, {"version", d.version}, {"hosts", d.host_patterns}};
}

ordered_json record_json(const ExtractionRecord& r) {
  ordered_json j = {{"extraction_id", r.extraction_id},
                    {"algorithm", std::string(to_string(r.algorithm))},
                    {"thread_ids", r.corpus.thread_ids},
                    {"params", r.params},
                    {"status", std::string(to_string(r.status))},
                    {"created_at", format_iso8601(r.created_at)}};
  if (r.finished_at) j["finished_at"] = format_iso8601(*r.finished_at);
  if (r.error) j["error"] = *r.error;
  if (r.result) {
    j["topic_count"] = r.result->topics.size();
    j["assigned_posts"] = r.result->assignments.size();
  }
  return j;
}

class ProviderFailure : public SearchProvider {
 public:
  explicit ProviderFailure(std::string why) : why_(std::move(why)) {}
  std::vector<std::string> search(const std::string&, int) override { throw Error("search-provider", why_); }

 private:
  std::string why_;
};

}  // namespace

int http_status(std::string_view code) {
  static const std::map<std::string_view, int> table = {
      {"bad-request", 400},        {"invalid-url", 400},       {"invalid-json", 400},
      {"missing-field", 400},      {"unknown-algorithm", 400}, {"not-found", 404},
      {"not-ready", 409},          {"conflict", 409},          {"extraction-failed", 409},
      {"illegal-transition", 409}, {"unsupported-site", 422},  {"invalid-parameter", 422},
      {"invalid-limit", 422},      {"empty-corpus", 422},      {"empty-series", 422},
      {"unknown-format", 422},     {"definition-invalid", 422}, {"definition-format", 422},
      {"page-failed", 422},        {"http-status", 502},       {"timeout", 502},
      {"network", 502},            {"empty-body", 502},        {"search-provider", 502},
  };
  auto it = table.find(code);
  return it == table.end() ? 500 : it->second;
}

std::string dump_document(const ordered_json& j) {
  return j.dump(2, ' ', false, ordered_json::error_handler_t::replace) + "\n";
}

std::string error_document(const Error& e) { return dump_document({{"error", e.code()}, {"message", e.what()}}); }

std::string_view to_string(JobKind k) { return k == JobKind::bulk_fetch ? "bulk_fetch" : "extraction"; }

ordered_json JobTicket::to_json() const {
  ordered_json j = {{"job_id", job_id}, {"kind", std::string(to_string(kind))}, {"status", std::string(to_string(status))}};
  if (progress) j["progress"] = *progress;
  if (error) j["error"] = *error;
  for (auto it = data.begin(); it != data.end(); ++it) j[it.key()] = it.value();
  return j;
}

std::set<int> parse_topic_list(std::string_view text) {
  std::set<int> out;
  std::size_t from = 0;
  while (from <= text.size() && !text.empty()) {
    std::size_t comma = text.find(',', from);
    std::string_view item = text.substr(from, comma == std::string_view::npos ? std::string_view::npos : comma - from);
    int v = 0;
    auto [p, ec] = std::from_chars(item.data(), item.data() + item.size(), v);
    if (item.empty() || ec != std::errc() || p != item.data() + item.size())
      throw Error("bad-request", "topics must be comma-separated integers, got '" + std::string(text) + "'");
    out.insert(v);
    if (comma == std::string_view::npos) break;
    from = comma + 1;
  }
  return out;
}

// ---------------------------------------------------------------- jobs

class JobManager::Context : public JobContext {
 public:
  Context(JobManager& m, std::string id) : m_(m), id_(std::move(id)) {}
  void progress(double fraction) override {
    std::lock_guard lock(m_.mutex_);
    m_.tickets_.at(id_).progress = fraction;
    m_.changed_.notify_all();
  }

 private:
  JobManager& m_;
  std::string id_;
};

JobManager::JobManager(int workers) {
  for (int i = 0; i < std::max(1, workers); ++i) workers_.emplace_back([this] { worker(); });
}

JobManager::~JobManager() {
  {
    std::lock_guard lock(mutex_);
    stopping_ = true;
  }
  changed_.notify_all();
  for (auto& t : workers_) t.join();
}

std::string JobManager::submit(JobKind kind, Work work, ordered_json data) {
  std::lock_guard lock(mutex_);
  char buf[16];
  std::snprintf(buf, sizeof buf, "j%06llu", static_cast<unsigned long long>(next_id_++));
  JobTicket t;
  t.job_id = buf;
  t.kind = kind;
  t.data = std::move(data);
  tickets_[t.job_id] = t;
  queue_.emplace_back(t.job_id, std::move(work));
  changed_.notify_all();
  return t.job_id;
}

JobTicket JobManager::get(const std::string& job_id) const {
  std::lock_guard lock(mutex_);
  auto it = tickets_.find(job_id);
  if (it == tickets_.end()) throw Error("not-found", "no job " + job_id);
  return it->second;
}

JobTicket JobManager::wait(const std::string& job_id) const {
  std::unique_lock lock(mutex_);
  auto it = tickets_.find(job_id);
  if (it == tickets_.end()) throw Error("not-found", "no job " + job_id);
  changed_.wait(lock, [&] { return is_terminal(it->second.status); });
  return it->second;
}

void JobManager::worker() {
  while (true) {
    std::pair<std::string, Work> job;
    {
      std::unique_lock lock(mutex_);
      changed_.wait(lock, [&] { return stopping_ || !queue_.empty(); });
      if (queue_.empty()) return;
      job = std::move(queue_.front());
      queue_.pop_front();
      tickets_.at(job.first).status = ExtractionStatus::running;
      changed_.notify_all();
    }
    Context ctx(*this, job.first);
    ordered_json out;
    std::optional<std::string> failure;
    try {
      out = job.second(ctx);
    } catch (const Error& e) {
      failure = e.code() + ": " + e.what();
    } catch (const std::exception& e) {
      failure = std::string("internal: ") + e.what();
    }
    std::lock_guard lock(mutex_);
    auto& t = tickets_.at(job.first);
    if (failure) {
      t.status = ExtractionStatus::failed;
      t.error = failure;
    } else {
      t.status = ExtractionStatus::done;
      t.progress = 1.0;
      if (out.is_object())
        for (auto it = out.begin(); it != out.end(); ++it) t.data[it.key()] = it.value();
    }
    changed_.notify_all();
  }
}

// ---------------------------------------------------------------- app

App::App(Config config, std::shared_ptr<Transport> transport, std::shared_ptr<Clock> clock,
         std::shared_ptr<SearchProvider> search)
    : config_(std::move(config)),
      store_(config_.store_root),
      definitions_(config_.definitions_dir),
      clock_(clock ? std::move(clock) : std::make_shared<SystemClock>()),
      fetcher_(transport ? std::move(transport)
                         : std::make_shared<SchemeTransport>(std::make_shared<FixtureTransport>(config_.fixtures_dir),
                                                             std::make_shared<HttpTransport>()),
               clock_, config_.fetch),
      search_(std::move(search)),
      jobs_(config_.job_workers) {}

SearchProvider& App::search_provider() {
  std::lock_guard lock(search_mutex_);
  if (!search_) {
    const auto& s = config_.search;
    if (s.provider == "fixture") {
      if (s.fixture_file.empty()) search_ = std::make_shared<ProviderFailure>("search.fixture_file is not configured");
      else search_ = std::make_shared<FixtureSearchProvider>(s.fixture_file);
    } else {
      const char* key = std::getenv(s.api_key_env.c_str());
      if (s.endpoint.empty()) search_ = std::make_shared<ProviderFailure>("search.endpoint is not configured");
      else search_ = std::make_shared<LiveSearchProvider>(s.endpoint, key ? key : "", config_.fetch.timeout);
    }
  }
  return *search_;
}

std::string App::health() {
  definitions_.refresh();
  ordered_json j = {{"status", "ok"},
                    {"definitions", definitions_.list().size()},
                    {"threads", store_.list_threads().size()}};
  if (auto err = definitions_.last_error()) j["definition_error"] = *err;
  return dump_document(j);
}

std::string App::fetch(const std::string& url) {
  ThreadExtraction ex = fetcher_.fetch_thread(url, definitions_);
  ordered_json diags = ordered_json::array();
  for (const auto& d : ex.diagnostics) diags.push_back(diagnostic_json(d));
  if (!ex.thread) {
    std::string detail;
    for (const auto& d : ex.diagnostics)
      if (d.is_error()) detail += (detail.empty() ? "" : ", ") + d.code + " (" + d.selector + ")";
    throw Error("extraction-failed", "definition produced no thread: " + detail);
  }
  PutThreadResult put = store_.put_thread(*ex.thread);
  ThreadFilter f;
  f.url_substring = ex.thread->source_url;
  ordered_json summary;
  for (const auto& s : store_.list_threads(f))
    if (s.thread_id == put.thread_id) summary = summary_json(s);
  return dump_document({{"thread_id", put.thread_id},
                        {"revision", put.revision},
                        {"created", put.created},
                        {"changed", put.changed},
                        {"thread", summary},
                        {"diagnostics", diags}});
}

std::string App::bulk_fetch(const std::string& keywords, int limit) {
  BulkOptions options;
  options.workers = config_.bulk_workers;
  definitions_.refresh();
  return dump_document(report_json(cwatch::bulk_fetch(keywords, limit, search_provider(), fetcher_, definitions_,
                                                      store_, options)));
}

std::string App::submit_bulk_fetch(const std::string& keywords, int limit) {
  if (keywords.find_first_not_of(" \t\r\n") == std::string::npos)
    throw Error("missing-field", "keywords must not be empty");
  if (limit < 1) throw Error("invalid-limit", "limit must be at least 1");
  std::string id = jobs_.submit(JobKind::bulk_fetch, [this, keywords, limit](JobContext& ctx) {
    BulkOptions options;
    options.workers = config_.bulk_workers;
    options.progress = [&ctx](int done, int total) { ctx.progress(total ? static_cast<double>(done) / total : 1.0); };
    definitions_.refresh();
    BulkFetchReport r =
        cwatch::bulk_fetch(keywords, limit, search_provider(), fetcher_, definitions_, store_, options);
    return ordered_json{{"report", report_json(r)}};
  });
  return dump_document(jobs_.get(id).to_json());
}

std::string App::job(const std::string& job_id) { return dump_document(jobs_.get(job_id).to_json()); }

std::string App::threads(const ThreadFilter& filter) {
  ordered_json list = ordered_json::array();
  for (const auto& s : store_.list_threads(filter)) list.push_back(summary_json(s));
  return dump_document({{"threads", list}});
}

std::string App::thread(const std::string& thread_id, const std::string& format) {
  CanonicalThread t = store_.get_thread(thread_id);
  if (format == "canonical") return serialize_canonical(t);
  if (format == "json") return thread_to_json(t, store_.thread_revision(thread_id));
  throw Error("unknown-format", "thread format must be json or canonical");
}

std::vector<CanonicalThread> App::load_threads(const CorpusSelection& corpus) {
  std::vector<CanonicalThread> out;
  for (const auto& id : corpus.thread_ids) out.push_back(store_.get_thread(id));
  return out;
}

App::Prepared App::prepare_extraction(const std::vector<std::string>& thread_ids, const std::string& algorithm,
                                      const std::map<std::string, std::string>& params) {
  auto alg = parse_algorithm(algorithm);
  if (!alg) throw Error("unknown-algorithm", "algorithm must be tng or ckp, got '" + algorithm + "'");
  if (thread_ids.empty()) throw Error("missing-field", "thread_ids must name at least one thread");
  CorpusSelection corpus;
  for (const auto& id : thread_ids) {
    if (!store_.has_thread(id)) throw Error("not-found", "no thread " + id);
    corpus.thread_ids.insert(id);
  }
  check_extraction_params(*alg, params);

  // Rejected here rather than in the job, so the caller gets a 422.
  TokenizedCorpus tokens = prepare_corpus(load_threads(corpus), parse_corpus_options(params));
  int K = *alg == Algorithm::tng ? parse_tng_params(params).K : parse_ckp_params(params).K;
  if (static_cast<std::size_t>(K) > tokens.documents.size())
    throw Error("invalid-parameter", "K=" + std::to_string(K) + " exceeds the " +
                                         std::to_string(tokens.documents.size()) + " non-empty posts of the corpus");

  ExtractionRecord rec;
  rec.corpus = corpus;
  rec.algorithm = *alg;
  rec.params = params;
  rec.created_at = clock_->now();
  std::string eid = store_.put_extraction(rec);

  std::string jid = jobs_.submit(
      JobKind::extraction,
      [this, eid](JobContext&) {
        ExtractionRecord r = store_.get_extraction(eid);
        store_.update_extraction_status(eid, ExtractionStatus::running);
        try {
          TopicResult result = cwatch::run_extraction(r.algorithm, load_threads(r.corpus), r.params);
          store_.update_extraction_status(eid, ExtractionStatus::done, std::move(result), std::nullopt,
                                          clock_->now());
        } catch (const Error& e) {
          store_.update_extraction_status(eid, ExtractionStatus::failed, std::nullopt, e.code() + ": " + e.what(),
                                          clock_->now());
          throw;
        }
        return ordered_json::object();
      },
      {{"extraction_id", eid}});
  return {eid, jid};
}

std::string App::submit_extraction(const std::vector<std::string>& thread_ids, const std::string& algorithm,
                                   const std::map<std::string, std::string>& params) {
  Prepared p = prepare_extraction(thread_ids, algorithm, params);
  return dump_document(jobs_.get(p.job_id).to_json());
}

std::string App::run_extraction(const std::vector<std::string>& thread_ids, const std::string& algorithm,
                                const std::map<std::string, std::string>& params) {
  Prepared p = prepare_extraction(thread_ids, algorithm, params);
  jobs_.wait(p.job_id);
  return p.extraction_id;
}

std::string App::extraction(const std::string& extraction_id) {
  return dump_document(record_json(store_.get_extraction(extraction_id)));
}

std::string App::extractions() {
  ordered_json list = ordered_json::array();
  for (const auto& r : store_.list_extractions()) list.push_back(record_json(r));
  return dump_document({{"extractions", list}});
}

ExtractionRecord App::finished_extraction(const std::string& extraction_id) {
  ExtractionRecord r = store_.get_extraction(extraction_id);
  if (r.status == ExtractionStatus::failed)
    throw Error("extraction-failed", "extraction " + extraction_id + " failed: " + r.error.value_or(""));
  if (r.status != ExtractionStatus::done)
    throw Error("not-ready", "extraction " + extraction_id + " is " + std::string(to_string(r.status)));
  return r;
}

std::string App::topics_view(const std::string& extraction_id) {
  return serialize_result(*finished_extraction(extraction_id).result);
}

std::string App::network_view(const std::string& extraction_id, const NetworkQuery& query) {
  if (query.format != "graphml" && query.format != "json")
    throw Error("unknown-format", "network format must be graphml or json");
  ExtractionRecord r = finished_extraction(extraction_id);
  SocialNetwork n = build_network(load_threads(r.corpus), r.result->assignments);
  if (query.topics) n = filter_by_topics(n, *query.topics, query.keep_isolated);
  return export_network(n, query.format);
}

std::string App::timeline_view(const std::string& extraction_id, const TimelineQuery& query) {
  if (query.intervals < 1) throw Error("invalid-parameter", "intervals must be at least 1");
  ExtractionRecord r = finished_extraction(extraction_id);
  return serialize_timeline(compute_timeline(load_threads(r.corpus), r.result->assignments, query.intervals,
                                             query.group_by));
}

std::string App::sources() {
  definitions_.refresh();
  ordered_json list = ordered_json::array();
  for (const auto& d : definitions_.list()) list.push_back(definition_json(d));
  ordered_json j = {{"sources", list}};
  if (auto err = definitions_.last_error()) j["error"] = *err;
  return dump_document(j);
}

std::string App::add_source(const std::string& definition_text, bool replace) {
  return dump_document(definition_json(definitions_.add(definition_text, replace)));
}

}  // namespace cwatch
