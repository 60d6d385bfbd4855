#include "cwatch/store.hpp"

#include <json.hpp>

#include <algorithm>
#include <charconv>
#include <mutex>

#include "cwatch/error.hpp"

namespace cwatch {

using nlohmann::json;

namespace {

constexpr std::string_view kStatusNames[] = {"pending", "running", "done", "failed"};

json timestamp_json(Timestamp t) { return format_iso8601(t); }

Timestamp timestamp_from(const json& j) {
  auto t = parse_iso8601(j.get<std::string>());
  if (!t) throw Error("store-format", "bad timestamp " + j.get<std::string>());
  return *t;
}

TimestampMs timestamp_ms_from(const json& j) {
  auto t = parse_iso8601_ms(j.get<std::string>());
  if (!t) throw Error("store-format", "bad timestamp " + j.get<std::string>());
  return *t;
}

json result_json(const TopicResult& r) {
  json j;
  j["algorithm"] = std::string(to_string(r.algorithm));
  j["seed"] = r.seed;
  j["params"] = r.params;
  j["topics"] = json::array();
  for (const auto& t : r.topics) {
    json exprs = json::array();
    for (const auto& e : t.expressions) exprs.push_back(json::array({e.text, e.score}));
    j["topics"].push_back({{"id", t.id}, {"label", t.label}, {"expressions", exprs}});
  }
  json assignments = json::object();
  for (const auto& [ref, ids] : r.assignments) assignments[ref.str()] = ids;
  j["assignments"] = assignments;
  j["internals"] = json::array();
  for (const auto& in : r.internals) {
    json centroid = json::array();
    for (const auto& [term, w] : in.centroid) centroid.push_back(json::array({term, w}));
    j["internals"].push_back({{"ngram_probabilities", in.ngram_probabilities}, {"centroid", centroid}});
  }
  return j;
}

TopicResult result_from(const json& j) {
  TopicResult r;
  auto algorithm = parse_algorithm(j.at("algorithm").get<std::string>());
  if (!algorithm) throw Error("store-format", "unknown algorithm");
  r.algorithm = *algorithm;
  r.seed = j.at("seed").get<std::uint64_t>();
  r.params = j.at("params").get<std::map<std::string, std::string>>();
  for (const auto& t : j.at("topics")) {
    Topic topic;
    topic.id = t.at("id").get<int>();
    topic.label = t.at("label").get<std::string>();
    for (const auto& e : t.at("expressions"))
      topic.expressions.push_back({e.at(0).get<std::string>(), e.at(1).get<double>()});
    r.topics.push_back(std::move(topic));
  }
  for (const auto& [key, ids] : j.at("assignments").items()) {
    auto ref = PostRef::parse(key);
    if (!ref) throw Error("store-format", "bad post reference " + key);
    r.assignments[*ref] = ids.get<std::set<int>>();
  }
  for (const auto& in : j.at("internals")) {
    TopicInternal internal;
    internal.ngram_probabilities = in.at("ngram_probabilities").get<std::map<std::string, double>>();
    for (const auto& c : in.at("centroid"))
      internal.centroid.emplace_back(c.at(0).get<std::string>(), c.at(1).get<double>());
    r.internals.push_back(std::move(internal));
  }
  return r;
}

ThreadSummary summarize(const CanonicalThread& t, int revision) {
  ThreadSummary s;
  auto stats = thread_statistics(t);
  s.thread_id = t.thread_id;
  s.title = t.title;
  s.site_id = t.site_id;
  s.source_url = t.source_url;
  s.post_count = stats.post_count;
  s.first_post = stats.first;
  s.last_post = stats.last;
  s.fetched_at = t.fetched_at;
  s.revision = revision;
  return s;
}

bool same_content(CanonicalThread a, CanonicalThread b) {
  a.fetched_at = b.fetched_at;
  a.thread_id = b.thread_id;
  return a == b;
}

}  // namespace

std::string_view to_string(ExtractionStatus s) { return kStatusNames[static_cast<int>(s)]; }

std::optional<ExtractionStatus> parse_extraction_status(std::string_view text) {
  for (int i = 0; i < 4; ++i)
    if (kStatusNames[i] == text) return static_cast<ExtractionStatus>(i);
  return std::nullopt;
}

bool is_terminal(ExtractionStatus s) { return s == ExtractionStatus::done || s == ExtractionStatus::failed; }

bool transition_allowed(ExtractionStatus from, ExtractionStatus to) {
  if (from == ExtractionStatus::pending) return to == ExtractionStatus::running;
  if (from == ExtractionStatus::running) return is_terminal(to);
  return false;
}

std::string thread_to_json(const CanonicalThread& t, int revision) {
  json j;
  j["revision"] = revision;
  j["id"] = t.thread_id;
  j["url"] = t.source_url;
  j["site"] = t.site_id;
  j["title"] = t.title;
  j["fetched_at"] = timestamp_json(t.fetched_at);
  j["posts"] = json::array();
  for (const auto& p : t.posts) {
    json pj = {{"id", p.post_id}, {"author", p.author}, {"timestamp", timestamp_json(p.timestamp)}};
    if (p.reply_to) pj["reply_to"] = *p.reply_to;
    pj["evidence"] = std::string(to_string(p.reply_evidence));
    pj["content"] = p.content;
    j["posts"].push_back(std::move(pj));
  }
  try {
    return j.dump(1);
  } catch (const json::exception& e) {
    throw Error("invalid-thread", std::string("thread text is not valid UTF-8: ") + e.what());
  }
}

CanonicalThread thread_from_json(std::string_view text, int* revision) {
  try {
    json j = json::parse(text);
    CanonicalThread t;
    t.thread_id = j.at("id").get<std::string>();
    t.source_url = j.at("url").get<std::string>();
    t.site_id = j.at("site").get<std::string>();
    t.title = j.at("title").get<std::string>();
    t.fetched_at = timestamp_from(j.at("fetched_at"));
    for (const auto& pj : j.at("posts")) {
      Post p;
      p.post_id = pj.at("id").get<std::string>();
      p.author = pj.at("author").get<std::string>();
      p.timestamp = timestamp_from(pj.at("timestamp"));
      if (pj.contains("reply_to")) p.reply_to = pj["reply_to"].get<std::string>();
      auto ev = parse_reply_evidence(pj.at("evidence").get<std::string>());
      if (!ev) throw Error("store-format", "bad reply evidence");
      p.reply_evidence = *ev;
      p.content = pj.at("content").get<std::string>();
      t.posts.push_back(std::move(p));
    }
    if (revision) *revision = j.at("revision").get<int>();
    return t;
  } catch (const json::exception& e) {
    throw Error("store-format", std::string("malformed thread record: ") + e.what());
  }
}

std::string extraction_to_json(const ExtractionRecord& r) {
  json j;
  j["id"] = r.extraction_id;
  j["corpus"] = r.corpus.thread_ids;
  j["algorithm"] = std::string(to_string(r.algorithm));
  j["params"] = r.params;
  j["status"] = std::string(to_string(r.status));
  if (r.error) j["error"] = *r.error;
  j["created_at"] = format_iso8601(r.created_at);
  if (r.finished_at) j["finished_at"] = format_iso8601(*r.finished_at);
  if (r.result) j["result"] = result_json(*r.result);
  try {
    return j.dump(1);
  } catch (const json::exception& e) {
    throw Error("invalid-record", std::string("record text is not valid UTF-8: ") + e.what());
  }
}

ExtractionRecord extraction_from_json(std::string_view text) {
  try {
    json j = json::parse(text);
    ExtractionRecord r;
    r.extraction_id = j.at("id").get<std::string>();
    r.corpus.thread_ids = j.at("corpus").get<std::set<std::string>>();
    auto algorithm = parse_algorithm(j.at("algorithm").get<std::string>());
    auto status = parse_extraction_status(j.at("status").get<std::string>());
    if (!algorithm || !status) throw Error("store-format", "bad algorithm or status");
    r.algorithm = *algorithm;
    r.status = *status;
    r.params = j.at("params").get<std::map<std::string, std::string>>();
    if (j.contains("error")) r.error = j["error"].get<std::string>();
    r.created_at = timestamp_ms_from(j.at("created_at"));
    if (j.contains("finished_at")) r.finished_at = timestamp_ms_from(j["finished_at"]);
    if (j.contains("result")) r.result = result_from(j["result"]);
    return r;
  } catch (const json::exception& e) {
    throw Error("store-format", std::string("malformed extraction record: ") + e.what());
  }
}

Store::Store(std::filesystem::path root) : root_(std::move(root)) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(root_ / "threads", ec);
  fs::create_directories(root_ / "extractions", ec);
  if (ec) throw Error("io", "cannot create store at " + root_.string() + ": " + ec.message());

  fs::path version_file = root_ / "STORE_VERSION";
  if (fs::exists(version_file)) {
    int version = -1;
    try {
      version = json::parse(read_file(version_file)).at("schema_version").get<int>();
    } catch (const json::exception&) {
    }
    if (version != kSchemaVersion)
      throw Error("schema-version", "store " + root_.string() + " has schema version " + std::to_string(version) +
                                        ", expected " + std::to_string(kSchemaVersion));
  } else {
    write_file_atomic(version_file, json{{"schema_version", kSchemaVersion}}.dump() + "\n");
  }

  for (const char* sub : {"threads", "extractions", ""}) {
    for (const auto& entry : fs::directory_iterator(root_ / sub)) {
      if (is_temp_file(entry.path())) fs::remove(entry.path(), ec);
    }
  }
  for (const auto& entry : fs::directory_iterator(root_ / "threads")) {
    if (entry.path().extension() != ".json") continue;
    int revision = 0;
    CanonicalThread t = thread_from_json(read_file(entry.path()), &revision);
    by_url_[t.source_url] = t.thread_id;
    threads_[t.thread_id] = Entry{summarize(t, revision)};
  }
  for (const auto& entry : fs::directory_iterator(root_ / "extractions")) {
    std::string stem = entry.path().stem().string();
    if (entry.path().extension() != ".json" || stem.size() < 2 || stem[0] != 'e') continue;
    std::uint64_t n = 0;
    auto [p, err] = std::from_chars(stem.data() + 1, stem.data() + stem.size(), n);
    if (err == std::errc() && p == stem.data() + stem.size()) next_extraction_ = std::max(next_extraction_, n + 1);
  }
}

std::filesystem::path Store::thread_path(const std::string& id) const { return root_ / "threads" / (id + ".json"); }

std::filesystem::path Store::extraction_path(const std::string& id) const {
  return root_ / "extractions" / (id + ".json");
}

void Store::write(const std::filesystem::path& path, const std::string& content) {
  write_file_atomic(path, content, hook_);
}

void Store::set_write_hook(WriteHook hook) {
  std::unique_lock lock(mutex_);
  hook_ = std::move(hook);
}

PutThreadResult Store::put_thread(const CanonicalThread& input) {
  auto violations = validate_thread(input);
  if (!violations.empty()) {
    std::string codes;
    for (const auto& v : violations) codes += (codes.empty() ? "" : ", ") + v.code;
    throw Error("invalid-thread", "thread " + input.thread_id + " is invalid: " + codes);
  }
  std::unique_lock lock(mutex_);
  CanonicalThread t = input;
  PutThreadResult out;
  if (auto it = by_url_.find(t.source_url); it != by_url_.end()) {
    t.thread_id = it->second;
    int revision = 0;
    CanonicalThread stored = thread_from_json(read_file(thread_path(t.thread_id)), &revision);
    out.thread_id = t.thread_id;
    if (same_content(stored, t)) {
      out.revision = revision;
      return out;
    }
    write(thread_path(t.thread_id), thread_to_json(t, revision + 1));
    threads_[t.thread_id] = Entry{summarize(t, revision + 1)};
    out.revision = revision + 1;
    out.changed = true;
    return out;
  }
  if (threads_.count(t.thread_id)) {
    std::string base = t.thread_id + "-" + fnv1a_hex(t.source_url).substr(0, 8);
    t.thread_id = base;
    for (int n = 2; threads_.count(t.thread_id); ++n) t.thread_id = base + "-" + std::to_string(n);
  }
  write(thread_path(t.thread_id), thread_to_json(t, 1));
  threads_[t.thread_id] = Entry{summarize(t, 1)};
  by_url_[t.source_url] = t.thread_id;
  out.thread_id = t.thread_id;
  out.revision = 1;
  out.created = true;
  out.changed = true;
  return out;
}

CanonicalThread Store::get_thread(const std::string& thread_id) const {
  std::shared_lock lock(mutex_);
  if (!threads_.count(thread_id)) throw Error("not-found", "unknown thread " + thread_id);
  return thread_from_json(read_file(thread_path(thread_id)));
}

std::optional<std::string> Store::find_thread_by_url(const std::string& source_url) const {
  std::shared_lock lock(mutex_);
  auto it = by_url_.find(source_url);
  if (it == by_url_.end()) return std::nullopt;
  return it->second;
}

bool Store::has_thread(const std::string& thread_id) const {
  std::shared_lock lock(mutex_);
  return threads_.count(thread_id) > 0;
}

int Store::thread_revision(const std::string& thread_id) const {
  std::shared_lock lock(mutex_);
  auto it = threads_.find(thread_id);
  if (it == threads_.end()) throw Error("not-found", "unknown thread " + thread_id);
  return it->second.summary.revision;
}

std::vector<ThreadSummary> Store::list_threads(const ThreadFilter& filter) const {
  std::shared_lock lock(mutex_);
  std::vector<ThreadSummary> out;
  for (const auto& [id, entry] : threads_) {
    const auto& s = entry.summary;
    if (filter.site_id && s.site_id != *filter.site_id) continue;
    if (filter.url_substring && s.source_url.find(*filter.url_substring) == std::string::npos) continue;
    if (filter.from && (!s.last_post || *s.last_post < *filter.from)) continue;
    if (filter.to && (!s.first_post || *s.first_post > *filter.to)) continue;
    out.push_back(s);
  }
  std::sort(out.begin(), out.end(), [](const ThreadSummary& a, const ThreadSummary& b) {
    if (a.fetched_at != b.fetched_at) return a.fetched_at > b.fetched_at;
    return a.thread_id < b.thread_id;
  });
  return out;
}

void Store::check_record(const ExtractionRecord& r) const {
  if (r.corpus.thread_ids.empty()) throw Error("invalid-record", "extraction corpus is empty");
  for (const auto& id : r.corpus.thread_ids)
    if (!threads_.count(id)) throw Error("not-found", "extraction references unknown thread " + id);
  if (r.result.has_value() != (r.status == ExtractionStatus::done))
    throw Error("invalid-record", "result must be present exactly when status is done");
  if (r.finished_at.has_value() != is_terminal(r.status))
    throw Error("invalid-record", "finished_at must be present exactly when status is done or failed");
}

std::string Store::put_extraction(ExtractionRecord record) {
  std::unique_lock lock(mutex_);
  check_record(record);
  if (record.extraction_id.empty()) {
    do {
      char buf[32];
      std::snprintf(buf, sizeof buf, "e%06llu", static_cast<unsigned long long>(next_extraction_++));
      record.extraction_id = buf;
    } while (std::filesystem::exists(extraction_path(record.extraction_id)));
  } else if (std::filesystem::exists(extraction_path(record.extraction_id))) {
    throw Error("conflict", "extraction id already in use: " + record.extraction_id);
  }
  write(extraction_path(record.extraction_id), extraction_to_json(record));
  return record.extraction_id;
}

ExtractionRecord Store::get_extraction(const std::string& extraction_id) const {
  std::shared_lock lock(mutex_);
  auto path = extraction_path(extraction_id);
  if (extraction_id.empty() || extraction_id.find('/') != std::string::npos || !std::filesystem::exists(path))
    throw Error("not-found", "unknown extraction " + extraction_id);
  return extraction_from_json(read_file(path));
}

std::vector<ExtractionRecord> Store::list_extractions() const {
  std::shared_lock lock(mutex_);
  std::vector<ExtractionRecord> out;
  for (const auto& entry : std::filesystem::directory_iterator(root_ / "extractions"))
    if (entry.path().extension() == ".json" && !is_temp_file(entry.path()))
      out.push_back(extraction_from_json(read_file(entry.path())));
  std::sort(out.begin(), out.end(),
            [](const ExtractionRecord& a, const ExtractionRecord& b) { return a.extraction_id < b.extraction_id; });
  return out;
}

ExtractionRecord Store::update_extraction_status(const std::string& extraction_id, ExtractionStatus to,
                                                 std::optional<TopicResult> result, std::optional<std::string> error,
                                                 std::optional<TimestampMs> now) {
  std::unique_lock lock(mutex_);
  auto path = extraction_path(extraction_id);
  if (extraction_id.empty() || extraction_id.find('/') != std::string::npos || !std::filesystem::exists(path))
    throw Error("not-found", "unknown extraction " + extraction_id);
  ExtractionRecord r = extraction_from_json(read_file(path));
  if (!transition_allowed(r.status, to))
    throw Error("illegal-transition", "extraction " + extraction_id + ": " + std::string(to_string(r.status)) +
                                          " -> " + std::string(to_string(to)));
  if (to == ExtractionStatus::done && !result) throw Error("invalid-record", "done requires a result");
  r.status = to;
  if (to == ExtractionStatus::done) r.result = std::move(result);
  if (error) r.error = std::move(error);
  if (is_terminal(to)) {
    r.finished_at = now.value_or(
        std::chrono::time_point_cast<std::chrono::milliseconds>(std::chrono::system_clock::now()));
  }
  write(path, extraction_to_json(r));
  return r;
}

}  // namespace cwatch
