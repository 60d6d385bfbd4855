#include <doctest.h>

#include <algorithm>

#include "cwatch/canonical.hpp"
#include "cwatch/error.hpp"
#include "cwatch/store.hpp"
#include "support.hpp"

using namespace cwatch;
using testing::at;
using testing::post;

namespace {

std::string error_code(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  return "";
}

struct Crash {};

TopicResult small_result(const std::string& thread_id) {
  TopicResult r;
  r.algorithm = Algorithm::ckp;
  r.params = {{"K", "2"}, {"beta", "0.8"}};
  r.seed = 42;
  r.topics = {{0, "topic #0", {{"battery", 0.75}, {"range", 0.1}}}, {1, "topic #1", {{"winter tyres", 1.0 / 3}}}};
  r.assignments[{thread_id, "p1"}] = {0};
  r.assignments[{thread_id, "p2"}] = {0, 1};
  r.internals = {{{}, {{"battery", 0.8}, {"range", 0.6}}}, {{}, {{"winter", 1.0}}}};
  return r;
}

ExtractionRecord pending_record(const std::string& thread_id) {
  ExtractionRecord r;
  r.corpus.thread_ids = {thread_id};
  r.algorithm = Algorithm::ckp;
  r.params = {{"K", "2"}};
  r.created_at = TimestampMs{std::chrono::milliseconds{1363219200123}};
  return r;
}

std::vector<std::string> files_in(const std::filesystem::path& dir) {
  std::vector<std::string> out;
  for (const auto& e : std::filesystem::directory_iterator(dir)) out.push_back(e.path().filename().string());
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace

TEST_SUITE("store") {

TEST_CASE("generated threads round-trip through a reopened store") {
  testing::TempDir dir;
  std::mt19937_64 rng(3);
  std::vector<CanonicalThread> threads;
  {
    Store store(dir.path());
    for (int i = 0; i < 100; ++i) {
      threads.push_back(testing::random_thread(rng, i));
      auto r = store.put_thread(threads.back());
      CHECK(r.created);
      CHECK(r.thread_id == threads.back().thread_id);
    }
  }
  Store reopened(dir.path());
  CHECK(reopened.list_threads().size() == threads.size());
  for (const auto& t : threads) {
    CHECK(reopened.get_thread(t.thread_id) == t);
    CHECK(reopened.find_thread_by_url(t.source_url) == t.thread_id);
  }
}

TEST_CASE("re-fetching is idempotent and changes bump the revision") {
  testing::TempDir dir;
  Store store(dir.path());
  auto t = deserialize_canonical(testing::fixture_text("golden/sitea/thread1.xml"));
  auto first = store.put_thread(t);
  CHECK(first.created);
  CHECK(first.revision == 1);

  auto later = t;
  later.fetched_at = at("2014-01-01T00:00:00Z");
  auto same = store.put_thread(later);
  CHECK_FALSE(same.changed);
  CHECK(same.revision == 1);
  CHECK(store.list_threads().size() == 1);

  auto grown = t;
  grown.posts.push_back(post("p7", "Julie", "2013-03-15T09:00:00Z", "One more reply", "p6"));
  auto bumped = store.put_thread(grown);
  CHECK(bumped.changed);
  CHECK_FALSE(bumped.created);
  CHECK(bumped.revision == 2);
  CHECK(store.get_thread(t.thread_id).posts.size() == 7);
  CHECK(store.thread_revision(t.thread_id) == 2);

  // Same id from another url gets a suffixed id.
  auto elsewhere = t;
  elsewhere.source_url = "https://mirror.example/t/1";
  auto other = store.put_thread(elsewhere);
  CHECK(other.created);
  CHECK(other.thread_id != t.thread_id);
  CHECK(other.thread_id.rfind(t.thread_id + "-", 0) == 0);

  auto bad = t;
  bad.title.clear();
  CHECK(error_code([&] { store.put_thread(bad); }) == "invalid-thread");
}

TEST_CASE("extraction records round-trip and follow the state machine") {
  testing::TempDir dir;
  Store store(dir.path());
  std::mt19937_64 rng(1);
  auto t = testing::random_thread(rng, 0);
  store.put_thread(t);

  std::string id = store.put_extraction(pending_record(t.thread_id));
  CHECK(id == "e000001");
  auto pending = store.get_extraction(id);
  CHECK(pending.status == ExtractionStatus::pending);
  CHECK(pending.created_at == TimestampMs{std::chrono::milliseconds{1363219200123}});

  CHECK(error_code([&] { store.update_extraction_status(id, ExtractionStatus::done, small_result(t.thread_id)); }) ==
        "illegal-transition");
  store.update_extraction_status(id, ExtractionStatus::running);
  CHECK(error_code([&] { store.update_extraction_status(id, ExtractionStatus::done); }) == "invalid-record");
  auto now = TimestampMs{std::chrono::milliseconds{1363219300000}};
  auto done = store.update_extraction_status(id, ExtractionStatus::done, small_result(t.thread_id), std::nullopt, now);
  CHECK(done.finished_at == now);
  CHECK(error_code([&] { store.update_extraction_status(id, ExtractionStatus::failed); }) == "illegal-transition");

  Store reopened(dir.path());
  auto loaded = reopened.get_extraction(id);
  CHECK(loaded == done);
  CHECK(loaded.result == small_result(t.thread_id));
  CHECK(reopened.put_extraction(pending_record(t.thread_id)) == "e000002");

  for (auto from : {ExtractionStatus::pending, ExtractionStatus::running, ExtractionStatus::done,
                    ExtractionStatus::failed}) {
    for (auto to : {ExtractionStatus::pending, ExtractionStatus::running, ExtractionStatus::done,
                    ExtractionStatus::failed}) {
      bool expected = (from == ExtractionStatus::pending && to == ExtractionStatus::running) ||
                      (from == ExtractionStatus::running && is_terminal(to));
      CHECK(transition_allowed(from, to) == expected);
    }
  }
}

TEST_CASE("records must reference stored threads and respect status fields") {
  testing::TempDir dir;
  Store store(dir.path());
  CHECK(error_code([&] { store.put_extraction(pending_record("t-missing")); }) == "not-found");
  CHECK(error_code([&] { store.get_extraction("e999999"); }) == "not-found");
  CHECK(error_code([&] { store.get_extraction("../x"); }) == "not-found");
  CHECK(error_code([&] { store.get_thread("nope"); }) == "not-found");

  auto t = testing::thread("t1", "sitea", {post("p1", "A", "2013-01-01T00:00:00Z", "x")});
  store.put_thread(t);
  auto r = pending_record("t1");
  r.finished_at = r.created_at;
  CHECK(error_code([&] { store.put_extraction(r); }) == "invalid-record");
  r = pending_record("t1");
  r.result = small_result("t1");
  CHECK(error_code([&] { store.put_extraction(r); }) == "invalid-record");
  r = pending_record("t1");
  r.corpus.thread_ids.clear();
  CHECK(error_code([&] { store.put_extraction(r); }) == "invalid-record");

  r = pending_record("t1");
  r.extraction_id = "mine";
  CHECK(store.put_extraction(r) == "mine");
  CHECK(error_code([&] { store.put_extraction(r); }) == "conflict");
}

TEST_CASE("an interrupted write leaves the previous state readable") {
  testing::TempDir dir;
  auto t = deserialize_canonical(testing::fixture_text("golden/sitea/thread1.xml"));
  std::string record_id;
  {
    Store store(dir.path());
    store.put_thread(t);
    record_id = store.put_extraction(pending_record(t.thread_id));

    store.set_write_hook([](const auto&, const auto&) { throw Crash{}; });
    auto grown = t;
    grown.posts.push_back(post("p7", "Julie", "2013-03-15T09:00:00Z", "lost", "p6"));
    CHECK_THROWS_AS(store.put_thread(grown), Crash);
    CHECK_THROWS_AS(store.update_extraction_status(record_id, ExtractionStatus::running), Crash);
    auto fresh = testing::thread("t2", "siteb", {post("p1", "B", "2013-01-01T00:00:00Z", "y")});
    CHECK_THROWS_AS(store.put_thread(fresh), Crash);
    // Temp files from the aborted writes are on disk.
    auto names = files_in(dir / "threads");
    CHECK(std::any_of(names.begin(), names.end(), [](const std::string& n) { return is_temp_file(n); }));
  }
  Store reopened(dir.path());
  CHECK(reopened.get_thread(t.thread_id) == t);
  CHECK(reopened.thread_revision(t.thread_id) == 1);
  CHECK_FALSE(reopened.has_thread("t2"));
  CHECK(reopened.get_extraction(record_id).status == ExtractionStatus::pending);
  CHECK(files_in(dir / "threads") == std::vector<std::string>{t.thread_id + ".json"});
  CHECK(files_in(dir / "extractions") == std::vector<std::string>{record_id + ".json"});
}

TEST_CASE("thread listing filters") {
  testing::TempDir dir;
  Store store(dir.path());
  auto a = testing::thread("ta", "sitea",
                           {post("p1", "A", "2013-01-01T00:00:00Z", "x"), post("p2", "B", "2013-01-10T00:00:00Z", "y")});
  auto b = testing::thread("tb", "siteb", {post("p1", "A", "2013-02-01T00:00:00Z", "x")});
  b.fetched_at = at("2013-07-01T00:00:00Z");
  store.put_thread(a);
  store.put_thread(b);

  auto all = store.list_threads();
  REQUIRE(all.size() == 2);
  CHECK(all[0].thread_id == "tb");  // newest fetch first
  CHECK(all[1].post_count == 2);

  ThreadFilter by_site;
  by_site.site_id = "sitea";
  CHECK(store.list_threads(by_site).size() == 1);

  ThreadFilter by_url;
  by_url.url_substring = "siteb.example";
  CHECK(store.list_threads(by_url).front().thread_id == "tb");

  ThreadFilter range;
  range.from = at("2013-01-05T00:00:00Z");
  range.to = at("2013-01-20T00:00:00Z");
  auto hits = store.list_threads(range);
  REQUIRE(hits.size() == 1);
  CHECK(hits[0].thread_id == "ta");

  range.from = at("2013-01-10T00:00:00Z");
  range.to = at("2013-02-01T00:00:00Z");
  CHECK(store.list_threads(range).size() == 2);  // both bounds inclusive
}

TEST_CASE("a store with another schema version is refused") {
  testing::TempDir dir;
  { Store store(dir.path()); }
  write_file_atomic(dir / "STORE_VERSION", "{\"schema_version\": 99}\n");
  CHECK(error_code([&] { Store again(dir.path()); }) == "schema-version");
}

}
