#include <doctest.h>

#include <map>
#include <mutex>
#include <thread>

#include "cwatch/bulk.hpp"
#include "cwatch/canonical.hpp"
#include "cwatch/error.hpp"
#include "cwatch/fetch.hpp"
#include "support.hpp"

using namespace cwatch;
using std::chrono::milliseconds;

namespace {

// Serves scripted statuses per path and records when each request started.
class ScriptedTransport : public Transport {
 public:
  explicit ScriptedTransport(Clock& clock) : clock_(clock) {}

  void script(const std::string& path, std::vector<int> statuses) { scripts_[path] = std::move(statuses); }

  HttpResponse get(const Url& url, const FetchPolicy&) override {
    std::lock_guard lock(mutex_);
    starts_[url.host].push_back(clock_.now());
    ++calls_[url.path];
    auto& s = scripts_[url.path];
    int status = 200;
    if (!s.empty()) {
      status = s.front();
      if (s.size() > 1) s.erase(s.begin());
    }
    return {status, status == 200 ? "<html><body>ok</body></html>" : "", std::nullopt};
  }

  int calls(const std::string& path) {
    std::lock_guard lock(mutex_);
    return calls_[path];
  }
  std::map<std::string, std::vector<Clock::time_point>> starts() {
    std::lock_guard lock(mutex_);
    return starts_;
  }

 private:
  Clock& clock_;
  std::mutex mutex_;
  std::map<std::string, std::vector<int>> scripts_;
  std::map<std::string, int> calls_;
  std::map<std::string, std::vector<Clock::time_point>> starts_;
};

FetchPolicy quick_policy() {
  FetchPolicy p;
  p.per_host_min_delay = milliseconds(0);
  return p;
}

Fetcher fixture_fetcher(FetchPolicy policy = quick_policy()) {
  return Fetcher(std::make_shared<FixtureTransport>(testing::fixtures() / "pages"), std::make_shared<VirtualClock>(),
                 policy);
}

std::string error_code(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  return "";
}

class ListProvider : public SearchProvider {
 public:
  explicit ListProvider(std::vector<std::string> urls) : urls_(std::move(urls)) {}
  std::vector<std::string> search(const std::string&, int limit) override {
    std::vector<std::string> out(urls_.begin(), urls_.begin() + std::min<std::size_t>(limit, urls_.size()));
    return out;
  }

 private:
  std::vector<std::string> urls_;
};

}  // namespace

TEST_SUITE("fetch") {

TEST_CASE("fixture pages pass through unchanged") {
  auto f = fixture_fetcher();
  RawPage p = f.fetch_page("fixture://siteA/thread1.html");
  CHECK(p.body == testing::fixture_text("pages/sitea/thread1.html"));
  CHECK(p.url == "fixture://sitea/thread1.html");
  CHECK(error_code([&] { f.fetch_page("fixture://sitea/missing.html"); }) == "http-status");
  CHECK(error_code([&] { f.fetch_page("fixture://sitea/../secret"); }) == "http-status");
  CHECK(error_code([&] { f.fetch_page("not a url"); }) == "invalid-url");
}

TEST_CASE("transient failures are retried with backoff, then reported") {
  auto clock = std::make_shared<VirtualClock>();
  auto transport = std::make_shared<ScriptedTransport>(*clock);
  FetchPolicy policy = quick_policy();
  policy.max_retries = 2;
  Fetcher f(transport, clock, policy);

  transport->script("/always500", {500, 500, 500});
  auto t0 = clock->now();
  try {
    f.fetch_page("https://h.example/always500");
    FAIL("expected failure");
  } catch (const FetchError& e) {
    CHECK(e.code() == "http-status");
    CHECK(e.status() == 500);
  }
  CHECK(transport->calls("/always500") == 3);
  CHECK(clock->now() - t0 >= milliseconds(500 + 1000));

  transport->script("/flaky", {503, 200});
  CHECK(f.fetch_page("https://h.example/flaky").body.find("ok") != std::string::npos);
  CHECK(transport->calls("/flaky") == 2);

  transport->script("/gone", {404});
  CHECK(error_code([&] { f.fetch_page("https://h.example/gone"); }) == "http-status");
  CHECK(transport->calls("/gone") == 1);
}

TEST_CASE("requests to one host are spaced by the politeness delay") {
  auto clock = std::make_shared<VirtualClock>();
  auto transport = std::make_shared<ScriptedTransport>(*clock);
  FetchPolicy policy = quick_policy();
  policy.per_host_min_delay = milliseconds(1000);
  Fetcher f(transport, clock, policy);

  f.fetch_page("https://a.example/1");
  f.fetch_page("https://a.example/2");
  auto starts = transport->starts()["a.example"];
  REQUIRE(starts.size() == 2);
  CHECK(starts[1] - starts[0] >= milliseconds(1000));

  // Concurrent callers over several hosts.
  std::vector<std::thread> workers;
  for (int w = 0; w < 4; ++w)
    workers.emplace_back([&f, w] {
      for (int i = 0; i < 5; ++i) f.fetch_page("https://" + std::string(1, static_cast<char>('b' + (w + i) % 3)) + ".example/" + std::to_string(i));
    });
  for (auto& t : workers) t.join();
  for (auto& [host, times] : transport->starts()) {
    std::sort(times.begin(), times.end());
    for (std::size_t i = 1; i < times.size(); ++i) CHECK(times[i] - times[i - 1] >= milliseconds(1000));
  }
}

TEST_CASE("two-page thread concatenates both pages in order") {
  auto f = fixture_fetcher();
  DefinitionRegistry defs(testing::fixtures() / "definitions");
  auto ex = f.fetch_thread("fixture://siteA/thread3.html#top", defs);
  REQUIRE(ex.thread);
  CHECK(ex.thread->source_url == "fixture://sitea/thread3.html");
  CHECK(ex.thread->posts.size() == 7);
  CHECK(testing::matches_golden("sitea/thread3.xml", serialize_canonical(*ex.thread)));
}

TEST_CASE("single-page fetch equals apply_definition plus mention resolution") {
  auto f = fixture_fetcher();
  DefinitionRegistry defs(testing::fixtures() / "definitions");
  for (const char* site : {"sitea", "siteb", "sitec"}) {
    for (const char* page : {"thread1", "thread2"}) {
      auto ex = f.fetch_thread(std::string("fixture://") + site + "/" + page + ".html", defs);
      REQUIRE(ex.thread);
      CHECK(testing::matches_golden(std::string(site) + "/" + page + ".xml", serialize_canonical(*ex.thread)));
    }
  }
}

TEST_CASE("unsupported hosts and the page cap") {
  DefinitionRegistry defs(testing::fixtures() / "definitions");
  auto f = fixture_fetcher();
  CHECK(error_code([&] { f.fetch_thread("https://elsewhere.example/t", defs); }) == "unsupported-site");

  FetchPolicy capped = quick_policy();
  capped.max_pages_per_thread = 1;
  auto g = fixture_fetcher(capped);
  auto ex = g.fetch_thread("fixture://sitea/thread3.html", defs);
  REQUIRE(ex.thread);
  CHECK(ex.thread->posts.size() == 4);
  bool warned = false;
  for (const auto& d : ex.diagnostics) warned = warned || d.code == "page-cap-reached";
  CHECK(warned);
}

TEST_CASE("source urls lose their fragment") {
  CHECK(normalize_source_url("https://Forum.Example.org/t/1#post-3") == "https://forum.example.org/t/1");
  CHECK(error_code([] { normalize_source_url("/relative"); }) == "invalid-url");
}

TEST_CASE("bulk fetch report from the fixture search file") {
  testing::TempDir dir;
  Store store(dir.path());
  DefinitionRegistry defs(testing::fixtures() / "definitions");
  auto f = fixture_fetcher();
  FixtureSearchProvider provider(testing::fixtures() / "search/results.txt");

  auto report = bulk_fetch("solar", 20, provider, f, defs, store);
  CHECK(report.urls_found == 5);
  CHECK(report.urls_supported == 3);
  CHECK(report.threads_stored.size() == 3);
  CHECK(report.failures.empty());
  CHECK(store.list_threads().size() == 3);

  // A second run stores nothing new.
  auto again = bulk_fetch("solar", 20, provider, f, defs, store);
  CHECK(again == report);
  CHECK(store.list_threads().size() == 3);

  auto two = bulk_fetch("solar", 2, provider, f, defs, store);
  CHECK(two.urls_found == 2);
  CHECK(two.urls_supported == 1);

  CHECK(error_code([&] { bulk_fetch("solar", 0, provider, f, defs, store); }) == "invalid-limit");
}

TEST_CASE("bulk fetch isolates failures") {
  testing::TempDir dir;
  Store store(dir.path());
  DefinitionRegistry defs(testing::fixtures() / "definitions");
  auto f = fixture_fetcher();

  ListProvider none({});
  auto empty = bulk_fetch("x", 5, none, f, defs, store);
  CHECK(empty == BulkFetchReport{"x", 0, 0, {}, {}});

  ListProvider mixed({"fixture://sitea/missing.html", "fixture://sitec/thread2.html"});
  auto r = bulk_fetch("x", 5, mixed, f, defs, store);
  CHECK(r.urls_found == 2);
  CHECK(r.urls_supported == 2);
  CHECK(r.threads_stored.size() == 1);
  REQUIRE(r.failures.size() == 1);
  CHECK(r.failures[0].first == "fixture://sitea/missing.html");
  CHECK(r.failures[0].second.rfind("http-status", 0) == 0);
}

TEST_CASE("search API responses") {
  CHECK(parse_search_response(R"({"webPages":{"value":[{"url":"https://a/"},{"url":"https://b/"}]}})") ==
        std::vector<std::string>{"https://a/", "https://b/"});
  CHECK(parse_search_response(R"({"results":[{"url":"https://c/"}]})") == std::vector<std::string>{"https://c/"});
  CHECK(parse_search_response(R"(["https://d/"])") == std::vector<std::string>{"https://d/"});
  CHECK(error_code([] { parse_search_response("{oops"); }) == "search-provider");
}

}
