#include <doctest.h>

#include "cwatch/canonical.hpp"
#include "cwatch/error.hpp"
#include "cwatch/timeline.hpp"
#include "cwatch/topics.hpp"
#include "support.hpp"

using namespace cwatch;
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

std::vector<CanonicalThread> fixture_threads() {
  std::vector<CanonicalThread> out;
  for (const char* name : {"sitea/thread1", "sitea/thread2", "sitea/thread3", "sitec/thread1", "sitec/thread2"})
    out.push_back(deserialize_canonical(testing::fixture_text(std::string("golden/") + name + ".xml")));
  return out;
}

long long assigned_pairs(const std::vector<CanonicalThread>& threads, const std::map<PostRef, std::set<int>>& a) {
  long long n = 0;
  for (const auto& t : threads)
    for (const auto& p : t.posts) {
      auto it = a.find({t.thread_id, p.post_id});
      if (it != a.end()) n += static_cast<long long>(it->second.size());
    }
  return n;
}

}  // namespace

TEST_SUITE("timeline") {

TEST_CASE("four posts at both ends split evenly over two intervals") {
  auto t = testing::thread("t1", "s",
                           {post("p1", "A", "2013-01-01T00:00:00Z", "x"), post("p2", "B", "2013-01-01T00:00:00Z", "x"),
                            post("p3", "A", "2013-01-03T00:00:00Z", "x"), post("p4", "B", "2013-01-03T00:00:00Z", "x")});
  std::map<PostRef, std::set<int>> a;
  for (const auto& p : t.posts) a[{"t1", p.post_id}] = {0};
  auto s = compute_timeline({t}, a, 2, GroupBy::forum);
  CHECK(s.groups.at("t1").at(0) == std::vector<int>{2, 2});
  CHECK(format_iso8601(s.intervals[1].start) == "2013-01-02T00:00:00Z");
  CHECK(format_iso8601(s.intervals[1].end) == "2013-01-03T00:00:00Z");
}

TEST_CASE("a single post lands in the first interval") {
  auto t = testing::thread("t1", "s", {post("p1", "A", "2013-01-01T00:00:00Z", "x"),
                                       post("p2", "B", "2013-01-02T00:00:00Z", "unassigned")});
  std::map<PostRef, std::set<int>> a;
  a[{"t1", "p1"}] = {3};
  auto s = compute_timeline({t}, a, 5, GroupBy::forum);
  CHECK(s.groups.at("t1").at(3) == std::vector<int>{1, 0, 0, 0, 0});
  // The span only covers assigned posts.
  for (const auto& iv : s.intervals) CHECK(iv.start == iv.end);
}

TEST_CASE("argument checks") {
  auto t = testing::thread("t1", "s", {post("p1", "A", "2013-01-01T00:00:00Z", "x")});
  std::map<PostRef, std::set<int>> a;
  a[{"t1", "p1"}] = {0};
  CHECK(error_code([&] { compute_timeline({t}, a, 0, GroupBy::forum); }) == "invalid-parameter");
  CHECK(error_code([&] { compute_timeline({t}, {}, 3, GroupBy::forum); }) == "empty-series");
  CHECK(error_code([] { parse_group_by("thread"); }) == "invalid-parameter");
}

TEST_CASE("interval boundaries refine when the count doubles") {
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 2000; ++trial) {
    long long span = static_cast<long long>(rng() % 100000000);
    int n = 1 + static_cast<int>(rng() % 40);
    long long u = span ? static_cast<long long>(rng() % (span + 1)) : 0;
    TimestampMs t0{std::chrono::milliseconds{1363219200000}};
    TimestampMs t = t0 + std::chrono::milliseconds(u);
    int i = interval_index(t, t0, span, n);
    CHECK(i >= 0);
    CHECK(i < n);
    CHECK(interval_index(t, t0, span, 2 * n) / 2 == i);
  }
}

TEST_CASE("counts on the fixture corpus are conserved and refine") {
  auto threads = fixture_threads();
  auto r = run_extraction(Algorithm::tng, threads, {{"K", "3"}, {"iterations", "60"}, {"seed", "7"}});
  const long long pairs = assigned_pairs(threads, r.assignments);
  REQUIRE(pairs > 0);
  for (auto g : {GroupBy::forum, GroupBy::site}) {
    for (int n : {1, 2, 3, 4, 5, 7, 8, 10, 24}) {
      auto s = compute_timeline(threads, r.assignments, n, g);
      CHECK(s.total() == pairs);
      auto fine = compute_timeline(threads, r.assignments, 2 * n, g);
      for (const auto& [group, topics] : s.groups)
        for (const auto& [topic, counts] : topics) {
          REQUIRE(counts.size() == static_cast<std::size_t>(n));
          const auto& f = fine.groups.at(group).at(topic);
          for (int i = 0; i < n; ++i) CHECK(counts[i] == f[2 * i] + f[2 * i + 1]);
        }
      // Every group carries every topic.
      for (const auto& [group, topics] : s.groups) CHECK(topics.size() == s.groups.begin()->second.size());
      CHECK(parse_timeline(serialize_timeline(s)) == s);
    }
  }
  auto by_site = compute_timeline(threads, r.assignments, 4, GroupBy::site);
  CHECK(by_site.groups.size() == 2);
  CHECK(testing::matches_golden("timeline/fixture-tng-site-4.tsv", serialize_timeline(by_site)));
}

TEST_CASE("conservation on random corpora with overlapping assignments") {
  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<CanonicalThread> threads;
    std::map<PostRef, std::set<int>> a;
    for (int i = 0; i < 4; ++i) {
      auto t = testing::random_thread(rng, trial * 10 + i);
      for (const auto& p : t.posts) {
        std::set<int> ids;
        for (int k = 0; k < 3; ++k)
          if (rng() % 3 == 0) ids.insert(k);
        if (!ids.empty()) a[{t.thread_id, p.post_id}] = ids;
      }
      threads.push_back(t);
    }
    if (a.empty()) continue;
    int n = 1 + static_cast<int>(rng() % 20);
    auto s = compute_timeline(threads, a, n, trial % 2 ? GroupBy::site : GroupBy::forum);
    CHECK(s.total() == assigned_pairs(threads, a));
    CHECK(parse_timeline(serialize_timeline(s)) == s);
  }
}

TEST_CASE("malformed series documents") {
  CHECK(error_code([] { parse_timeline(""); }) == "timeline-format");
  CHECK(error_code([] { parse_timeline("# group_by=forum intervals=2\nbad\n"); }) == "timeline-format");
}

}
