#include <doctest.h>

#include <json.hpp>

#include <atomic>

#include "cwatch/app.hpp"
#include "cwatch/http_server.hpp"
#include "support.hpp"

using namespace cwatch;
using nlohmann::json;

namespace {

Config test_config(const testing::TempDir& dir) {
  Config c;
  c.store_root = dir / "store";
  c.definitions_dir = dir / "definitions";
  c.fixtures_dir = testing::fixtures() / "pages";
  c.search.fixture_file = testing::fixtures() / "search/results.txt";
  c.fetch.per_host_min_delay = std::chrono::milliseconds(0);
  std::filesystem::create_directories(c.definitions_dir);
  for (const char* site : {"sitea", "siteb", "sitec"})
    std::filesystem::copy_file(testing::fixtures() / "definitions" / (std::string(site) + ".ini"),
                               c.definitions_dir / (std::string(site) + ".ini"));
  return c;
}

ApiResponse get(App& app, const std::string& path, std::map<std::string, std::string> query = {}) {
  return dispatch(app, {"GET", path, std::move(query), "", ""});
}

ApiResponse post_json(App& app, const std::string& path, const json& body) {
  return dispatch(app, {"POST", path, {}, body.dump(), "application/json"});
}

std::string error_of(const ApiResponse& r) { return json::parse(r.body).value("error", ""); }

}  // namespace

TEST_SUITE("app") {

TEST_CASE("status codes for fetch requests") {
  testing::TempDir dir;
  App app(test_config(dir), nullptr, std::make_shared<VirtualClock>());

  auto ok = post_json(app, "/api/fetch", {{"url", "fixture://sitea/thread1.html"}});
  CHECK(ok.status == 201);
  auto doc = json::parse(ok.body);
  CHECK(doc["created"] == true);
  CHECK(doc["thread"]["post_count"] == 6);

  auto again = post_json(app, "/api/fetch", {{"url", "fixture://sitea/thread1.html"}});
  CHECK(json::parse(again.body)["changed"] == false);

  auto unsupported = post_json(app, "/api/fetch", {{"url", "https://nowhere.example/t"}});
  CHECK(unsupported.status == 422);
  CHECK(error_of(unsupported) == "unsupported-site");

  CHECK(post_json(app, "/api/fetch", json::object()).status == 400);
  CHECK(dispatch(app, {"POST", "/api/fetch", {}, "{not json", "application/json"}).status == 400);
  CHECK(post_json(app, "/api/fetch", {{"url", "fixture://sitea/missing.html"}}).status == 502);
  CHECK(get(app, "/api/fetch").status == 405);
  CHECK(get(app, "/api/nothing").status == 404);

  auto listed = json::parse(get(app, "/api/threads", {{"site_id", "sitea"}}).body);
  CHECK(listed["threads"].size() == 1);
  std::string id = listed["threads"][0]["thread_id"];
  auto canonical = get(app, "/api/threads/" + id, {{"format", "canonical"}});
  CHECK(canonical.content_type == "application/xml");
  CHECK(canonical.body == testing::fixture_text("golden/sitea/thread1.xml"));
  CHECK(get(app, "/api/threads/nope").status == 404);
}

TEST_CASE("bulk fetch runs as a job") {
  testing::TempDir dir;
  App app(test_config(dir), nullptr, std::make_shared<VirtualClock>());
  auto r = post_json(app, "/api/fetch/bulk", {{"keywords", "solar"}, {"limit", 20}});
  CHECK(r.status == 202);
  std::string job = json::parse(r.body)["job_id"];
  app.jobs().wait(job);
  auto status = json::parse(get(app, "/api/jobs/" + job).body);
  CHECK(status["status"] == "done");
  CHECK(status["report"]["urls_found"] == 5);
  CHECK(status["report"]["urls_supported"] == 3);
  CHECK(status["report"]["threads_stored"].size() == 3);

  CHECK(get(app, "/api/jobs/j999999").status == 404);
  CHECK(post_json(app, "/api/fetch/bulk", {{"keywords", "solar"}, {"limit", 0}}).status == 422);
  CHECK(post_json(app, "/api/fetch/bulk", {{"keywords", " "}}).status == 400);
}

TEST_CASE("extraction requests and views") {
  testing::TempDir dir;
  App app(test_config(dir), nullptr, std::make_shared<VirtualClock>());
  for (const char* page : {"thread1", "thread2", "thread3"})
    post_json(app, "/api/fetch", {{"url", std::string("fixture://sitea/") + page + ".html"}});
  std::vector<std::string> ids;
  auto listing = json::parse(get(app, "/api/threads").body);
  for (const auto& t : listing["threads"]) ids.push_back(t["thread_id"]);
  REQUIRE(ids.size() == 3);

  auto bad_alg = post_json(app, "/api/extractions", {{"thread_ids", ids}, {"algorithm", "lda"}});
  CHECK(bad_alg.status == 400);
  CHECK(error_of(bad_alg) == "unknown-algorithm");
  auto k1 = post_json(app, "/api/extractions", {{"thread_ids", ids}, {"algorithm", "tng"}, {"params", {{"K", 1}}}});
  CHECK(k1.status == 422);
  auto too_many = post_json(app, "/api/extractions",
                            {{"thread_ids", ids}, {"algorithm", "ckp"}, {"params", {{"K", 500}}}});
  CHECK(too_many.status == 422);
  CHECK(post_json(app, "/api/extractions", {{"thread_ids", {"nope"}}, {"algorithm", "tng"}}).status == 404);

  auto accepted = post_json(app, "/api/extractions",
                            {{"thread_ids", ids},
                             {"algorithm", "ckp"},
                             {"params", {{"K", 2}, {"beta", 0.6}, {"min_support", "1"}}}});
  REQUIRE(accepted.status == 202);
  auto ticket = json::parse(accepted.body);
  std::string eid = ticket["extraction_id"];
  app.jobs().wait(ticket["job_id"]);

  auto record = json::parse(get(app, "/api/extractions/" + eid).body);
  CHECK(record["status"] == "done");
  CHECK(record["params"]["beta"] == "0.6");

  auto topics = get(app, "/api/extractions/" + eid + "/topics");
  CHECK(topics.status == 200);
  CHECK(topics.body == app.topics_view(eid));

  auto network = get(app, "/api/extractions/" + eid + "/network");
  CHECK(network.content_type == "application/graphml+xml");
  auto filtered = get(app, "/api/extractions/" + eid + "/network", {{"topics", "0"}, {"format", "json"}});
  CHECK(filtered.status == 200);
  for (const auto& arc : json::parse(filtered.body)["arcs"]) CHECK(arc["topic"] == 0);
  CHECK(get(app, "/api/extractions/" + eid + "/network", {{"topics", "x"}}).status == 400);
  CHECK(get(app, "/api/extractions/" + eid + "/network", {{"format", "dot"}}).status == 422);

  auto timeline = get(app, "/api/extractions/" + eid + "/timeline", {{"intervals", "4"}});
  CHECK(timeline.status == 200);
  CHECK(timeline.body.rfind("# group_by=forum intervals=4\n", 0) == 0);
  CHECK(get(app, "/api/extractions/" + eid + "/timeline", {{"intervals", "0"}}).status == 422);
  CHECK(get(app, "/api/extractions/" + eid + "/timeline", {{"group_by", "x"}}).status == 422);
  CHECK(get(app, "/api/extractions/e999999/topics").status == 404);

  // A record still pending is not ready for views.
  ExtractionRecord pending;
  pending.corpus.thread_ids = {ids[0]};
  std::string waiting = app.store().put_extraction(pending);
  auto early = get(app, "/api/extractions/" + waiting + "/network");
  CHECK(early.status == 409);
  CHECK(error_of(early) == "not-ready");

  CHECK(json::parse(get(app, "/api/extractions").body)["extractions"].size() == 2);
}

TEST_CASE("sources can be listed and added") {
  testing::TempDir dir;
  App app(test_config(dir), nullptr, std::make_shared<VirtualClock>());
  CHECK(json::parse(get(app, "/api/sources").body)["sources"].size() == 3);
  auto added = dispatch(app, {"POST", "/api/sources", {}, testing::fixture_text("hotload/sited.ini"), "text/plain"});
  CHECK(added.status == 201);
  CHECK(json::parse(get(app, "/api/sources").body)["sources"].size() == 4);
  auto dup = dispatch(app, {"POST", "/api/sources", {}, testing::fixture_text("hotload/sited.ini"), "text/plain"});
  CHECK(dup.status == 422);
  std::string text = testing::fixture_text("hotload/sited.ini");
  auto same = post_json(app, "/api/sources", {{"definition", text}, {"replace", true}});
  CHECK(same.status == 422);  // a replacement needs a newer version
  text.replace(text.find("version = 1"), 11, "version = 2");
  auto replaced = post_json(app, "/api/sources", {{"definition", text}, {"replace", true}});
  CHECK(replaced.status == 201);
  CHECK(json::parse(replaced.body)["version"] == 2);
  CHECK(dispatch(app, {"POST", "/api/sources", {}, "[site]\n", "text/plain"}).status == 422);
}

TEST_CASE("configuration file and environment overrides") {
  testing::TempDir dir;
  write_file_atomic(dir / "cw.json", R"({"store": {"root": "data"}, "fetch.min_delay_ms": 250, "server": {"port": 9000}})");
  Config c = load_config(dir / "cw.json", {{"CW_SERVER_PORT", "9100"}, {"CW_JOBS_WORKERS", "3"}});
  CHECK(c.store_root == dir / "data");
  CHECK(c.fetch.per_host_min_delay == std::chrono::milliseconds(250));
  CHECK(c.server.port == 9100);
  CHECK(c.job_workers == 3);

  Config defaults = load_config(std::nullopt, {});
  CHECK(defaults.fetch.per_host_min_delay == std::chrono::milliseconds(1000));
  CHECK(defaults.server.bind == "127.0.0.1");

  auto code = [](const std::function<void()>& f) {
    try {
      f();
    } catch (const Error& e) {
      return e.code();
    }
    return std::string();
  };
  write_file_atomic(dir / "bad.json", R"({"nonsense": 1})");
  CHECK(code([&] { load_config(dir / "bad.json", {}); }) == "config");
  CHECK(code([&] { load_config(std::nullopt, {{"CW_SERVER_PORT", "eighty"}}); }) == "config");
  CHECK(code([&] { load_config(dir / "missing.json", {}); }) == "config");
}

TEST_CASE("job manager") {
  JobManager jobs(2);
  std::atomic<int> ran{0};
  std::vector<std::string> ids;
  for (int i = 0; i < 10; ++i)
    ids.push_back(jobs.submit(JobKind::bulk_fetch, [&ran, i](JobContext& ctx) {
      ctx.progress(0.5);
      ++ran;
      if (i == 3) throw Error("network", "boom");
      return nlohmann::ordered_json{{"n", i}};
    }));
  for (int i = 0; i < 10; ++i) {
    auto t = jobs.wait(ids[i]);
    if (i == 3) {
      CHECK(t.status == ExtractionStatus::failed);
      CHECK(t.error == "network: boom");
    } else {
      CHECK(t.status == ExtractionStatus::done);
      CHECK(t.data["n"] == i);
    }
  }
  CHECK(ran == 10);
  CHECK(ids[0] == "j000001");
  CHECK_THROWS_AS(jobs.get("j0"), Error);
}

TEST_CASE("status mapping") {
  CHECK(http_status("bad-request") == 400);
  CHECK(http_status("not-found") == 404);
  CHECK(http_status("not-ready") == 409);
  CHECK(http_status("invalid-parameter") == 422);
  CHECK(http_status("timeout") == 502);
  CHECK(http_status("io") == 500);
  CHECK(parse_topic_list("1,5,7") == std::set<int>{1, 5, 7});
  CHECK(parse_topic_list("").empty());
}

}
