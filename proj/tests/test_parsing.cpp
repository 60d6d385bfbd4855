#include <doctest.h>

#include <algorithm>

#include "cwatch/canonical.hpp"
#include "cwatch/error.hpp"
#include "cwatch/extract.hpp"
#include "cwatch/fetch.hpp"
#include "cwatch/html.hpp"
#include "cwatch/selector.hpp"
#include "cwatch/site_definition.hpp"
#include "support.hpp"

using namespace cwatch;
using testing::post;

namespace {

const std::vector<std::pair<std::string, std::string>> kSinglePage = {
    {"sitea", "thread1"}, {"sitea", "thread2"}, {"siteb", "thread1"},
    {"siteb", "thread2"}, {"sitec", "thread1"}, {"sitec", "thread2"}};

CleanDocument clean_fixture(const std::string& site, const std::string& page) {
  RawPage raw{"fixture://" + site + "/" + page + ".html", testing::fixture_text("pages/" + site + "/" + page + ".html"),
              std::nullopt, {}};
  return clean_html(raw);
}

SiteDefinition fixture_definition(const std::string& site) {
  return parse_site_definition(testing::fixture_text("definitions/" + site + ".ini"));
}

CleanDocument clean_string(const std::string& html) { return clean_html({"https://x.example/", html, std::nullopt, {}}); }

std::vector<std::string> texts(const std::vector<Match>& ms) {
  std::vector<std::string> out;
  for (const auto& m : ms) out.push_back(m.string_value());
  return out;
}

bool has_code(const std::vector<ExtractionDiagnostic>& ds, const std::string& code) {
  return std::any_of(ds.begin(), ds.end(), [&](const ExtractionDiagnostic& d) { return d.code == code; });
}

}  // namespace

TEST_SUITE("parsing") {

TEST_CASE("unclosed paragraphs become siblings") {
  auto doc = clean_string("<p>a<p>b");
  DocumentIndex idx(doc.root);
  auto ps = select(Selector::parse("/html/p"), doc.root, idx);
  REQUIRE(ps.size() == 2);
  CHECK(texts(ps) == std::vector<std::string>{"a", "b"});
}

TEST_CASE("tag soup repairs") {
  auto doc = clean_string("<div><b>bold <i>both</b> after</i></div></span><table><tr><td>1<td>2<tr><td>3</table>");
  DocumentIndex idx(doc.root);
  CHECK(select(Selector::parse("//td"), doc.root, idx).size() == 3);
  CHECK(select(Selector::parse("//tr"), doc.root, idx).size() == 2);
  CHECK(texts(select(Selector::parse("//div"), doc.root, idx)) == std::vector<std::string>{"bold both after"});
  // The output always parses as XML.
  CHECK_NOTHROW(xml::parse(serialize_clean(doc)));
}

TEST_CASE("entities and encodings") {
  CHECK(decode_entities("a &amp; b &eacute; &#233; &#xE9; &bogus;") == "a & b é é é &bogus;");
  CHECK(decode_to_utf8("caf\xE9", std::string("iso-8859-1")) == "café");
  CHECK(sniff_meta_charset("<meta charset=\"windows-1252\">") == "windows-1252");
}

TEST_CASE("empty page is an error") {
  try {
    clean_html({"https://x.example/", "", std::nullopt, {}});
    FAIL("expected empty-input");
  } catch (const Error& e) {
    CHECK(e.code() == "empty-input");
  }
}

TEST_CASE("cleaned fixture pages match their goldens") {
  for (const auto& [site, page] : kSinglePage) {
    CAPTURE(site);
    CAPTURE(page);
    std::string once = serialize_clean(clean_fixture(site, page));
    CHECK(once == serialize_clean(clean_fixture(site, page)));
    CHECK(testing::matches_golden(site + "/" + page + ".clean.xml", once));
  }
}

TEST_CASE("selector engine") {
  auto doc = clean_string(
      "<div id='a' class='post first'><span>one</span><a href='/x'>link</a></div>"
      "<div class='post'><span>two</span><div><span>deep</span></div></div>");
  DocumentIndex idx(doc.root);
  CHECK(texts(select(Selector::parse("//div[@class='post']/span"), doc.root, idx)) == std::vector<std::string>{"two"});
  CHECK(texts(select(Selector::parse("//div[@class~='post']/span"), doc.root, idx)) ==
        std::vector<std::string>{"one", "two"});
  CHECK(select(Selector::parse("//span"), doc.root, idx).size() == 3);
  CHECK(texts(select(Selector::parse("/html/div[2]//span"), doc.root, idx)) == std::vector<std::string>{"two", "deep"});
  CHECK(texts(select(Selector::parse("//a/@href"), doc.root, idx)) == std::vector<std::string>{"/x"});

  auto first = select(Selector::parse("//div[@id='a']"), doc.root, idx);
  REQUIRE(first.size() == 1);
  CHECK(texts(select(Selector::parse("span"), *first[0].element, idx)) == std::vector<std::string>{"one"});
  CHECK(texts(select(Selector::parse(".//a"), *first[0].element, idx)) == std::vector<std::string>{"link"});

  CHECK(Selector::syntax_error("div[["));
  CHECK(Selector::syntax_error("//div[@class="));
  CHECK_FALSE(Selector::syntax_error("//div[@class='x']/span[1]/@title"));
}

TEST_CASE("definition files round-trip and lint clean") {
  std::vector<SiteDefinition> loaded;
  for (const char* site : {"sitea", "siteb", "sitec"}) {
    auto def = fixture_definition(site);
    CHECK(parse_site_definition(serialize_site_definition(def)) == def);
    CHECK(lint_definition(def, loaded).empty());
    loaded.push_back(def);
  }
  auto dup = fixture_definition("sitea");
  CHECK(has_code(lint_definition(dup, loaded), "duplicate-site-id"));

  auto broken = fixture_definition("sitea");
  broken.site_id = "other";
  broken.host_patterns = {"other.example"};
  broken.post_rules.author_selector = "div[[";
  CHECK(has_code(lint_definition(broken, loaded), "selector-syntax"));

  CHECK(has_code(lint_definition_text("[site]\nid = x\n", {}), "definition-format"));
}

TEST_CASE("site matching and ambiguity") {
  std::vector<SiteDefinition> defs = {fixture_definition("sitea"), fixture_definition("siteb")};
  CHECK(match_site("https://forum.example.org/t/1", defs)->site_id == "sitea");
  CHECK(match_site("fixture://siteB/thread1.html", defs)->site_id == "siteb");
  CHECK_FALSE(match_site("https://unknown.example.net/", defs).has_value());

  auto a = defs[0];
  auto b = defs[1];
  a.host_patterns = {"*.example.org"};
  b.host_patterns = {"*.example.org"};
  try {
    check_ambiguity({a, b});
    FAIL("expected ambiguity");
  } catch (const Error& e) {
    CHECK(e.code() == "ambiguous-definition");
  }
}

TEST_CASE("apply_definition reproduces the frozen canonical files") {
  Timestamp fetched = testing::at("2013-03-14T00:00:00Z");
  for (const auto& [site, page] : kSinglePage) {
    CAPTURE(site);
    CAPTURE(page);
    auto ex = apply_definition(clean_fixture(site, page), fixture_definition(site), fetched);
    REQUIRE(ex.thread);
    CHECK_FALSE(ex.has_errors());
    CHECK(validate_thread(*ex.thread).empty());
    std::string doc = serialize_canonical(resolve_name_mentions(*ex.thread));
    CHECK(testing::matches_golden(site + "/" + page + ".xml", doc));
  }
}

TEST_CASE("one discussion under two layouts differs only in url and site") {
  auto a = deserialize_canonical(testing::fixture_text("golden/sitea/thread1.xml"));
  auto b = deserialize_canonical(testing::fixture_text("golden/siteb/thread1.xml"));
  CHECK(a.site_id != b.site_id);
  CHECK(a.source_url != b.source_url);
  b.site_id = a.site_id;
  b.source_url = a.source_url;
  CHECK(a == b);
}

TEST_CASE("timestamps honour the site clock") {
  // sitea pages are written in UTC+01:00, sitec in UTC-05:00.
  auto a = deserialize_canonical(testing::fixture_text("golden/sitea/thread2.xml"));
  CHECK(format_iso8601(a.posts[0].timestamp) == "2013-04-02T17:40:00Z");
  auto c = deserialize_canonical(testing::fixture_text("golden/sitec/thread2.xml"));
  CHECK(format_iso8601(c.posts[0].timestamp) == "2013-06-03T12:15:00Z");
  CHECK(c.posts[1].author == "Renée");
}

TEST_CASE("a post selector that matches nothing yields no thread") {
  auto def = fixture_definition("sitea");
  def.thread_rules.post_list_selector = "//div[@class='nothing-here']";
  auto ex = apply_definition(clean_fixture("sitea", "thread1"), def, testing::at("2013-03-14T00:00:00Z"));
  CHECK_FALSE(ex.thread.has_value());
  CHECK(ex.has_errors());
}

TEST_CASE("an unparseable timestamp drops that post only") {
  std::string html = testing::fixture_text("pages/sitea/thread2.html");
  auto pos = html.find("2013-04-02 19:15");
  REQUIRE(pos != std::string::npos);
  html.replace(pos, 16, "yesterday");
  auto ex = apply_definition(clean_html({"fixture://sitea/thread2.html", html, std::nullopt, {}}),
                             fixture_definition("sitea"), testing::at("2013-03-14T00:00:00Z"));
  REQUIRE(ex.thread);
  CHECK(ex.thread->posts.size() == 4);
  CHECK(has_code(ex.diagnostics, "unparseable-timestamp"));
  CHECK(validate_thread(*ex.thread).empty());
}

TEST_CASE("name mentions") {
  auto t = testing::thread("t", "s",
                           {post("p1", "Robert", "2013-01-01T10:00:00Z", "question"),
                            post("p2", "Robert", "2013-01-01T11:00:00Z", "more"),
                            post("p3", "Julie", "2013-01-01T12:00:00Z", "@Robert thanks"),
                            post("p4", "Julie", "2013-01-01T13:00:00Z", "@Nobody hello"),
                            post("p5", "Kevin", "2013-01-01T14:00:00Z", "@Robert structural", "p3"),
                            post("p6", "Kevin", "2013-01-01T15:00:00Z", "Julie: agreed")});
  auto r = resolve_name_mentions(t);
  CHECK(r.posts[2].reply_to == "p2");
  CHECK(r.posts[2].reply_evidence == ReplyEvidence::name_mention);
  CHECK_FALSE(r.posts[3].reply_to.has_value());
  CHECK(r.posts[4].reply_to == "p3");
  CHECK(r.posts[4].reply_evidence == ReplyEvidence::structural);
  CHECK(r.posts[5].reply_to == "p4");
  CHECK(validate_thread(r).empty());
}

TEST_CASE("definitions added to the directory load without restart") {
  testing::TempDir dir;
  for (const char* site : {"sitea", "siteb", "sitec"})
    std::filesystem::copy_file(testing::fixtures() / "definitions" / (std::string(site) + ".ini"),
                               dir / (std::string(site) + ".ini"));
  DefinitionRegistry registry(dir.path());
  CHECK(registry.list().size() == 3);
  CHECK_FALSE(registry.match("https://garden.example.io/t/9").has_value());

  std::filesystem::copy_file(testing::fixtures() / "hotload/sited.ini", dir / "sited.ini");
  auto hit = registry.match("https://garden.example.io/t/9");
  REQUIRE(hit);
  CHECK(hit->site_id == "sited");

  // A broken file leaves the working set in place.
  write_file_atomic(dir / "broken.ini", "[site]\nid = broken\n");
  CHECK(registry.match("https://garden.example.io/t/9").has_value());
  CHECK(registry.last_error().has_value());
}

}
