#include <doctest.h>

#include <algorithm>

#include "cwatch/canonical.hpp"
#include "support.hpp"

using namespace cwatch;
using testing::at;
using testing::post;

namespace {

bool has_code(const std::vector<Violation>& v, const std::string& code) {
  return std::any_of(v.begin(), v.end(), [&](const Violation& x) { return x.code == code; });
}

CanonicalThread three_posts() {
  return testing::thread("t1", "sitea",
                         {post("p1", "Robert", "2013-03-14T08:00:00Z", "first"),
                          post("p2", "David VIETI", "2013-03-14T09:00:00Z", "second", "p1"),
                          post("p3", "Robert", "2013-03-14T10:00:00Z", "third", "p2")});
}

}  // namespace

TEST_SUITE("model") {

TEST_CASE("author names are trimmed and collapsed") {
  CHECK(normalize_author_name("  Robert ") == "Robert");
  CHECK(normalize_author_name("David  VIETI") == "David VIETI");
  CHECK(normalize_author_name("David\xC2\xA0VIETI") == "David VIETI");
  CHECK_FALSE(normalize_author_name("   ").has_value());
  for (const char* raw : {"  a  b ", "Renée", "x\t\ty"}) {
    auto once = normalize_author_name(raw);
    REQUIRE(once);
    CHECK(normalize_author_name(*once) == once);
  }
  CHECK(author_key("robert") != author_key("Robert"));
}

TEST_CASE("validate_thread on hand-made cases") {
  CHECK(validate_thread(three_posts()).empty());

  auto forward = three_posts();
  forward.posts[1].reply_to = "p3";
  CHECK(has_code(validate_thread(forward), "dangling-or-forward-reply"));

  auto unordered = three_posts();
  unordered.posts[2].timestamp = at("2013-03-14T07:00:00Z");
  CHECK(has_code(validate_thread(unordered), "unordered-posts"));
}

TEST_CASE("every single-field mutation of a valid thread is reported") {
  std::mt19937_64 rng(11);
  for (int i = 0; i < 200; ++i) {
    CanonicalThread t = testing::random_thread(rng, i);
    REQUIRE(validate_thread(t).empty());
    const std::size_t k = rng() % t.posts.size();
    CanonicalThread m = t;
    switch (rng() % 7) {
      case 0: m.thread_id.clear(); break;
      case 1: m.title.clear(); break;
      case 2: m.site_id.clear(); break;
      case 3:
        if (m.posts.size() > 1) m.posts[1].post_id = m.posts[0].post_id;
        else m.posts[0].post_id.clear();
        break;
      case 4: m.posts[k].reply_to = m.posts[k].post_id; m.posts[k].reply_evidence = ReplyEvidence::structural; break;
      case 5: m.posts[k].content += " <b>bold</b>"; break;
      case 6: m.posts[k].author = " " + m.posts[k].author; break;
    }
    CHECK_FALSE(validate_thread(m).empty());
  }
}

TEST_CASE("thread statistics") {
  auto one = testing::thread("t", "s", {post("p1", "A", "2013-01-01T00:00:00Z", "x")});
  auto s1 = thread_statistics(one);
  CHECK(s1.post_count == 1);
  CHECK(s1.author_count == 1);
  CHECK(s1.first == s1.last);

  auto same = testing::thread("t", "s",
                              {post("p1", "A", "2013-01-01T00:00:00Z", "x"), post("p2", "A", "2013-01-02T00:00:00Z", "y")});
  CHECK(thread_statistics(same).author_count == 1);

  // The electric car fixture: six posts by four people.
  auto fixture = deserialize_canonical(testing::fixture_text("golden/sitea/thread1.xml"));
  auto s = thread_statistics(fixture);
  CHECK(s.post_count == 6);
  CHECK(s.author_count == 4);
  CHECK(format_iso8601(*s.first) == "2013-03-14T08:12:00Z");
  CHECK(format_iso8601(*s.last) == "2013-03-14T13:30:00Z");
}

TEST_CASE("canonical serialization round-trips generated threads") {
  std::mt19937_64 rng(5);
  for (int i = 0; i < 300; ++i) {
    CanonicalThread t = testing::random_thread(rng, i);
    std::string doc = serialize_canonical(t);
    CHECK(deserialize_canonical(doc) == t);
    CHECK(serialize_canonical(deserialize_canonical(doc)) == doc);
  }
}

TEST_CASE("thread ids depend on title and opening post only") {
  auto a = make_thread_id("Battery range", "Robert", at("2013-03-14T08:00:00Z"));
  CHECK(a == make_thread_id("Battery range", "Robert", at("2013-03-14T08:00:00Z")));
  CHECK(a != make_thread_id("Battery range", "Robert", at("2013-03-14T08:00:01Z")));
  CHECK(a.size() == 17);
  CHECK(a[0] == 't');
  CHECK(fnv1a_hex("") == "cbf29ce484222325");
  CHECK(fnv1a_hex("a") == "af63dc4c8601ec8c");
}

TEST_CASE("post refs") {
  PostRef r{"t1", "p2"};
  CHECK(r.str() == "t1/p2");
  CHECK(PostRef::parse("t1/p2") == r);
  CHECK_FALSE(PostRef::parse("nope").has_value());
}

}
