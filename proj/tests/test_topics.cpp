#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "cwatch/canonical.hpp"
#include "cwatch/error.hpp"
#include "cwatch/topics.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace cwatch;
using testing::post;
using testing::WordDocs;

namespace {

std::string error_code(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  return "";
}

std::vector<std::string> words_of(const std::vector<WordToken>& ts) {
  std::vector<std::string> out;
  for (const auto& t : ts) out.push_back(t.text);
  return out;
}

std::vector<CanonicalThread> fixture_threads() {
  std::vector<CanonicalThread> out;
  for (const char* name : {"sitea/thread1", "sitea/thread2", "sitea/thread3", "sitec/thread1", "sitec/thread2"})
    out.push_back(deserialize_canonical(testing::fixture_text(std::string("golden/") + name + ".xml")));
  return out;
}

}  // namespace

TEST_SUITE("topics") {

TEST_CASE("tokenizer and corpus preparation") {
  CHECK(words_of(tokenize("The cat sat.", true)) == std::vector<std::string>{"the", "cat", "sat"});
  auto corpus = prepare_corpus({testing::thread("t", "s", {post("p1", "A", "2013-01-01T00:00:00Z", "The cat sat.")})});
  CHECK(corpus.vocabulary == std::vector<std::string>{"cat", "sat"});
  REQUIRE(corpus.documents.size() == 1);
  CHECK(corpus.documents[0].tokens[1].joined);

  auto ws = tokenize("Électrique, l'été 2013 x-ray", true);
  CHECK(words_of(ws) == std::vector<std::string>{"électrique", "l'été", "x", "ray"});
  CHECK_FALSE(ws[1].joined);  // a comma sits in between
  CHECK(ws[2].joined == false);

  auto stop_only = testing::thread("t", "s", {post("p1", "A", "2013-01-01T00:00:00Z", "the and of it"),
                                              post("p2", "B", "2013-01-01T01:00:00Z", "42 !!")});
  CHECK(error_code([&] { prepare_corpus({stop_only}); }) == "empty-corpus");

  // A removed stopword breaks the phrase chain.
  auto gap = prepare_corpus({testing::thread("t", "s", {post("p1", "A", "2013-01-01T00:00:00Z", "battery of range")})});
  REQUIRE(gap.documents[0].tokens.size() == 2);
  CHECK_FALSE(gap.documents[0].tokens[1].joined);

  CorpusOptions bad;
  bad.stopwords = "klingon";
  CHECK(error_code([&] { stopword_list(bad); }) == "unknown-stopwords");
}

TEST_CASE("parameter parsing") {
  auto p = parse_tng_params({{"K", "3"}, {"iterations", "100"}});
  CHECK(p.K == 3);
  CHECK(p.burn_in == 20);
  CHECK(error_code([] { parse_tng_params({{"K", "1"}}); }) == "invalid-parameter");
  CHECK(error_code([] { parse_tng_params({{"K", "x"}}); }) == "invalid-parameter");
  CHECK(error_code([] { parse_tng_params({{"nope", "1"}}); }) == "invalid-parameter");
  CHECK(error_code([] { parse_tng_params({{"iterations", "10"}, {"burn_in", "10"}}); }) == "invalid-parameter");
  CHECK(error_code([] { parse_ckp_params({{"beta", "0"}}); }) == "invalid-parameter");
  CHECK(error_code([] { parse_ckp_params({{"beta", "1.5"}}); }) == "invalid-parameter");
  CHECK(parse_ckp_params({{"beta", "1"}, {"stopwords", "none"}}).beta == 1.0);
}

TEST_CASE("tng recovers two planted vocabularies") {
  auto corpus = corpus_from_words(testing::two_vocabulary_corpus(200, 50, 99));
  TngParams p;
  p.K = 2;
  p.iterations = 200;
  p.burn_in = 40;
  p.seed = 7;
  auto r = extract_tng(corpus, p);
  CHECK(testing::purity(r) >= 0.9);
  CHECK(validate_result(r).empty());
  CHECK(r.assignments.size() == 200);
  for (const auto& [ref, ids] : r.assignments) CHECK(ids.size() == 1);

  // Each topic's top expressions come from one vocabulary.
  for (const auto& topic : r.topics) {
    REQUIRE(topic.expressions.size() >= 5);
    char first = topic.expressions[0].text[0];
    for (int i = 0; i < 5; ++i) CHECK(topic.expressions[i].text[0] == first);
  }
}

TEST_CASE("tng probability tables are distributions and runs are reproducible") {
  auto docs = testing::two_vocabulary_corpus(40, 20, 3);
  for (auto& [ref, words] : docs)
    if (std::stoi(ref.thread_id.substr(1)) % 3 == 0) words.insert(words.begin() + 5, {"alpha", "beta"});
  auto corpus = corpus_from_words(docs);
  TngParams p;
  p.K = 2;
  p.iterations = 150;
  p.burn_in = 30;
  p.seed = 11;
  auto r = extract_tng(corpus, p);
  for (const auto& in : r.internals) {
    double sum = 0;
    for (const auto& [text, prob] : in.ngram_probabilities) {
      CHECK(prob > 0);
      sum += prob;
    }
    CHECK(std::fabs(sum - 1.0) < 1e-9);
  }
  bool planted = false;
  for (const auto& in : r.internals) {
    auto it = in.ngram_probabilities.find("alpha beta");
    planted = planted || (it != in.ngram_probabilities.end() && it->second > in.ngram_probabilities.at("a0") / 100);
  }
  CHECK(planted);
  CHECK(extract_tng(corpus, p) == r);
  p.seed = 12;
  CHECK_FALSE(extract_tng(corpus, p) == r);

  auto one = corpus_from_words({{{"t", "p1"}, {"lonely", "words"}}});
  CHECK(error_code([&] { extract_tng(one, p); }) == "invalid-parameter");
  CHECK(error_code([&] { extract_ckp(one, CkpParams{}); }) == "invalid-parameter");
}

TEST_CASE("ckp with beta 1 partitions; lower beta lets a bridging post join both") {
  WordDocs docs = {
      {{"t", "p1"}, {"battery", "charge", "range"}},  {{"t", "p2"}, {"battery", "charge", "cable"}},
      {{"t", "p3"}, {"battery", "range", "charge"}},  {{"t", "p4"}, {"snow", "winter", "tyres"}},
      {{"t", "p5"}, {"winter", "tyres", "snow", "ice"}}, {{"t", "p6"}, {"snow", "ice", "winter"}},
      {{"t", "p7"}, {"battery", "charge", "snow", "winter"}},
  };
  auto corpus = corpus_from_words(docs);
  CkpParams p;
  p.K = 2;
  p.beta = 1.0;
  p.seed = 5;
  auto r = extract_ckp(corpus, p);
  CHECK(validate_result(r).empty());
  for (const auto& [ref, ids] : r.assignments) CHECK(ids.size() == 1);
  CHECK(r.assignments.size() == docs.size());
  CHECK(r.assignments.at({"t", "p1"}) == r.assignments.at({"t", "p2"}));
  CHECK(r.assignments.at({"t", "p4"}) == r.assignments.at({"t", "p5"}));
  CHECK(r.assignments.at({"t", "p1"}) != r.assignments.at({"t", "p4"}));

  p.beta = 0.5;
  auto o = extract_ckp(corpus, p);
  CHECK(o.assignments.at({"t", "p7"}) == std::set<int>{0, 1});
  CHECK(o.assignments.at({"t", "p1"}).size() == 1);
  CHECK(validate_result(o).empty());

  // Centroids are unit vectors.
  for (const auto& in : o.internals) {
    double sq = 0;
    for (const auto& [term, w] : in.centroid) sq += w * w;
    CHECK(std::fabs(sq - 1.0) < 1e-9);
  }
  // "battery" is held by every member of its cluster, so it sits on the centroid.
  int battery_topic = *r.assignments.at({"t", "p1"}).begin();
  const auto& exprs = r.topics[battery_topic].expressions;
  auto hit = std::find_if(exprs.begin(), exprs.end(), [](const Expression& e) { return e.text == "battery"; });
  REQUIRE(hit != exprs.end());
  CHECK(hit->score == 1.0);
}

TEST_CASE("ckp converges to a fixed point and restarts reach the brute-force optimum") {
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 40; ++trial) {
    int n = 4 + static_cast<int>(rng() % 5);
    WordDocs docs;
    for (int d = 0; d < n; ++d) {
      std::vector<std::string> words;
      const char* prefix = d % 2 ? "x" : "y";
      int len = 3 + static_cast<int>(rng() % 4);
      for (int i = 0; i < len; ++i) words.push_back(prefix + std::to_string(rng() % 4));
      if (rng() % 3 == 0) words.push_back("shared");
      docs.push_back({{"t", "p" + std::to_string(d + 1)}, words});
    }
    auto vecs = testing::oracle_tfidf(docs);
    double best = -1;
    for (unsigned mask = 1; mask < (1u << n) - 1; ++mask)
      if (!(mask & 1u)) best = std::max(best, testing::split_objective(vecs, mask));

    CAPTURE(trial);
    double reached = -1;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      CkpParams p;
      p.K = 2;
      p.beta = 1.0;
      p.seed = seed;
      auto r = extract_ckp(corpus_from_words(docs), p);
      int side0 = *r.assignments.at({"t", "p1"}).begin();
      unsigned mask = 0;
      for (int d = 0; d < n; ++d)
        if (*r.assignments.at({"t", "p" + std::to_string(d + 1)}).begin() != side0) mask |= 1u << d;
      double v = testing::split_objective(vecs, mask);
      CHECK(v <= best + 1e-9);
      reached = std::max(reached, v);

      // Lloyd fixed point: no document prefers the other side's mean.
      std::map<std::string, double> sums[2];
      for (int d = 0; d < n; ++d)
        for (const auto& [w, x] : vecs[d]) sums[(mask >> d) & 1u][w] += x;
      for (int d = 0; d < n; ++d) {
        unsigned own = (mask >> d) & 1u;
        std::vector<std::pair<std::string, double>> a(sums[own].begin(), sums[own].end());
        std::vector<std::pair<std::string, double>> b(sums[1 - own].begin(), sums[1 - own].end());
        CHECK(testing::cosine(vecs[d], a) >= testing::cosine(vecs[d], b) - 1e-9);
      }
    }
    CHECK(reached == doctest::Approx(best).epsilon(1e-9));
  }
}

TEST_CASE("result documents round-trip and validate") {
  auto threads = fixture_threads();
  auto r = run_extraction(Algorithm::tng, threads, {{"K", "3"}, {"iterations", "60"}, {"seed", "7"}});
  std::string doc = serialize_result(r);
  CHECK(validate_result_document(doc).empty());
  auto back = deserialize_result(doc);
  auto without = r;
  without.internals.clear();
  CHECK(back == without);
  CHECK(serialize_result(back) == doc);
  CHECK(r.params == std::map<std::string, std::string>{{"K", "3"}, {"iterations", "60"}, {"seed", "7"}});
  CHECK(testing::matches_golden("results/fixture-tng.xml", doc));

  auto c = run_extraction(Algorithm::ckp, threads, {{"K", "3"}, {"beta", "0.7"}, {"min_support", "1"}});
  std::string cdoc = serialize_result(c);
  CHECK(validate_result_document(cdoc).empty());
  CHECK(validate_result(c).empty());

  CHECK_FALSE(validate_result_document("<extraction/>").empty());
  CHECK(error_code([] { deserialize_result("<nope"); }) == "result-format");

  auto broken = r;
  broken.topics[0].expressions[0].score = 1.5;
  CHECK_FALSE(validate_result(broken).empty());
  broken = r;
  broken.assignments.begin()->second = {0, 1};
  CHECK_FALSE(validate_result(broken).empty());
}

TEST_CASE("scores print in shortest round-trip form") {
  CHECK(format_score(0.5) == "0.5");
  CHECK(format_score(1) == "1");
  CHECK(std::stod(format_score(1.0 / 3)) == 1.0 / 3);
  std::mt19937_64 rng(4);
  for (int i = 0; i < 1000; ++i) {
    double x = static_cast<double>(rng() >> 11) * 0x1.0p-53;
    CHECK(std::stod(format_score(x)) == x);
  }
}

}
