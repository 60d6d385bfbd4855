#include "cwatch/topics.hpp"

#include <charconv>
#include <cmath>
#include <set>

#include "cwatch/error.hpp"

namespace cwatch {

namespace {

const std::set<std::string>& corpus_keys() {
  static const std::set<std::string> keys = {"lowercase", "min_token_len", "min_doc_freq", "stopwords"};
  return keys;
}

[[noreturn]] void bad(const std::string& key, const std::string& value, const std::string& why) {
  throw Error("invalid-parameter", "parameter " + key + "=" + value + ": " + why);
}

long long as_int(const std::string& key, const std::string& value) {
  long long v = 0;
  auto [p, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
  if (value.empty() || ec != std::errc() || p != value.data() + value.size()) bad(key, value, "not an integer");
  return v;
}

std::uint64_t as_u64(const std::string& key, const std::string& value) {
  std::uint64_t v = 0;
  auto [p, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
  if (value.empty() || ec != std::errc() || p != value.data() + value.size()) bad(key, value, "not an unsigned integer");
  return v;
}

double as_double(const std::string& key, const std::string& value) {
  double v = 0;
  auto [p, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
  if (value.empty() || ec != std::errc() || p != value.data() + value.size() || !std::isfinite(v))
    bad(key, value, "not a number");
  return v;
}

int as_bounded(const std::string& key, const std::string& value, long long lo) {
  long long v = as_int(key, value);
  if (v < lo || v > 1000000000) bad(key, value, "must be at least " + std::to_string(lo));
  return static_cast<int>(v);
}

}  // namespace

Rng::Rng(std::uint64_t seed) : engine_(seed) {}

std::uint64_t Rng::next() { return engine_(); }

double Rng::next_double() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

std::size_t Rng::below(std::size_t n) {
  std::size_t v = static_cast<std::size_t>(next_double() * static_cast<double>(n));
  return v < n ? v : n - 1;
}

TngParams parse_tng_params(const std::map<std::string, std::string>& params) {
  TngParams p;
  for (const auto& [k, v] : params) {
    if (k == "K") p.K = as_bounded(k, v, 2);
    else if (k == "alpha") p.alpha = as_double(k, v);
    else if (k == "beta") p.beta = as_double(k, v);
    else if (k == "gamma") p.gamma = as_double(k, v);
    else if (k == "iterations") p.iterations = as_bounded(k, v, 1);
    else if (k == "burn_in") p.burn_in = as_bounded(k, v, 0);
    else if (k == "top_k") p.top_k = as_bounded(k, v, 1);
    else if (k == "seed") p.seed = as_u64(k, v);
    else if (!corpus_keys().count(k)) bad(k, v, "unknown parameter for tng");
  }
  if (!params.count("burn_in")) p.burn_in = p.iterations / 5;
  if (!(p.alpha > 0)) bad("alpha", params.at("alpha"), "must be positive");
  if (!(p.beta > 0)) bad("beta", params.at("beta"), "must be positive");
  if (!(p.gamma > 0)) bad("gamma", params.at("gamma"), "must be positive");
  if (p.iterations <= p.burn_in) throw Error("invalid-parameter", "iterations must exceed burn_in");
  return p;
}

CkpParams parse_ckp_params(const std::map<std::string, std::string>& params) {
  CkpParams p;
  for (const auto& [k, v] : params) {
    if (k == "K") p.K = as_bounded(k, v, 2);
    else if (k == "beta") {
      p.beta = as_double(k, v);
      if (!(p.beta > 0 && p.beta <= 1)) bad(k, v, "must be in (0, 1]");
    } else if (k == "min_support") p.min_support = as_bounded(k, v, 1);
    else if (k == "max_iters") p.max_iters = as_bounded(k, v, 1);
    else if (k == "top_k") p.top_k = as_bounded(k, v, 1);
    else if (k == "seed") p.seed = as_u64(k, v);
    else if (!corpus_keys().count(k)) bad(k, v, "unknown parameter for ckp");
  }
  return p;
}

CorpusOptions parse_corpus_options(const std::map<std::string, std::string>& params) {
  CorpusOptions o;
  for (const auto& [k, v] : params) {
    if (k == "lowercase") {
      if (v == "true" || v == "1") o.lowercase = true;
      else if (v == "false" || v == "0") o.lowercase = false;
      else bad(k, v, "expected true or false");
    } else if (k == "min_token_len") {
      o.min_token_len = as_bounded(k, v, 0);
    } else if (k == "min_doc_freq") {
      o.min_doc_freq = as_bounded(k, v, 1);
    } else if (k == "stopwords") {
      o.stopwords = v;
      try {
        stopword_list(o);
      } catch (const Error& e) {
        bad(k, v, e.what());
      }
    }
  }
  return o;
}

void check_extraction_params(Algorithm algorithm, const std::map<std::string, std::string>& params) {
  parse_corpus_options(params);
  if (algorithm == Algorithm::tng) parse_tng_params(params);
  else parse_ckp_params(params);
}

TopicResult run_extraction(Algorithm algorithm, const std::vector<CanonicalThread>& threads,
                           const std::map<std::string, std::string>& params) {
  CorpusOptions options = parse_corpus_options(params);
  TokenizedCorpus corpus = prepare_corpus(threads, options);
  TopicResult r = algorithm == Algorithm::tng ? extract_tng(corpus, parse_tng_params(params))
                                              : extract_ckp(corpus, parse_ckp_params(params));
  r.params = params;
  return r;
}

}  // namespace cwatch
