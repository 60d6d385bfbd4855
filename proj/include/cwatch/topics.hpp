#pragma once

#include <cstdint>
#include <map>
#include <random>
#include <string>

#include "cwatch/corpus.hpp"
#include "cwatch/topic_result.hpp"

namespace cwatch {

struct TngParams {
  int K = 10;
  double alpha = 1.0;   // document-topic prior
  double beta = 0.01;   // topic-word prior, also used for topic-bigram rows
  double gamma = 0.1;   // bigram-status prior
  int iterations = 1000;
  int burn_in = 200;  // iterations / 5 when parsed without an explicit value
  int top_k = 20;
  std::uint64_t seed = 1;
};

struct CkpParams {
  int K = 10;
  double beta = 0.8;  // overlap threshold in (0, 1]
  int min_support = 2;
  int max_iters = 100;
  int top_k = 20;
  std::uint64_t seed = 1;
};

// Parse string parameter maps as received from the API and CLI. Unknown
// keys and out-of-range values throw cwatch::Error("invalid-parameter").
TngParams parse_tng_params(const std::map<std::string, std::string>& params);
CkpParams parse_ckp_params(const std::map<std::string, std::string>& params);
// Corpus keys (lowercase, min_token_len, min_doc_freq, stopwords) are
// accepted alongside either algorithm's keys.
CorpusOptions parse_corpus_options(const std::map<std::string, std::string>& params);

// Topical n-grams: collapsed Gibbs sampling over per-token topics and
// bigram-status indicators. Throws Error("invalid-parameter").
TopicResult extract_tng(const TokenizedCorpus& corpus, const TngParams& params);

// Overlapping tf-idf clustering with centroid-distance expression scores.
// Throws Error("invalid-parameter").
TopicResult extract_ckp(const TokenizedCorpus& corpus, const CkpParams& params);

// Parses params, prepares the corpus and runs the algorithm. The result
// echoes `params` verbatim.
TopicResult run_extraction(Algorithm algorithm, const std::vector<CanonicalThread>& threads,
                           const std::map<std::string, std::string>& params);

// Validation only, for rejecting requests before a job is queued.
void check_extraction_params(Algorithm algorithm, const std::map<std::string, std::string>& params);

// Seeded mt19937_64 with a fixed double conversion, so results do not depend
// on the standard library's distribution implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);
  std::uint64_t next();
  // Uniform in [0, 1) with 53 random bits.
  double next_double();
  // Uniform in [0, n).
  std::size_t below(std::size_t n);

 private:
  std::mt19937_64 engine_;
};

}  // namespace cwatch
