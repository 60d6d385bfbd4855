// Topical n-grams (Wang, McCallum and Wei, 2007), collapsed Gibbs sampler.
//
// Each token i carries a topic z_i and a status x_i. x_i = 1 means w_i
// continues a phrase started before it and is drawn from the topic's bigram
// row for w_{i-1}; x_i = 0 draws it from the topic's unigram distribution.
// x_i itself is drawn from a Beta-Bernoulli indexed by (z_{i-1}, w_{i-1}).
// Positions that do not directly follow another token (sentence breaks,
// removed stopwords) have x_i = 0 fixed and no status draw.

#include <algorithm>
#include <set>
#include <unordered_map>

#include "cwatch/error.hpp"
#include "cwatch/topics.hpp"

namespace cwatch {

namespace {

struct Sampler {
  const TokenizedCorpus& corpus;
  const TngParams& p;
  int K;
  int V;
  double delta;  // bigram-row prior

  std::vector<int> word, topic, status;
  std::vector<char> joinable;
  std::vector<std::size_t> doc_begin;

  std::vector<int> ndk, nkw, nk, nkp, m, mt;
  std::unordered_map<std::uint64_t, int> bigram;

  Sampler(const TokenizedCorpus& c, const TngParams& params)
      : corpus(c), p(params), K(params.K), V(static_cast<int>(c.vocabulary.size())), delta(params.beta) {
    for (const auto& d : c.documents) {
      doc_begin.push_back(word.size());
      for (std::size_t i = 0; i < d.tokens.size(); ++i) {
        word.push_back(d.tokens[i].term);
        joinable.push_back(i > 0 && d.tokens[i].joined);
      }
    }
    doc_begin.push_back(word.size());
    topic.assign(word.size(), 0);
    status.assign(word.size(), 0);
    ndk.assign(c.documents.size() * K, 0);
    nkw.assign(static_cast<std::size_t>(K) * V, 0);
    nk.assign(K, 0);
    nkp.assign(static_cast<std::size_t>(K) * V, 0);
    m.assign(static_cast<std::size_t>(K) * V * 2, 0);
    mt.assign(static_cast<std::size_t>(K) * V, 0);
  }

  std::size_t kv(int k, int w) const { return static_cast<std::size_t>(k) * V + w; }
  std::uint64_t bigram_key(int k, int prev, int w) const {
    return (static_cast<std::uint64_t>(k) * V + prev) * V + w;
  }

  // Adds (delta = +1) or removes (-1) token i's own contributions: document
  // topic, emission, and the status draw it owns.
  void own(std::size_t d, std::size_t i, int sign) {
    int k = topic[i], w = word[i];
    ndk[d * K + k] += sign;
    if (status[i] == 0) {
      nkw[kv(k, w)] += sign;
      nk[k] += sign;
    } else {
      bigram[bigram_key(k, word[i - 1], w)] += sign;
      nkp[kv(k, word[i - 1])] += sign;
    }
    if (joinable[i]) {
      std::size_t ctx = kv(topic[i - 1], word[i - 1]);
      m[ctx * 2 + status[i]] += sign;
      mt[ctx] += sign;
    }
  }

  // The status draw of token i+1 is indexed by token i's topic.
  void next_status(std::size_t i, std::size_t end, int sign) {
    if (i + 1 < end && joinable[i + 1]) {
      std::size_t ctx = kv(topic[i], word[i]);
      m[ctx * 2 + status[i + 1]] += sign;
      mt[ctx] += sign;
    }
  }

  void initialize(Rng& rng) {
    for (std::size_t d = 0; d + 1 < doc_begin.size(); ++d)
      for (std::size_t i = doc_begin[d]; i < doc_begin[d + 1]; ++i) topic[i] = static_cast<int>(rng.below(K));
    for (std::size_t d = 0; d + 1 < doc_begin.size(); ++d)
      for (std::size_t i = doc_begin[d]; i < doc_begin[d + 1]; ++i) own(d, i, +1);
  }

  void sweep(Rng& rng, std::vector<double>& weights) {
    const double alpha = p.alpha, beta = p.beta, gamma = p.gamma;
    const double vbeta = V * beta, vdelta = V * delta;
    for (std::size_t d = 0; d + 1 < doc_begin.size(); ++d) {
      std::size_t end = doc_begin[d + 1];
      for (std::size_t i = doc_begin[d]; i < end; ++i) {
        own(d, i, -1);
        next_status(i, end, -1);

        const int w = word[i];
        const bool can_join = joinable[i];
        const bool has_next = i + 1 < end && joinable[i + 1];
        const int pw = can_join ? word[i - 1] : -1;
        const int pz = can_join ? topic[i - 1] : -1;
        const int nx = has_next ? status[i + 1] : 0;
        double self[2] = {1.0, 0.0};
        if (can_join) {
          std::size_t ctx = kv(pz, pw);
          self[0] = (m[ctx * 2] + gamma) / (mt[ctx] + 2 * gamma);
          self[1] = (m[ctx * 2 + 1] + gamma) / (mt[ctx] + 2 * gamma);
        }
        const int statuses = can_join ? 2 : 1;
        double total = 0;
        for (int k = 0; k < K; ++k) {
          double doc = ndk[d * K + k] + alpha;
          for (int x = 0; x < statuses; ++x) {
            double emit;
            if (x == 0) {
              emit = (nkw[kv(k, w)] + beta) / (nk[k] + vbeta);
            } else {
              auto it = bigram.find(bigram_key(k, pw, w));
              emit = ((it == bigram.end() ? 0 : it->second) + delta) / (nkp[kv(k, pw)] + vdelta);
            }
            double follow = 1.0;
            if (has_next) {
              std::size_t ctx = kv(k, w);
              // Token i's own status draw lands in the same context when
              // (z_{i-1}, w_{i-1}) == (k, w_i).
              int same = can_join && pz == k && pw == w ? 1 : 0;
              follow = (m[ctx * 2 + nx] + (same && x == nx ? 1 : 0) + gamma) / (mt[ctx] + same + 2 * gamma);
            }
            double weight = doc * self[x] * emit * follow;
            weights[k * 2 + x] = weight;
            total += weight;
          }
        }
        double u = rng.next_double() * total;
        int chosen_k = K - 1, chosen_x = statuses - 1;
        double acc = 0;
        bool found = false;
        for (int k = 0; k < K && !found; ++k)
          for (int x = 0; x < statuses && !found; ++x) {
            acc += weights[k * 2 + x];
            if (u < acc) {
              chosen_k = k;
              chosen_x = x;
              found = true;
            }
          }
        topic[i] = chosen_k;
        status[i] = chosen_x;
        own(d, i, +1);
        next_status(i, end, +1);
      }
    }
  }
};

std::string phrase_text(const TokenizedCorpus& c, const std::vector<int>& words, std::size_t from, std::size_t to) {
  std::string s;
  for (std::size_t i = from; i < to; ++i) {
    if (i > from) s += ' ';
    s += c.vocabulary[words[i]];
  }
  return s;
}

}  // namespace

TopicResult extract_tng(const TokenizedCorpus& corpus, const TngParams& p) {
  if (p.K < 2) throw Error("invalid-parameter", "K must be at least 2");
  if (static_cast<std::size_t>(p.K) > corpus.documents.size())
    throw Error("invalid-parameter", "K exceeds the number of documents");
  if (p.burn_in < 0 || p.iterations <= p.burn_in)
    throw Error("invalid-parameter", "iterations must exceed burn_in and burn_in must be >= 0");
  if (!(p.alpha > 0) || !(p.beta > 0) || !(p.gamma > 0))
    throw Error("invalid-parameter", "alpha, beta and gamma must be positive");
  if (p.top_k < 1) throw Error("invalid-parameter", "top_k must be at least 1");
  if (corpus.vocabulary.empty()) throw Error("empty-corpus", "corpus has no vocabulary");

  Sampler s(corpus, p);
  Rng rng(p.seed);
  s.initialize(rng);

  const int K = p.K;
  const std::size_t V = corpus.vocabulary.size();
  const std::size_t D = corpus.documents.size();
  std::vector<double> weights(static_cast<std::size_t>(K) * 2);
  std::vector<double> uni(K * V, 0.0);
  std::vector<std::unordered_map<std::string, double>> phrases(K);
  std::vector<double> doc_topic(D * K, 0.0);

  for (int it = 0; it < p.iterations; ++it) {
    s.sweep(rng, weights);
    if (it < p.burn_in) continue;
    for (std::size_t d = 0; d < D; ++d) {
      for (int k = 0; k < K; ++k) doc_topic[d * K + k] += s.ndk[d * K + k];
      std::size_t begin = s.doc_begin[d], end = s.doc_begin[d + 1];
      std::size_t i = begin;
      while (i < end) {
        std::size_t j = i + 1;
        while (j < end && s.status[j] == 1) ++j;
        // Runs longer than three words are cut into consecutive chunks.
        for (std::size_t c = i; c < j; c += 3) {
          std::size_t stop = std::min(c + 3, j);
          int k = s.topic[c];
          if (stop - c == 1) uni[k * V + s.word[c]] += 1;
          else phrases[k][phrase_text(corpus, s.word, c, stop)] += 1;
        }
        i = j;
      }
    }
  }

  const double samples = p.iterations - p.burn_in;
  std::vector<std::string> multi;
  {
    std::set<std::string> all;
    for (const auto& table : phrases)
      for (const auto& [text, n] : table) all.insert(text);
    multi.assign(all.begin(), all.end());
  }
  const double support = static_cast<double>(V + multi.size());

  TopicResult r;
  r.algorithm = Algorithm::tng;
  r.seed = p.seed;
  r.params = {{"K", std::to_string(p.K)},
              {"alpha", format_score(p.alpha)},
              {"beta", format_score(p.beta)},
              {"gamma", format_score(p.gamma)},
              {"iterations", std::to_string(p.iterations)},
              {"burn_in", std::to_string(p.burn_in)},
              {"top_k", std::to_string(p.top_k)}};
  for (int k = 0; k < K; ++k) {
    double total = 0;
    for (std::size_t w = 0; w < V; ++w) total += uni[k * V + w] / samples;
    for (const auto& [text, n] : phrases[k]) total += n / samples;
    const double denom = total + support * p.beta;

    TopicInternal internal;
    for (std::size_t w = 0; w < V; ++w)
      internal.ngram_probabilities[corpus.vocabulary[w]] = (uni[k * V + w] / samples + p.beta) / denom;
    for (const auto& text : multi) {
      auto f = phrases[k].find(text);
      double n = f == phrases[k].end() ? 0.0 : f->second;
      internal.ngram_probabilities[text] = (n / samples + p.beta) / denom;
    }

    std::vector<Expression> all;
    all.reserve(internal.ngram_probabilities.size());
    for (const auto& [text, prob] : internal.ngram_probabilities) all.push_back({text, prob});
    std::size_t keep = std::min<std::size_t>(p.top_k, all.size());
    std::partial_sort(all.begin(), all.begin() + keep, all.end(), [](const Expression& a, const Expression& b) {
      if (a.score != b.score) return a.score > b.score;
      return a.text < b.text;
    });
    all.resize(keep);
    r.topics.push_back({k, default_topic_label(k), std::move(all)});
    r.internals.push_back(std::move(internal));
  }

  for (std::size_t d = 0; d < D; ++d) {
    int best = 0;
    for (int k = 1; k < K; ++k)
      if (doc_topic[d * K + k] > doc_topic[d * K + best]) best = k;
    r.assignments[corpus.documents[d].ref] = {best};
  }
  return r;
}

}  // namespace cwatch
