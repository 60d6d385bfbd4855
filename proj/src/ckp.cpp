// Overlapping clustering over tf-idf post vectors. Each cluster is a topic;
// its expressions are the frequent n-grams of its members, scored by how
// close their embedding lies to the cluster centroid.

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "cwatch/error.hpp"
#include "cwatch/topics.hpp"

namespace cwatch {

namespace {

using Sparse = std::vector<std::pair<int, double>>;  // sorted by term
using Dense = std::vector<double>;

double dot(const Sparse& a, const Dense& b) {
  double s = 0;
  for (const auto& [i, v] : a) s += v * b[i];
  return s;
}

void normalize(Dense& v) {
  double n = 0;
  for (double x : v) n += x * x;
  n = std::sqrt(n);
  if (n > 0)
    for (double& x : v) x /= n;
}

// Unit mean of the given document vectors.
Dense unit_mean(const std::vector<Sparse>& docs, const std::vector<int>& members, std::size_t V) {
  Dense mean(V, 0.0);
  for (int d : members)
    for (const auto& [i, v] : docs[d]) mean[i] += v;
  for (double& x : mean) x /= static_cast<double>(members.size());
  normalize(mean);
  return mean;
}

std::vector<Sparse> tfidf(const TokenizedCorpus& corpus) {
  const std::size_t N = corpus.documents.size();
  std::vector<int> df(corpus.vocabulary.size(), 0);
  std::vector<std::map<int, int>> tf(N);
  for (std::size_t d = 0; d < N; ++d) {
    for (const auto& t : corpus.documents[d].tokens) ++tf[d][t.term];
    for (const auto& [term, n] : tf[d]) ++df[term];
  }
  std::vector<Sparse> out(N);
  for (std::size_t d = 0; d < N; ++d) {
    double norm = 0;
    for (const auto& [term, n] : tf[d]) {
      double w = n * (std::log((1.0 + N) / (1.0 + df[term])) + 1.0);
      out[d].emplace_back(term, w);
      norm += w * w;
    }
    norm = std::sqrt(norm);
    for (auto& [term, w] : out[d]) w /= norm;
  }
  return out;
}

// k-means++ seeding on the unit sphere, where squared distance is 2 - 2cos.
std::vector<Dense> seed_centroids(const std::vector<Sparse>& docs, int K, std::size_t V, Rng& rng) {
  std::vector<Dense> centroids;
  std::vector<char> used(docs.size(), 0);
  auto as_dense = [&](int d) {
    Dense c(V, 0.0);
    for (const auto& [i, v] : docs[d]) c[i] = v;
    return c;
  };
  int first = static_cast<int>(rng.below(docs.size()));
  used[first] = 1;
  centroids.push_back(as_dense(first));
  std::vector<double> dist(docs.size());
  while (static_cast<int>(centroids.size()) < K) {
    double total = 0;
    for (std::size_t d = 0; d < docs.size(); ++d) {
      double best = 0;
      for (const auto& c : centroids) best = std::max(best, dot(docs[d], c));
      dist[d] = used[d] ? 0.0 : std::max(0.0, 2.0 - 2.0 * best);
      total += dist[d];
    }
    int pick = -1;
    if (total > 0) {
      double u = rng.next_double() * total, acc = 0;
      for (std::size_t d = 0; d < docs.size(); ++d) {
        acc += dist[d];
        if (dist[d] > 0 && u < acc) {
          pick = static_cast<int>(d);
          break;
        }
      }
      if (pick < 0)
        for (std::size_t d = docs.size(); d-- > 0;)
          if (dist[d] > 0) {
            pick = static_cast<int>(d);
            break;
          }
    } else {
      // Every remaining document duplicates a centroid; take an unused one.
      std::vector<int> free;
      for (std::size_t d = 0; d < docs.size(); ++d)
        if (!used[d]) free.push_back(static_cast<int>(d));
      pick = free[rng.below(free.size())];
    }
    used[pick] = 1;
    centroids.push_back(as_dense(pick));
  }
  return centroids;
}

using Assignment = std::vector<std::vector<int>>;  // document -> sorted clusters

// Primary cluster = argmax cosine (smallest id on ties). With beta < 1 the
// document also joins every other cluster whose cosine reaches beta times
// the maximum, provided that maximum is positive.
Assignment assign(const std::vector<Sparse>& docs, const std::vector<Dense>& centroids, double beta) {
  Assignment out(docs.size());
  std::vector<double> cos(centroids.size());
  for (std::size_t d = 0; d < docs.size(); ++d) {
    int best = 0;
    for (std::size_t c = 0; c < centroids.size(); ++c) {
      cos[c] = dot(docs[d], centroids[c]);
      if (cos[c] > cos[best]) best = static_cast<int>(c);
    }
    double m = cos[best];
    for (std::size_t c = 0; c < centroids.size(); ++c) {
      bool member = static_cast<int>(c) == best || (beta < 1.0 && m > 0 && cos[c] >= beta * m);
      if (member) out[d].push_back(static_cast<int>(c));
    }
  }
  return out;
}

std::vector<std::vector<int>> members_of(const Assignment& a, int K) {
  std::vector<std::vector<int>> members(K);
  for (std::size_t d = 0; d < a.size(); ++d)
    for (int c : a[d]) members[c].push_back(static_cast<int>(d));
  return members;
}

std::string ngram_text(const TokenizedCorpus& corpus, const std::vector<Token>& tokens, std::size_t from,
                       std::size_t n) {
  std::string s;
  for (std::size_t i = from; i < from + n; ++i) {
    if (i > from) s += ' ';
    s += corpus.vocabulary[tokens[i].term];
  }
  return s;
}

}  // namespace

TopicResult extract_ckp(const TokenizedCorpus& corpus, const CkpParams& p) {
  if (p.K < 2) throw Error("invalid-parameter", "K must be at least 2");
  if (static_cast<std::size_t>(p.K) > corpus.documents.size())
    throw Error("invalid-parameter", "K exceeds the number of non-empty documents");
  if (!(p.beta > 0.0 && p.beta <= 1.0)) throw Error("invalid-parameter", "beta must be in (0, 1]");
  if (p.min_support < 1) throw Error("invalid-parameter", "min_support must be at least 1");
  if (p.max_iters < 1) throw Error("invalid-parameter", "max_iters must be at least 1");
  if (p.top_k < 1) throw Error("invalid-parameter", "top_k must be at least 1");

  const std::size_t V = corpus.vocabulary.size();
  const int K = p.K;
  std::vector<Sparse> docs = tfidf(corpus);
  Rng rng(p.seed);
  std::vector<Dense> centroids = seed_centroids(docs, K, V, rng);

  Assignment current = assign(docs, centroids, p.beta);
  for (int it = 0; it < p.max_iters; ++it) {
    auto members = members_of(current, K);
    // Refill empty clusters with the document farthest from every centroid.
    std::set<int> taken;
    for (int c = 0; c < K; ++c) {
      if (!members[c].empty()) continue;
      int far = -1;
      double far_cos = 2;
      for (std::size_t d = 0; d < docs.size(); ++d) {
        if (taken.count(static_cast<int>(d))) continue;
        double best = -2;
        for (const auto& cen : centroids) best = std::max(best, dot(docs[d], cen));
        if (best < far_cos) {
          far_cos = best;
          far = static_cast<int>(d);
        }
      }
      taken.insert(far);
      for (auto& m : members) m.erase(std::remove(m.begin(), m.end(), far), m.end());
      members[c] = {far};
    }
    for (int c = 0; c < K; ++c)
      if (!members[c].empty()) centroids[c] = unit_mean(docs, members[c], V);
    Assignment next = assign(docs, centroids, p.beta);
    if (next == current && taken.empty()) break;
    current = std::move(next);
  }
  auto members = members_of(current, K);
  for (int c = 0; c < K; ++c)
    if (!members[c].empty()) centroids[c] = unit_mean(docs, members[c], V);

  TopicResult r;
  r.algorithm = Algorithm::ckp;
  r.seed = p.seed;
  r.params = {{"K", std::to_string(p.K)},
              {"beta", format_score(p.beta)},
              {"min_support", std::to_string(p.min_support)},
              {"max_iters", std::to_string(p.max_iters)},
              {"top_k", std::to_string(p.top_k)}};

  for (int c = 0; c < K; ++c) {
    // n-grams (n <= 3) over runs of joined tokens, with the documents that
    // contain them.
    std::map<std::string, std::vector<int>> grams;
    for (int d : members[c]) {
      const auto& tokens = corpus.documents[d].tokens;
      std::set<std::string> seen;
      for (std::size_t i = 0; i < tokens.size(); ++i) {
        for (std::size_t n = 1; n <= 3 && i + n <= tokens.size(); ++n) {
          if (n > 1 && !tokens[i + n - 1].joined) break;
          seen.insert(ngram_text(corpus, tokens, i, n));
        }
      }
      for (const auto& g : seen) grams[g].push_back(d);
    }
    std::vector<Expression> exprs;
    for (const auto& [text, holders] : grams) {
      if (static_cast<int>(holders.size()) < p.min_support) continue;
      Dense emb = unit_mean(docs, holders, V);
      double sq = 0;
      for (std::size_t i = 0; i < V; ++i) {
        double diff = emb[i] - centroids[c][i];
        sq += diff * diff;
      }
      // For unit vectors |a - b|^2 / 4 = (1 - cos) / 2.
      double score = std::clamp(1.0 - sq / 4.0, 0.0, 1.0);
      exprs.push_back({text, score});
    }
    sort_expressions(exprs);
    if (static_cast<int>(exprs.size()) > p.top_k) exprs.resize(p.top_k);
    r.topics.push_back({c, default_topic_label(c), std::move(exprs)});

    TopicInternal internal;
    for (std::size_t i = 0; i < V; ++i)
      if (centroids[c][i] != 0.0) internal.centroid.emplace_back(corpus.vocabulary[i], centroids[c][i]);
    r.internals.push_back(std::move(internal));
  }
  for (std::size_t d = 0; d < docs.size(); ++d)
    r.assignments[corpus.documents[d].ref] = std::set<int>(current[d].begin(), current[d].end());
  return r;
}

}  // namespace cwatch
