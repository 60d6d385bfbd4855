#pragma once

#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "cwatch/model.hpp"

namespace cwatch {

// Arcs from replies whose post has no topic assignment carry this label.
inline constexpr int kUnassignedTopic = -1;

struct Arc {
  std::string src;  // replier
  std::string dst;  // replied-to
  int topic = 0;
  int weight = 1;

  bool operator==(const Arc&) const = default;
};

struct NodeMetrics {
  int weighted_in_degree = 0;
  int weighted_out_degree = 0;
  double betweenness = 0;
  double closeness = 0;

  bool operator==(const NodeMetrics&) const = default;
};

struct NodeRecord {
  Author author;
  NodeMetrics metrics;

  bool operator==(const NodeRecord&) const = default;
};

// Topic-labelled reply multidigraph over authors. Arcs are unique per
// (src, dst, topic) and kept sorted in that order.
struct SocialNetwork {
  std::map<std::string, NodeRecord> nodes;
  std::vector<Arc> arcs;
  std::set<int> topic_ids;

  bool operator==(const SocialNetwork&) const = default;
};

// One node per distinct author. For each post p replying to q and each
// topic t assigned to p, the arc (author(p), author(q), t) gains weight 1.
// Metrics are computed before returning. Warnings name replies that had no
// assignment.
SocialNetwork build_network(const std::vector<CanonicalThread>& threads,
                            const std::map<PostRef, std::set<int>>& assignments,
                            std::vector<std::string>* warnings = nullptr);

// Recomputes degrees and centralities in place.
void compute_metrics(SocialNetwork& network);

// Plain digraph: out-neighbour lists without duplicates. Self-loops are
// allowed and ignored by the path measures.
using Digraph = std::vector<std::vector<int>>;

// Collapses parallel labelled arcs; node i is the i-th name in map order.
Digraph collapse(const SocialNetwork& network);

// Directed, unweighted, unnormalized betweenness (Brandes accumulation).
std::vector<double> betweenness(const Digraph& g);
// Harmonic closeness over outgoing distances: sum of 1/d(v,u), u reachable.
std::vector<double> harmonic_closeness(const Digraph& g);

std::map<std::string, std::pair<int, int>> weighted_degrees(const SocialNetwork& network);  // (in, out)

// Keeps arcs labelled with one of `topics`. Nodes left without arcs stay
// unless keep_isolated is false. Metrics are recomputed on the result.
SocialNetwork filter_by_topics(const SocialNetwork& network, const std::set<int>& topics, bool keep_isolated = true);

// GraphML (default) or JSON. Throws cwatch::Error("unknown-format").
std::string export_network(const SocialNetwork& network, std::string_view format = "graphml");
// Throws cwatch::Error("network-format") or Error("unknown-format").
SocialNetwork import_network(std::string_view document, std::string_view format = "graphml");

}  // namespace cwatch
