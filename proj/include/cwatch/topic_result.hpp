#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "cwatch/model.hpp"
#include "cwatch/xml.hpp"

namespace cwatch {

enum class Algorithm { tng, ckp };

std::string_view to_string(Algorithm a);
std::optional<Algorithm> parse_algorithm(std::string_view text);

struct Expression {
  std::string text;  // 1..3 words
  double score = 0;  // in [0, 1]

  bool operator==(const Expression&) const = default;
};

struct Topic {
  int id = 0;
  std::string label;
  std::vector<Expression> expressions;  // score desc, then text asc

  bool operator==(const Topic&) const = default;
};

std::string default_topic_label(int id);

// Model state behind a topic's scores. tng keeps the full probability table
// over its n-gram support; ckp keeps the unit centroid as sparse weights
// over vocabulary terms.
struct TopicInternal {
  std::map<std::string, double> ngram_probabilities;
  std::vector<std::pair<std::string, double>> centroid;

  bool operator==(const TopicInternal&) const = default;
};

struct TopicResult {
  Algorithm algorithm = Algorithm::tng;
  std::map<std::string, std::string> params;
  std::vector<Topic> topics;  // by id
  std::map<PostRef, std::set<int>> assignments;
  std::vector<TopicInternal> internals;  // parallel to topics
  std::uint64_t seed = 0;

  bool operator==(const TopicResult&) const = default;
};

// Sorts expressions by (score desc, text asc).
void sort_expressions(std::vector<Expression>& expressions);

// Shortest decimal text that reads back to the same double.
std::string format_score(double value);

// The unified result document:
//
//   <extraction algorithm="tng" seed="7">
//     <params><param name="K" value="2"/>...</params>
//     <topic id="0" label="topic #0"><expression text="battery" score="0.05"/>...</topic>
//     <assignments><assignment post="t1/p1" topics="0"/>...</assignments>
//   </extraction>
//
// Internals are not part of the document.
xml::Node result_tree(const TopicResult& r);
std::string serialize_result(const TopicResult& r);
// Throws cwatch::Error("result-format").
TopicResult deserialize_result(std::string_view document);

// Schema check shared by both algorithms; returns violations, empty when valid.
std::vector<std::string> validate_result_document(std::string_view document);
// Semantic invariants: scores in [0,1], ordering, assigned ids exist,
// singleton tng assignments.
std::vector<std::string> validate_result(const TopicResult& r);

}  // namespace cwatch
