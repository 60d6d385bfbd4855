#include "cwatch/topic_result.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <sstream>

#include "cwatch/error.hpp"

namespace cwatch {

namespace {

std::optional<long long> parse_int(std::string_view s) {
  long long v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size() || s.empty()) return std::nullopt;
  return v;
}

std::optional<std::uint64_t> parse_u64(std::string_view s) {
  std::uint64_t v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size() || s.empty()) return std::nullopt;
  return v;
}

std::optional<double> parse_double(std::string_view s) {
  double v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size() || s.empty()) return std::nullopt;
  return v;
}

std::string join_ids(const std::set<int>& ids) {
  std::string out;
  for (int id : ids) {
    if (!out.empty()) out += ' ';
    out += std::to_string(id);
  }
  return out;
}

std::optional<std::set<int>> split_ids(std::string_view text) {
  std::set<int> ids;
  std::istringstream in{std::string(text)};
  std::string tok;
  while (in >> tok) {
    auto v = parse_int(tok);
    if (!v) return std::nullopt;
    ids.insert(static_cast<int>(*v));
  }
  return ids;
}

bool expression_before(const Expression& a, const Expression& b) {
  if (a.score != b.score) return a.score > b.score;
  return a.text < b.text;
}

const std::string* required(const xml::Node& node, std::string_view name, std::vector<std::string>& errors) {
  const std::string* v = node.attribute(name);
  if (!v) errors.push_back("<" + node.name() + "> lacks attribute " + std::string(name));
  return v;
}

}  // namespace

std::string_view to_string(Algorithm a) { return a == Algorithm::tng ? "tng" : "ckp"; }

std::optional<Algorithm> parse_algorithm(std::string_view text) {
  if (text == "tng") return Algorithm::tng;
  if (text == "ckp") return Algorithm::ckp;
  return std::nullopt;
}

std::string default_topic_label(int id) { return "topic #" + std::to_string(id); }

void sort_expressions(std::vector<Expression>& expressions) {
  std::sort(expressions.begin(), expressions.end(), expression_before);
}

std::string format_score(double value) {
  char buf[64];
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, value);
  (void)ec;
  return std::string(buf, p);
}

xml::Node result_tree(const TopicResult& r) {
  xml::Node root = xml::Node::element("extraction");
  root.set_attribute("algorithm", std::string(to_string(r.algorithm)));
  root.set_attribute("seed", std::to_string(r.seed));
  auto& params = root.append_element("params");
  for (const auto& [k, v] : r.params) {
    auto& p = params.append_element("param");
    p.set_attribute("name", k);
    p.set_attribute("value", v);
  }
  std::vector<const Topic*> topics;
  for (const auto& t : r.topics) topics.push_back(&t);
  std::sort(topics.begin(), topics.end(), [](const Topic* a, const Topic* b) { return a->id < b->id; });
  for (const Topic* t : topics) {
    auto& tn = root.append_element("topic");
    tn.set_attribute("id", std::to_string(t->id));
    tn.set_attribute("label", t->label);
    std::vector<Expression> exprs = t->expressions;
    sort_expressions(exprs);
    for (const auto& e : exprs) {
      auto& en = tn.append_element("expression");
      en.set_attribute("text", e.text);
      en.set_attribute("score", format_score(e.score));
    }
  }
  auto& assignments = root.append_element("assignments");
  for (const auto& [ref, ids] : r.assignments) {
    auto& a = assignments.append_element("assignment");
    a.set_attribute("post", ref.str());
    a.set_attribute("topics", join_ids(ids));
  }
  return root;
}

std::string serialize_result(const TopicResult& r) { return xml::write(result_tree(r), {2, true}); }

std::vector<std::string> validate_result_document(std::string_view document) {
  std::vector<std::string> errors;
  xml::Node root;
  try {
    root = xml::parse(document);
  } catch (const Error& e) {
    return {std::string("not well-formed: ") + e.what()};
  }
  xml::strip_layout_whitespace(root);
  if (root.name() != "extraction") return {"root element must be <extraction>"};
  if (auto a = required(root, "algorithm", errors); a && !parse_algorithm(*a))
    errors.push_back("unknown algorithm " + *a);
  if (auto s = required(root, "seed", errors); s && !parse_u64(*s)) errors.push_back("seed is not an integer");

  // Children must appear as: params, topic*, assignments.
  const auto& kids = root.children();
  std::size_t i = 0;
  std::set<int> topic_ids;
  if (i < kids.size() && kids[i].is_element() && kids[i].name() == "params") {
    std::set<std::string> names;
    for (const auto& p : kids[i].children()) {
      if (!p.is_element() || p.name() != "param") {
        errors.push_back("<params> may only contain <param>");
        continue;
      }
      auto n = required(p, "name", errors);
      required(p, "value", errors);
      if (n && !names.insert(*n).second) errors.push_back("duplicate param " + *n);
    }
    ++i;
  } else {
    errors.push_back("missing <params>");
  }
  for (; i < kids.size() && kids[i].is_element() && kids[i].name() == "topic"; ++i) {
    const auto& t = kids[i];
    auto id = required(t, "id", errors);
    required(t, "label", errors);
    if (id) {
      auto v = parse_int(*id);
      if (!v || *v < 0) errors.push_back("topic id must be a non-negative integer: " + *id);
      else if (!topic_ids.insert(static_cast<int>(*v)).second) errors.push_back("duplicate topic id " + *id);
      else if (topic_ids.size() > 1 && *std::prev(topic_ids.end()) != *v) errors.push_back("topics not ordered by id");
    }
    std::optional<Expression> prev;
    for (const auto& e : t.children()) {
      if (!e.is_element() || e.name() != "expression") {
        errors.push_back("<topic> may only contain <expression>");
        continue;
      }
      auto text = required(e, "text", errors);
      auto score = required(e, "score", errors);
      if (!text || !score) continue;
      if (text->empty()) errors.push_back("empty expression text");
      auto s = parse_double(*score);
      if (!s || !(*s >= 0.0 && *s <= 1.0)) {
        errors.push_back("score out of [0,1]: " + *score);
        continue;
      }
      Expression cur{*text, *s};
      if (prev && !expression_before(*prev, cur)) errors.push_back("expressions not sorted in topic " + (id ? *id : ""));
      prev = cur;
    }
  }
  if (i < kids.size() && kids[i].is_element() && kids[i].name() == "assignments") {
    std::set<std::string> posts;
    for (const auto& a : kids[i].children()) {
      if (!a.is_element() || a.name() != "assignment") {
        errors.push_back("<assignments> may only contain <assignment>");
        continue;
      }
      auto post = required(a, "post", errors);
      auto topics = required(a, "topics", errors);
      if (post && !PostRef::parse(*post)) errors.push_back("malformed post reference " + *post);
      if (post && !posts.insert(*post).second) errors.push_back("duplicate assignment for " + *post);
      if (topics) {
        auto ids = split_ids(*topics);
        if (!ids || ids->empty()) errors.push_back("malformed topic list for " + (post ? *post : ""));
        else
          for (int tid : *ids)
            if (!topic_ids.count(tid)) errors.push_back("assignment to unknown topic " + std::to_string(tid));
      }
    }
    ++i;
  } else {
    errors.push_back("missing <assignments>");
  }
  if (i != kids.size()) errors.push_back("unexpected content after <assignments>");
  return errors;
}

TopicResult deserialize_result(std::string_view document) {
  auto errors = validate_result_document(document);
  if (!errors.empty()) throw Error("result-format", errors.front());
  xml::Node root = xml::parse(document);
  xml::strip_layout_whitespace(root);
  TopicResult r;
  r.algorithm = *parse_algorithm(*root.attribute("algorithm"));
  r.seed = *parse_u64(*root.attribute("seed"));
  for (const auto& kid : root.children()) {
    if (kid.name() == "params") {
      for (const auto& p : kid.children()) r.params[*p.attribute("name")] = *p.attribute("value");
    } else if (kid.name() == "topic") {
      Topic t;
      t.id = static_cast<int>(*parse_int(*kid.attribute("id")));
      t.label = *kid.attribute("label");
      for (const auto& e : kid.children())
        t.expressions.push_back({*e.attribute("text"), *parse_double(*e.attribute("score"))});
      r.topics.push_back(std::move(t));
    } else if (kid.name() == "assignments") {
      for (const auto& a : kid.children())
        r.assignments[*PostRef::parse(*a.attribute("post"))] = *split_ids(*a.attribute("topics"));
    }
  }
  return r;
}

std::vector<std::string> validate_result(const TopicResult& r) {
  std::vector<std::string> errors;
  std::set<int> ids;
  for (const auto& t : r.topics) {
    if (t.id < 0 || !ids.insert(t.id).second) errors.push_back("bad or duplicate topic id " + std::to_string(t.id));
    for (std::size_t i = 0; i < t.expressions.size(); ++i) {
      const auto& e = t.expressions[i];
      if (e.text.empty()) errors.push_back("empty expression in topic " + std::to_string(t.id));
      if (!(e.score >= 0.0 && e.score <= 1.0)) errors.push_back("score out of range in topic " + std::to_string(t.id));
      if (i > 0 && !expression_before(t.expressions[i - 1], e))
        errors.push_back("expressions not strictly sorted in topic " + std::to_string(t.id));
    }
  }
  if (!r.internals.empty() && r.internals.size() != r.topics.size()) errors.push_back("internals do not match topics");
  for (const auto& [ref, set] : r.assignments) {
    if (set.empty()) errors.push_back("empty assignment for " + ref.str());
    if (r.algorithm == Algorithm::tng && set.size() != 1) errors.push_back("tng assignment not a singleton: " + ref.str());
    for (int id : set)
      if (!ids.count(id)) errors.push_back("assignment to unknown topic " + std::to_string(id));
  }
  return errors;
}

}  // namespace cwatch
