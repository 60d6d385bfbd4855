#include "cwatch/selector.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <unordered_set>

#include "cwatch/error.hpp"

namespace cwatch {

namespace {

class Parser {
 public:
  explicit Parser(std::string_view text) : text_(text) {}

  void run(bool& absolute, std::vector<Selector::Step>& steps) {
    skip_ws();
    if (at_end()) fail("empty selector");
    Selector::Axis axis = Selector::Axis::child;
    if (consume("//")) {
      absolute = true;
      axis = Selector::Axis::descendant;
    } else if (consume("/")) {
      absolute = true;
    }
    while (true) {
      skip_ws();
      Selector::Step step = parse_step();
      step.axis = axis;
      if (!steps.empty() && steps.back().attribute) fail("attribute step must be last");
      steps.push_back(std::move(step));
      skip_ws();
      if (at_end()) break;
      if (consume("//"))
        axis = Selector::Axis::descendant;
      else if (consume("/"))
        axis = Selector::Axis::child;
      else
        fail(std::string("unexpected '") + peek() + "'");
    }
  }

 private:
  [[noreturn]] void fail(const std::string& what) const {
    throw Error("selector-syntax", what + " at offset " + std::to_string(pos_) + " in '" + std::string(text_) + "'");
  }

  bool at_end() const { return pos_ >= text_.size(); }
  char peek() const { return at_end() ? '\0' : text_[pos_]; }
  void skip_ws() {
    while (!at_end() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }
  bool consume(std::string_view token) {
    if (text_.substr(pos_, token.size()) == token) {
      pos_ += token.size();
      return true;
    }
    return false;
  }

  std::string name() {
    std::size_t start = pos_;
    if (at_end() || !(std::isalpha(static_cast<unsigned char>(peek())) || peek() == '_')) fail("expected a name");
    while (!at_end()) {
      auto c = static_cast<unsigned char>(peek());
      if (!(std::isalnum(c) || c == '_' || c == '-' || c == '.' || c == ':')) break;
      ++pos_;
    }
    std::string out(text_.substr(start, pos_ - start));
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
  }

  std::string literal() {
    char q = peek();
    if (q != '\'' && q != '"') fail("expected a quoted value");
    ++pos_;
    std::size_t end = text_.find(q, pos_);
    if (end == std::string_view::npos) fail("unterminated string");
    std::string out(text_.substr(pos_, end - pos_));
    pos_ = end + 1;
    return out;
  }

  Selector::Step parse_step() {
    Selector::Step step;
    if (consume("@")) {
      step.attribute = name();
      return step;
    }
    if (peek() == '.' && text_.substr(pos_, 2) != "..") {
      ++pos_;
      step.self = true;
    } else if (consume("*")) {
      step.name = "*";
    } else {
      step.name = name();
    }
    skip_ws();
    while (consume("[")) {
      skip_ws();
      step.predicates.push_back(parse_predicate());
      skip_ws();
      if (!consume("]")) fail("expected ']'");
      skip_ws();
    }
    return step;
  }

  Selector::Predicate parse_predicate() {
    Selector::Predicate p;
    if (consume("@")) {
      p.attribute = name();
      skip_ws();
      if (consume("~=")) {
        skip_ws();
        p.kind = Selector::Predicate::Kind::attribute_has_token;
        p.value = literal();
      } else if (consume("=")) {
        skip_ws();
        p.kind = Selector::Predicate::Kind::attribute_equals;
        p.value = literal();
      } else {
        p.kind = Selector::Predicate::Kind::has_attribute;
      }
      return p;
    }
    std::size_t start = pos_;
    while (!at_end() && std::isdigit(static_cast<unsigned char>(peek()))) ++pos_;
    if (start == pos_) fail("expected '@attribute' or a position");
    std::from_chars(text_.data() + start, text_.data() + pos_, p.position);
    if (p.position == 0) fail("positions are 1-based");
    p.kind = Selector::Predicate::Kind::position;
    return p;
  }

  std::string_view text_;
  std::size_t pos_ = 0;
};

bool has_token(std::string_view list, std::string_view token) {
  std::size_t i = 0;
  while (i < list.size()) {
    while (i < list.size() && std::isspace(static_cast<unsigned char>(list[i]))) ++i;
    std::size_t s = i;
    while (i < list.size() && !std::isspace(static_cast<unsigned char>(list[i]))) ++i;
    if (i > s && list.substr(s, i - s) == token) return true;
  }
  return false;
}

bool attribute_ok(const xml::Node& n, const Selector::Predicate& p) {
  const std::string* v = n.attribute(p.attribute);
  if (!v) return false;
  switch (p.kind) {
    case Selector::Predicate::Kind::attribute_equals: return *v == p.value;
    case Selector::Predicate::Kind::attribute_has_token: return has_token(*v, p.value);
    default: return true;
  }
}

// Children of `parent` selected by a name test and predicates. A null parent
// stands for the document node, whose single child is the root.
void child_step(const xml::Node* parent, const Selector::Step& step, const xml::Node& root,
                std::vector<const xml::Node*>& out) {
  std::vector<const xml::Node*> candidates;
  auto consider = [&](const xml::Node& n) {
    if (n.is_element() && (step.name == "*" || n.name() == step.name)) candidates.push_back(&n);
  };
  if (parent == nullptr)
    consider(root);
  else
    for (const auto& c : parent->children()) consider(c);

  for (const auto& p : step.predicates) {
    if (p.kind == Selector::Predicate::Kind::position) {
      if (p.position <= candidates.size())
        candidates = {candidates[p.position - 1]};
      else
        candidates.clear();
    } else {
      std::erase_if(candidates, [&](const xml::Node* n) { return !attribute_ok(*n, p); });
    }
  }
  out.insert(out.end(), candidates.begin(), candidates.end());
}

void descendants_or_self(const xml::Node* n, const xml::Node& root, std::vector<const xml::Node*>& out) {
  out.push_back(n);
  if (n == nullptr) {
    descendants_or_self(&root, root, out);
    return;
  }
  for (const auto& c : n->children())
    if (c.is_element()) descendants_or_self(&c, root, out);
}

}  // namespace

Selector Selector::parse(std::string_view text) {
  Selector s;
  s.text_ = std::string(text);
  Parser(text).run(s.absolute_, s.steps_);
  return s;
}

std::optional<std::string> Selector::syntax_error(std::string_view text) {
  try {
    parse(text);
    return std::nullopt;
  } catch (const Error& e) {
    return std::string(e.what());
  }
}

DocumentIndex::DocumentIndex(const xml::Node& root) : root_(&root) {
  std::vector<const xml::Node*> all;
  descendants_or_self(&root, root, all);
  for (std::size_t i = 0; i < all.size(); ++i) order_.emplace(all[i], i + 1);
}

std::size_t DocumentIndex::order(const xml::Node* node) const {
  if (node == nullptr) return 0;
  auto it = order_.find(node);
  return it == order_.end() ? 0 : it->second;
}

std::string Match::string_value() const {
  if (attribute_value) return *attribute_value;
  return element ? element->text_content() : std::string{};
}

std::vector<Match> select(const Selector& selector, const xml::Node& context, const DocumentIndex& index) {
  const xml::Node& root = index.root();
  // nullptr = document node
  std::vector<const xml::Node*> current{selector.absolute() ? nullptr : &context};

  for (const auto& step : selector.steps()) {
    std::vector<const xml::Node*> bases;
    if (step.axis == Selector::Axis::descendant) {
      for (const auto* n : current) descendants_or_self(n, root, bases);
    } else {
      bases = current;
    }

    if (step.attribute) {
      std::vector<Match> matches;
      std::unordered_set<const xml::Node*> seen;
      std::vector<const xml::Node*> owners;
      for (const auto* n : bases)
        if (n && seen.insert(n).second && n->attribute(*step.attribute)) owners.push_back(n);
      std::sort(owners.begin(), owners.end(),
                [&](auto* a, auto* b) { return index.order(a) < index.order(b); });
      for (const auto* n : owners) matches.push_back({n, *n->attribute(*step.attribute)});
      return matches;
    }

    std::vector<const xml::Node*> next;
    for (const auto* base : bases) {
      if (step.self) {
        if (base) next.push_back(base);
      } else {
        child_step(base, step, root, next);
      }
    }
    std::unordered_set<const xml::Node*> seen;
    std::erase_if(next, [&](const xml::Node* n) { return !seen.insert(n).second; });
    std::sort(next.begin(), next.end(), [&](auto* a, auto* b) { return index.order(a) < index.order(b); });
    current = std::move(next);
  }

  std::vector<Match> out;
  for (const auto* n : current)
    if (n) out.push_back({n, std::nullopt});
  return out;
}

}  // namespace cwatch
