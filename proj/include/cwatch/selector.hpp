#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "cwatch/xml.hpp"

namespace cwatch {

// Restricted path expressions over a clean element tree:
//
//   //div[@class='post']/span[2]      descendant, attribute and index predicates
//   /html/body/h1                     absolute child path
//   div[@class~='author']             relative to the context node; ~= matches
//                                     one whitespace-separated token
//   .//a[@rel='next']/@href           '.' is the context node, a final @name
//                                     step yields attribute values
//   div[@data-id]                     attribute presence
//
// Index predicates are 1-based and apply per parent, after the predicates to
// their left.
class Selector {
 public:
  enum class Axis { child, descendant };

  struct Predicate {
    enum class Kind { has_attribute, attribute_equals, attribute_has_token, position };
    Kind kind = Kind::position;
    std::string attribute;
    std::string value;
    std::size_t position = 0;
  };

  struct Step {
    Axis axis = Axis::child;
    bool self = false;              // '.'
    std::string name;               // element name, "*" for any
    std::optional<std::string> attribute;  // final '@name' step
    std::vector<Predicate> predicates;
  };

  // Throws cwatch::Error("selector-syntax").
  static Selector parse(std::string_view text);
  // Description of the first syntax error, or nullopt when the text parses.
  static std::optional<std::string> syntax_error(std::string_view text);

  const std::string& text() const noexcept { return text_; }
  bool absolute() const noexcept { return absolute_; }
  const std::vector<Step>& steps() const noexcept { return steps_; }
  bool selects_attribute() const { return !steps_.empty() && steps_.back().attribute.has_value(); }

 private:
  std::string text_;
  bool absolute_ = false;
  std::vector<Step> steps_;
};

// Preorder positions for sorting matches into document order.
class DocumentIndex {
 public:
  explicit DocumentIndex(const xml::Node& root);

  const xml::Node& root() const noexcept { return *root_; }
  std::size_t order(const xml::Node* node) const;

 private:
  const xml::Node* root_;
  std::unordered_map<const xml::Node*, std::size_t> order_;
};

struct Match {
  const xml::Node* element = nullptr;
  std::optional<std::string> attribute_value;

  // Attribute value, or the element's text content.
  std::string string_value() const;
};

// Matches in document order, without duplicates.
std::vector<Match> select(const Selector& selector, const xml::Node& context, const DocumentIndex& index);

}  // namespace cwatch
