#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace cwatch::xml {

struct Attribute {
  std::string name;
  std::string value;

  bool operator==(const Attribute&) const = default;
};

// Element or text node of an in-memory element tree. Children are held by
// value, so node addresses are stable as long as the tree is not mutated.
class Node {
 public:
  enum class Kind { element, text };

  static Node element(std::string name);
  static Node text_node(std::string text);

  Kind kind() const noexcept { return kind_; }
  bool is_element() const noexcept { return kind_ == Kind::element; }
  bool is_text() const noexcept { return kind_ == Kind::text; }

  const std::string& name() const noexcept { return name_; }
  const std::string& text() const noexcept { return text_; }

  const std::vector<Attribute>& attributes() const noexcept { return attributes_; }
  const std::string* attribute(std::string_view name) const;
  // Replaces an existing attribute of the same name.
  void set_attribute(std::string name, std::string value);
  // Keeps the first value when the attribute already exists.
  void add_attribute_if_absent(std::string name, std::string value);

  const std::vector<Node>& children() const noexcept { return children_; }
  std::vector<Node>& children() noexcept { return children_; }

  Node& append(Node child);
  Node& append_element(std::string name);
  // Convenience for <name>text</name>.
  Node& append_text_element(std::string name, std::string text);
  // Appends text, merging with a trailing text child.
  void append_text(std::string_view text);

  const Node* child(std::string_view name) const;
  std::vector<const Node*> children_named(std::string_view name) const;
  // Text of the first child element with that name, empty when absent.
  std::string child_text(std::string_view name) const;

  // Concatenation of all descendant text, in document order.
  std::string text_content() const;

  bool operator==(const Node&) const = default;

 private:
  Kind kind_ = Kind::element;
  std::string name_;
  std::string text_;
  std::vector<Attribute> attributes_;
  std::vector<Node> children_;
};

struct WriteOptions {
  // Indent element-only content with this many spaces per level; 0 = compact.
  int indent = 0;
  bool declaration = true;
};

std::string escape_text(std::string_view text);
std::string escape_attribute(std::string_view text);

// Serializes the tree. Mixed content is never re-indented, so text is
// reproduced exactly.
std::string write(const Node& root, const WriteOptions& options = {});

// Strict XML parse of a complete document. Throws cwatch::Error("xml-syntax").
Node parse(std::string_view document);

// Removes whitespace-only text children of elements that also contain
// element children (recursively). Used for structured documents.
void strip_layout_whitespace(Node& node);

}  // namespace cwatch::xml
