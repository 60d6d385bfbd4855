#include "cwatch/xml.hpp"

#include <expat.h>

#include <algorithm>
#include <memory>

#include "cwatch/error.hpp"

namespace cwatch::xml {

Node Node::element(std::string name) {
  Node n;
  n.kind_ = Kind::element;
  n.name_ = std::move(name);
  return n;
}

Node Node::text_node(std::string text) {
  Node n;
  n.kind_ = Kind::text;
  n.text_ = std::move(text);
  return n;
}

const std::string* Node::attribute(std::string_view name) const {
  for (const auto& a : attributes_)
    if (a.name == name) return &a.value;
  return nullptr;
}

void Node::set_attribute(std::string name, std::string value) {
  for (auto& a : attributes_) {
    if (a.name == name) {
      a.value = std::move(value);
      return;
    }
  }
  attributes_.push_back({std::move(name), std::move(value)});
}

void Node::add_attribute_if_absent(std::string name, std::string value) {
  if (attribute(name) == nullptr) attributes_.push_back({std::move(name), std::move(value)});
}

Node& Node::append(Node child) {
  children_.push_back(std::move(child));
  return children_.back();
}

Node& Node::append_element(std::string name) { return append(element(std::move(name))); }

Node& Node::append_text_element(std::string name, std::string text) {
  Node& e = append_element(std::move(name));
  if (!text.empty()) e.append(text_node(std::move(text)));
  return e;
}

void Node::append_text(std::string_view text) {
  if (text.empty()) return;
  if (!children_.empty() && children_.back().is_text())
    children_.back().text_ += text;
  else
    children_.push_back(text_node(std::string(text)));
}

const Node* Node::child(std::string_view name) const {
  for (const auto& c : children_)
    if (c.is_element() && c.name_ == name) return &c;
  return nullptr;
}

std::vector<const Node*> Node::children_named(std::string_view name) const {
  std::vector<const Node*> out;
  for (const auto& c : children_)
    if (c.is_element() && c.name_ == name) out.push_back(&c);
  return out;
}

std::string Node::child_text(std::string_view name) const {
  const Node* c = child(name);
  return c ? c->text_content() : std::string{};
}

std::string Node::text_content() const {
  if (is_text()) return text_;
  std::string out;
  for (const auto& c : children_) out += c.text_content();
  return out;
}

namespace {

// XML 1.0 Char production; other code points cannot be represented.
bool allowed_char(unsigned char c) { return c >= 0x20 || c == '\t' || c == '\n' || c == '\r'; }

void escape_into(std::string& out, std::string_view text, bool attribute) {
  for (char ch : text) {
    auto c = static_cast<unsigned char>(ch);
    switch (ch) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '\r': out += "&#13;"; break;
      case '"':
        out += attribute ? "&quot;" : "\"";
        break;
      case '\n':
        out += attribute ? "&#10;" : "\n";
        break;
      case '\t':
        out += attribute ? "&#9;" : "\t";
        break;
      default:
        if (allowed_char(c)) out += ch;
    }
  }
}

bool element_only(const Node& n) {
  bool any_element = false;
  for (const auto& c : n.children()) {
    if (c.is_text()) return false;
    any_element = true;
  }
  return any_element;
}

void write_node(std::string& out, const Node& n, const WriteOptions& opt, int depth) {
  if (n.is_text()) {
    escape_into(out, n.text(), false);
    return;
  }
  out += '<';
  out += n.name();
  for (const auto& a : n.attributes()) {
    out += ' ';
    out += a.name;
    out += "=\"";
    escape_into(out, a.value, true);
    out += '"';
  }
  if (n.children().empty()) {
    out += "/>";
    return;
  }
  out += '>';
  bool pretty = opt.indent > 0 && element_only(n);
  for (const auto& c : n.children()) {
    if (pretty) {
      out += '\n';
      out.append(static_cast<std::size_t>((depth + 1) * opt.indent), ' ');
    }
    write_node(out, c, opt, depth + 1);
  }
  if (pretty) {
    out += '\n';
    out.append(static_cast<std::size_t>(depth * opt.indent), ' ');
  }
  out += "</";
  out += n.name();
  out += '>';
}

struct ParseState {
  std::vector<Node*> stack;
  Node root = Node::element("");
};

void XMLCALL on_start(void* data, const XML_Char* name, const XML_Char** attrs) {
  auto* st = static_cast<ParseState*>(data);
  Node e = Node::element(name);
  for (int i = 0; attrs[i] != nullptr; i += 2) e.set_attribute(attrs[i], attrs[i + 1]);
  Node& placed = st->stack.back()->append(std::move(e));
  st->stack.push_back(&placed);
}

void XMLCALL on_end(void* data, const XML_Char*) {
  static_cast<ParseState*>(data)->stack.pop_back();
}

void XMLCALL on_text(void* data, const XML_Char* s, int len) {
  auto* st = static_cast<ParseState*>(data);
  if (st->stack.size() > 1) st->stack.back()->append_text(std::string_view(s, static_cast<std::size_t>(len)));
}

}  // namespace

std::string escape_text(std::string_view text) {
  std::string out;
  escape_into(out, text, false);
  return out;
}

std::string escape_attribute(std::string_view text) {
  std::string out;
  escape_into(out, text, true);
  return out;
}

std::string write(const Node& root, const WriteOptions& options) {
  std::string out;
  if (options.declaration) out += "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  write_node(out, root, options, 0);
  out += '\n';
  return out;
}

Node parse(std::string_view document) {
  std::unique_ptr<std::remove_pointer_t<XML_Parser>, decltype(&XML_ParserFree)> parser(
      XML_ParserCreate("UTF-8"), &XML_ParserFree);
  if (!parser) throw Error("xml-syntax", "cannot create XML parser");
  ParseState st;
  st.stack.push_back(&st.root);
  XML_SetUserData(parser.get(), &st);
  XML_SetElementHandler(parser.get(), on_start, on_end);
  XML_SetCharacterDataHandler(parser.get(), on_text);
  if (XML_Parse(parser.get(), document.data(), static_cast<int>(document.size()), XML_TRUE) ==
      XML_STATUS_ERROR) {
    throw Error("xml-syntax", std::string(XML_ErrorString(XML_GetErrorCode(parser.get()))) +
                                  " at line " +
                                  std::to_string(XML_GetCurrentLineNumber(parser.get())));
  }
  if (st.root.children().size() != 1) throw Error("xml-syntax", "document has no root element");
  return std::move(st.root.children().front());
}

void strip_layout_whitespace(Node& node) {
  if (!node.is_element()) return;
  auto& kids = node.children();
  bool has_element = std::any_of(kids.begin(), kids.end(), [](const Node& c) { return c.is_element(); });
  if (has_element) {
    std::erase_if(kids, [](const Node& c) {
      return c.is_text() && c.text().find_first_not_of(" \t\r\n") == std::string::npos;
    });
  }
  for (auto& c : kids) strip_layout_whitespace(c);
}

}  // namespace cwatch::xml
