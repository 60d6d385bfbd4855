#include "cwatch/html.hpp"

#include <unicode/ucnv.h>
#include <unicode/unistr.h>

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <memory>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "cwatch/error.hpp"

namespace cwatch {

namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

bool iequals_prefix(std::string_view text, std::size_t pos, std::string_view prefix) {
  if (pos + prefix.size() > text.size()) return false;
  for (std::size_t i = 0; i < prefix.size(); ++i)
    if (std::tolower(static_cast<unsigned char>(text[pos + i])) != prefix[i]) return false;
  return true;
}

void append_utf8(std::string& out, char32_t cp) {
  if (cp < 0x80) {
    out += static_cast<char>(cp);
  } else if (cp < 0x800) {
    out += static_cast<char>(0xC0 | (cp >> 6));
    out += static_cast<char>(0x80 | (cp & 0x3F));
  } else if (cp < 0x10000) {
    out += static_cast<char>(0xE0 | (cp >> 12));
    out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
    out += static_cast<char>(0x80 | (cp & 0x3F));
  } else {
    out += static_cast<char>(0xF0 | (cp >> 18));
    out += static_cast<char>(0x80 | ((cp >> 12) & 0x3F));
    out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
    out += static_cast<char>(0x80 | (cp & 0x3F));
  }
}

const std::unordered_map<std::string_view, char32_t>& named_entities() {
  static const std::unordered_map<std::string_view, char32_t> table = {
      {"amp", U'&'},      {"lt", U'<'},       {"gt", U'>'},       {"quot", U'"'},
      {"apos", U'\''},    {"nbsp", 0xA0},     {"iexcl", 0xA1},    {"cent", 0xA2},
      {"pound", 0xA3},    {"curren", 0xA4},   {"yen", 0xA5},      {"brvbar", 0xA6},
      {"sect", 0xA7},     {"uml", 0xA8},      {"copy", 0xA9},     {"ordf", 0xAA},
      {"laquo", 0xAB},    {"not", 0xAC},      {"shy", 0xAD},      {"reg", 0xAE},
      {"macr", 0xAF},     {"deg", 0xB0},      {"plusmn", 0xB1},   {"sup2", 0xB2},
      {"sup3", 0xB3},     {"acute", 0xB4},    {"micro", 0xB5},    {"para", 0xB6},
      {"middot", 0xB7},   {"cedil", 0xB8},    {"sup1", 0xB9},     {"ordm", 0xBA},
      {"raquo", 0xBB},    {"frac14", 0xBC},   {"frac12", 0xBD},   {"frac34", 0xBE},
      {"iquest", 0xBF},   {"Agrave", 0xC0},   {"Aacute", 0xC1},   {"Acirc", 0xC2},
      {"Atilde", 0xC3},   {"Auml", 0xC4},     {"Aring", 0xC5},    {"AElig", 0xC6},
      {"Ccedil", 0xC7},   {"Egrave", 0xC8},   {"Eacute", 0xC9},   {"Ecirc", 0xCA},
      {"Euml", 0xCB},     {"Igrave", 0xCC},   {"Iacute", 0xCD},   {"Icirc", 0xCE},
      {"Iuml", 0xCF},     {"ETH", 0xD0},      {"Ntilde", 0xD1},   {"Ograve", 0xD2},
      {"Oacute", 0xD3},   {"Ocirc", 0xD4},    {"Otilde", 0xD5},   {"Ouml", 0xD6},
      {"times", 0xD7},    {"Oslash", 0xD8},   {"Ugrave", 0xD9},   {"Uacute", 0xDA},
      {"Ucirc", 0xDB},    {"Uuml", 0xDC},     {"Yacute", 0xDD},   {"THORN", 0xDE},
      {"szlig", 0xDF},    {"agrave", 0xE0},   {"aacute", 0xE1},   {"acirc", 0xE2},
      {"atilde", 0xE3},   {"auml", 0xE4},     {"aring", 0xE5},    {"aelig", 0xE6},
      {"ccedil", 0xE7},   {"egrave", 0xE8},   {"eacute", 0xE9},   {"ecirc", 0xEA},
      {"euml", 0xEB},     {"igrave", 0xEC},   {"iacute", 0xED},   {"icirc", 0xEE},
      {"iuml", 0xEF},     {"eth", 0xF0},      {"ntilde", 0xF1},   {"ograve", 0xF2},
      {"oacute", 0xF3},   {"ocirc", 0xF4},    {"otilde", 0xF5},   {"ouml", 0xF6},
      {"divide", 0xF7},   {"oslash", 0xF8},   {"ugrave", 0xF9},   {"uacute", 0xFA},
      {"ucirc", 0xFB},    {"uuml", 0xFC},     {"yacute", 0xFD},   {"thorn", 0xFE},
      {"yuml", 0xFF},     {"OElig", 0x152},   {"oelig", 0x153},   {"Scaron", 0x160},
      {"scaron", 0x161},  {"Yuml", 0x178},    {"fnof", 0x192},    {"circ", 0x2C6},
      {"tilde", 0x2DC},   {"ensp", 0x2002},   {"emsp", 0x2003},   {"thinsp", 0x2009},
      {"zwnj", 0x200C},   {"zwj", 0x200D},    {"lrm", 0x200E},    {"rlm", 0x200F},
      {"ndash", 0x2013},  {"mdash", 0x2014},  {"lsquo", 0x2018},  {"rsquo", 0x2019},
      {"sbquo", 0x201A},  {"ldquo", 0x201C},  {"rdquo", 0x201D},  {"bdquo", 0x201E},
      {"dagger", 0x2020}, {"Dagger", 0x2021}, {"bull", 0x2022},   {"hellip", 0x2026},
      {"permil", 0x2030}, {"prime", 0x2032},  {"lsaquo", 0x2039}, {"rsaquo", 0x203A},
      {"euro", 0x20AC},   {"trade", 0x2122},  {"larr", 0x2190},   {"rarr", 0x2192},
      {"hearts", 0x2665},
  };
  return table;
}

// Entities browsers still accept without the trailing semicolon.
bool legacy_entity(std::string_view name) {
  return name == "amp" || name == "lt" || name == "gt" || name == "quot" || name == "nbsp" ||
         name == "copy" || name == "reg";
}

bool xml_char_allowed(char32_t cp) {
  return cp == 0x9 || cp == 0xA || cp == 0xD || (cp >= 0x20 && cp <= 0xD7FF) ||
         (cp >= 0xE000 && cp <= 0xFFFD) || (cp >= 0x10000 && cp <= 0x10FFFF);
}

// Drops characters XML cannot carry and folds CR/CRLF to LF.
std::string sanitize_text(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  for (std::size_t i = 0; i < text.size(); ++i) {
    auto c = static_cast<unsigned char>(text[i]);
    if (c == '\r') {
      out += '\n';
      if (i + 1 < text.size() && text[i + 1] == '\n') ++i;
    } else if (c < 0x20 && c != '\t' && c != '\n') {
      continue;
    } else {
      out += static_cast<char>(c);
    }
  }
  return out;
}

const std::unordered_set<std::string_view>& void_elements() {
  static const std::unordered_set<std::string_view> set = {
      "area", "base", "br", "col", "embed", "hr", "img", "input", "keygen",
      "link", "meta", "param", "source", "track", "wbr"};
  return set;
}

const std::unordered_set<std::string_view>& closes_paragraph() {
  static const std::unordered_set<std::string_view> set = {
      "address", "article", "aside", "blockquote", "center", "details", "div", "dl",
      "fieldset", "figcaption", "figure", "footer", "form", "h1", "h2", "h3",
      "h4", "h5", "h6", "header", "hr", "li", "main", "nav", "ol",
      "p", "pre", "section", "table", "ul", "dd", "dt"};
  return set;
}

// Elements that stop the search for an element to implicitly close.
const std::unordered_set<std::string_view>& scope_boundaries() {
  static const std::unordered_set<std::string_view> set = {
      "html", "body", "table", "td", "th", "caption", "div", "blockquote",
      "section", "article", "ul", "ol", "dl", "select", "form", "button"};
  return set;
}

bool valid_name_start(unsigned char c) { return std::isalpha(c) || c == '_'; }
bool valid_name_char(unsigned char c) {
  return std::isalnum(c) || c == '_' || c == '-' || c == '.' || c == ':';
}

bool valid_xml_name(std::string_view name) {
  if (name.empty() || !valid_name_start(static_cast<unsigned char>(name[0]))) return false;
  return std::all_of(name.begin(), name.end(), [](char c) { return valid_name_char(static_cast<unsigned char>(c)); });
}

class TreeBuilder {
 public:
  TreeBuilder() : document_(xml::Node::element("#document")) { stack_.push_back(&document_); }

  void text(std::string_view raw) {
    std::string decoded = sanitize_text(decode_entities(raw));
    if (!decoded.empty()) stack_.back()->append_text(decoded);
  }

  void literal_text(std::string_view decoded) {
    std::string clean = sanitize_text(decoded);
    if (!clean.empty()) stack_.back()->append_text(clean);
  }

  void start(const std::string& name, std::vector<xml::Attribute> attrs, bool self_closing) {
    if (name == "html" || name == "body" || name == "head") {
      if (seen_.count(name)) {
        if (xml::Node* existing = find_open(name))
          for (auto& a : attrs) existing->add_attribute_if_absent(a.name, a.value);
        return;
      }
      seen_.insert(name);
    }
    apply_implied_ends(name);
    auto element = xml::Node::element(name);
    for (auto& a : attrs) element.add_attribute_if_absent(std::move(a.name), std::move(a.value));
    xml::Node& placed = stack_.back()->append(std::move(element));
    if (!self_closing && !void_elements().count(name)) stack_.push_back(&placed);
  }

  void end(const std::string& name) {
    if (void_elements().count(name)) return;
    for (std::size_t i = stack_.size(); i-- > 1;) {
      if (stack_[i]->name() == name) {
        stack_.resize(i);
        return;
      }
    }
    // stray end tag: dropped
  }

  xml::Node finish() {
    auto& top = document_.children();
    std::size_t html_count = 0;
    bool stray_content = false;
    for (const auto& c : top) {
      if (c.is_element() && c.name() == "html")
        ++html_count;
      else if (c.is_element() || c.text().find_first_not_of(" \t\n") != std::string::npos)
        stray_content = true;
    }
    if (html_count == 1 && !stray_content) {
      for (auto& c : top)
        if (c.is_element()) return std::move(c);
    }
    auto root = xml::Node::element("html");
    for (auto& c : top) {
      if (c.is_text() && c.text().find_first_not_of(" \t\n") == std::string::npos) continue;
      if (c.is_element() && c.name() == "html") {
        for (auto& a : c.attributes()) root.add_attribute_if_absent(a.name, a.value);
        for (auto& g : c.children()) root.append(std::move(g));
      } else {
        root.append(std::move(c));
      }
    }
    return root;
  }

 private:
  xml::Node* find_open(std::string_view name) {
    for (auto* n : stack_)
      if (n->name() == name) return n;
    return nullptr;
  }

  // Pops up to and including the nearest open element in `targets`, without
  // crossing any element in `stops`.
  // Elements in `crossable` may be closed on the way even if they are
  // normally scope boundaries.
  void close_nearest(std::initializer_list<std::string_view> targets,
                     std::initializer_list<std::string_view> stops,
                     std::initializer_list<std::string_view> crossable = {}) {
    auto contains = [](std::initializer_list<std::string_view> set, std::string_view n) {
      return std::find(set.begin(), set.end(), n) != set.end();
    };
    for (std::size_t i = stack_.size(); i-- > 1;) {
      std::string_view n = stack_[i]->name();
      if (contains(targets, n)) {
        stack_.resize(i);
        return;
      }
      if (contains(stops, n)) return;
      if (scope_boundaries().count(n) && !contains(crossable, n)) return;
    }
  }

  void apply_implied_ends(const std::string& name) {
    if (closes_paragraph().count(name)) close_nearest({"p"}, {});
    if (name == "li") close_nearest({"li"}, {"ul", "ol"});
    else if (name == "dt" || name == "dd") close_nearest({"dt", "dd"}, {"dl"});
    else if (name == "tr") close_nearest({"tr"}, {"table", "tbody", "thead", "tfoot"}, {"td", "th"});
    else if (name == "td" || name == "th") close_cell();
    else if (name == "thead" || name == "tbody" || name == "tfoot") close_nearest({"thead", "tbody", "tfoot"}, {"table"}, {"td", "th"});
    else if (name == "option") close_nearest({"option"}, {"select"});
    else if (name == "a") close_nearest({"a"}, {});
  }

  // td/th are themselves scope boundaries, so handle them explicitly.
  void close_cell() {
    for (std::size_t i = stack_.size(); i-- > 1;) {
      std::string_view n = stack_[i]->name();
      if (n == "td" || n == "th") {
        stack_.resize(i);
        return;
      }
      if (n == "tr" || n == "table") return;
    }
  }

  xml::Node document_;
  std::vector<xml::Node*> stack_;
  std::unordered_set<std::string> seen_;
};

std::size_t find_ci(std::string_view text, std::string_view needle, std::size_t from) {
  for (std::size_t i = from; i + needle.size() <= text.size(); ++i)
    if (iequals_prefix(text, i, needle)) return i;
  return std::string_view::npos;
}

// Parses "<name attr=... >" starting at text[pos] == '<'. Returns the index
// after '>' or npos when this is not a tag.
std::size_t parse_start_tag(std::string_view text, std::size_t pos, std::string& name,
                            std::vector<xml::Attribute>& attrs, bool& self_closing) {
  std::size_t i = pos + 1;
  if (i >= text.size() || !std::isalpha(static_cast<unsigned char>(text[i]))) return std::string_view::npos;
  std::size_t start = i;
  while (i < text.size() && !std::isspace(static_cast<unsigned char>(text[i])) && text[i] != '>' && text[i] != '/') ++i;
  name = lower(text.substr(start, i - start));
  attrs.clear();
  self_closing = false;
  while (i < text.size()) {
    while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    if (i >= text.size()) break;
    if (text[i] == '>') return i + 1;
    if (text[i] == '/') {
      ++i;
      if (i < text.size() && text[i] == '>') {
        self_closing = true;
        return i + 1;
      }
      continue;
    }
    std::size_t an = i;
    while (i < text.size() && !std::isspace(static_cast<unsigned char>(text[i])) && text[i] != '=' &&
           text[i] != '>' && !(text[i] == '/' && i + 1 < text.size() && text[i + 1] == '>'))
      ++i;
    std::string attr_name = lower(text.substr(an, i - an));
    while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    std::string value;
    if (i < text.size() && text[i] == '=') {
      ++i;
      while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
      if (i < text.size() && (text[i] == '"' || text[i] == '\'')) {
        char q = text[i++];
        std::size_t vs = i;
        while (i < text.size() && text[i] != q) ++i;
        value = decode_entities(text.substr(vs, i - vs));
        if (i < text.size()) ++i;
      } else {
        std::size_t vs = i;
        while (i < text.size() && !std::isspace(static_cast<unsigned char>(text[i])) && text[i] != '>') ++i;
        value = decode_entities(text.substr(vs, i - vs));
      }
    }
    if (valid_xml_name(attr_name) && attr_name.find(':') == std::string::npos)
      attrs.push_back({attr_name, sanitize_text(value)});
    else if (attr_name.empty() && an == i)
      ++i;
  }
  return text.size();
}

std::optional<std::string> try_convert(std::string_view bytes, const std::string& label) {
  UErrorCode status = U_ZERO_ERROR;
  std::unique_ptr<UConverter, decltype(&ucnv_close)> conv(ucnv_open(label.c_str(), &status), &ucnv_close);
  if (U_FAILURE(status) || !conv) return std::nullopt;
  ucnv_setToUCallBack(conv.get(), UCNV_TO_U_CALLBACK_STOP, nullptr, nullptr, nullptr, &status);
  if (U_FAILURE(status)) return std::nullopt;
  icu::UnicodeString text(bytes.data(), static_cast<int32_t>(bytes.size()), conv.get(), status);
  if (U_FAILURE(status)) return std::nullopt;
  std::string out;
  text.toUTF8String(out);
  return out;
}

}  // namespace

std::string decode_entities(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  std::size_t i = 0;
  while (i < text.size()) {
    if (text[i] != '&') {
      out += text[i++];
      continue;
    }
    std::size_t j = i + 1;
    if (j < text.size() && text[j] == '#') {
      ++j;
      int base = 10;
      if (j < text.size() && (text[j] == 'x' || text[j] == 'X')) {
        base = 16;
        ++j;
      }
      std::size_t ds = j;
      while (j < text.size() && std::isxdigit(static_cast<unsigned char>(text[j])) &&
             (base == 16 || std::isdigit(static_cast<unsigned char>(text[j]))))
        ++j;
      if (j == ds) {
        out += text[i++];
        continue;
      }
      std::uint32_t cp = 0;
      auto [ptr, ec] = std::from_chars(text.data() + ds, text.data() + j, cp, base);
      if (ec != std::errc{} || !xml_char_allowed(cp) || (cp >= 0xD800 && cp <= 0xDFFF)) cp = 0xFFFD;
      append_utf8(out, cp);
      if (j < text.size() && text[j] == ';') ++j;
      i = j;
      continue;
    }
    std::size_t ns = j;
    while (j < text.size() && std::isalnum(static_cast<unsigned char>(text[j])) && j - ns < 10) ++j;
    std::string_view name = text.substr(ns, j - ns);
    const auto& table = named_entities();
    auto it = table.find(name);
    bool terminated = j < text.size() && text[j] == ';';
    if (it != table.end() && (terminated || legacy_entity(name))) {
      append_utf8(out, it->second);
      i = terminated ? j + 1 : j;
    } else {
      out += text[i++];
    }
  }
  return out;
}

std::optional<std::string> sniff_meta_charset(std::string_view bytes) {
  std::string_view head = bytes.substr(0, 4096);
  std::size_t pos = 0;
  while ((pos = find_ci(head, "<meta", pos)) != std::string_view::npos) {
    std::size_t end = head.find('>', pos);
    if (end == std::string_view::npos) break;
    std::string tag = lower(head.substr(pos, end - pos));
    std::size_t cs = tag.find("charset");
    if (cs != std::string::npos) {
      std::size_t i = cs + 7;
      while (i < tag.size() && (std::isspace(static_cast<unsigned char>(tag[i])) || tag[i] == '=' ||
                                tag[i] == '"' || tag[i] == '\''))
        ++i;
      std::size_t s = i;
      while (i < tag.size() && (std::isalnum(static_cast<unsigned char>(tag[i])) || tag[i] == '-' ||
                                tag[i] == '_' || tag[i] == ':' || tag[i] == '.'))
        ++i;
      if (i > s) return tag.substr(s, i - s);
    }
    pos = end;
  }
  return std::nullopt;
}

std::string decode_to_utf8(std::string_view bytes, const std::optional<std::string>& declared) {
  if (bytes.substr(0, 3) == "\xEF\xBB\xBF") return decode_to_utf8(bytes.substr(3), std::string("utf-8"));
  std::vector<std::string> candidates;
  if (declared && !declared->empty()) candidates.push_back(*declared);
  if (auto meta = sniff_meta_charset(bytes)) candidates.push_back(*meta);
  candidates.emplace_back("UTF-8");
  for (const auto& label : candidates)
    if (auto text = try_convert(bytes, label)) return *text;
  throw Error("encoding", "page bytes are not decodable as any of the candidate charsets");
}

CleanDocument clean_html(const RawPage& page) {
  if (page.body.empty()) throw Error("empty-input", "page body is empty: " + page.url);
  std::string text = decode_to_utf8(page.body, page.declared_encoding);

  TreeBuilder builder;
  std::string name;
  std::vector<xml::Attribute> attrs;
  bool self_closing = false;
  std::size_t i = 0;
  std::size_t text_start = 0;
  auto flush = [&](std::size_t upto) {
    if (upto > text_start) builder.text(std::string_view(text).substr(text_start, upto - text_start));
  };
  std::string_view src(text);

  while (i < src.size()) {
    if (src[i] != '<') {
      ++i;
      continue;
    }
    if (src.substr(i, 4) == "<!--") {
      flush(i);
      std::size_t end = src.find("-->", i + 4);
      i = end == std::string_view::npos ? src.size() : end + 3;
      text_start = i;
      continue;
    }
    if (i + 1 < src.size() && (src[i + 1] == '!' || src[i + 1] == '?')) {
      flush(i);
      std::size_t end = src.find('>', i);
      i = end == std::string_view::npos ? src.size() : end + 1;
      text_start = i;
      continue;
    }
    if (i + 1 < src.size() && src[i + 1] == '/') {
      std::size_t j = i + 2;
      if (j < src.size() && std::isalpha(static_cast<unsigned char>(src[j]))) {
        flush(i);
        std::size_t ns = j;
        while (j < src.size() && !std::isspace(static_cast<unsigned char>(src[j])) && src[j] != '>') ++j;
        std::string end_name = lower(src.substr(ns, j - ns));
        std::size_t close = src.find('>', j);
        i = close == std::string_view::npos ? src.size() : close + 1;
        text_start = i;
        builder.end(end_name);
        continue;
      }
      ++i;
      continue;
    }
    std::size_t after = parse_start_tag(src, i, name, attrs, self_closing);
    if (after == std::string_view::npos) {
      ++i;
      continue;
    }
    flush(i);
    i = after;
    text_start = i;
    if (!valid_xml_name(name)) continue;
    if (name == "script" || name == "style") {
      std::size_t end = self_closing ? i : find_ci(src, "</" + name, i);
      if (end == std::string_view::npos) end = src.size();
      std::size_t close = src.find('>', end);
      i = self_closing ? i : (close == std::string_view::npos ? src.size() : close + 1);
      text_start = i;
      continue;
    }
    builder.start(name, attrs, self_closing);
    if ((name == "title" || name == "textarea") && !self_closing) {
      std::size_t end = find_ci(src, "</" + name, i);
      if (end == std::string_view::npos) end = src.size();
      builder.literal_text(decode_entities(src.substr(i, end - i)));
      builder.end(name);
      std::size_t close = src.find('>', end);
      i = close == std::string_view::npos ? src.size() : close + 1;
      text_start = i;
    }
  }
  flush(src.size());
  return CleanDocument{builder.finish(), page.url};
}

std::string serialize_clean(const CleanDocument& doc) {
  return xml::write(doc.root, {.indent = 0, .declaration = true});
}

}  // namespace cwatch
