#pragma once

#include <optional>
#include <string>
#include <string_view>

#include "cwatch/time.hpp"
#include "cwatch/xml.hpp"

namespace cwatch {

struct RawPage {
  std::string url;
  std::string body;
  std::optional<std::string> declared_encoding;
  Timestamp fetched_at{};
};

// Well-formed element tree produced from tag soup. The root is always <html>.
struct CleanDocument {
  xml::Node root;
  std::string source_url;
};

// Repairs tag soup into a well-formed tree. Element and attribute names are
// lowercased, entities decoded, comments/doctype/script/style dropped.
// Repair policy: unclosed elements are closed at their parent's end tag,
// stray end tags are dropped, and text is never reordered. A small set of
// implied-end rules (p, li, dt/dd, tr, td/th, option, a) mirrors how
// browsers treat those elements.
//
// Errors: "empty-input" for an empty body, "encoding" when the bytes cannot
// be decoded as the declared charset, the in-document charset, or UTF-8.
CleanDocument clean_html(const RawPage& page);

// Charset resolution in priority order: declared, <meta> declaration, UTF-8.
std::string decode_to_utf8(std::string_view bytes, const std::optional<std::string>& declared);

// Charset named by a <meta charset> or http-equiv content-type declaration.
std::optional<std::string> sniff_meta_charset(std::string_view bytes);

// Decodes character references in HTML text.
std::string decode_entities(std::string_view text);

// Compact serialization used by the golden *.clean files.
std::string serialize_clean(const CleanDocument& doc);

}  // namespace cwatch
