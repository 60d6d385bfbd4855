#pragma once

#include <optional>
#include <string>
#include <string_view>

namespace cwatch {

// Absolute URL split into RFC 3986 components. Scheme and host are lowercased.
struct Url {
  std::string scheme;
  std::string host;
  std::optional<int> port;
  std::string path;  // always starts with '/' for hierarchical URLs
  std::optional<std::string> query;
  std::optional<std::string> fragment;

  std::string str() const;
  // scheme://host[:port]
  std::string origin() const;
  // path[?query]
  std::string target() const;
};

std::optional<Url> parse_url(std::string_view text);

// Reference resolution against an absolute base (RFC 3986 section 5.2).
std::optional<std::string> resolve_url(const Url& base, std::string_view reference);

// Returns the text with any '#fragment' removed.
std::string strip_fragment(std::string_view url);

// Percent-encodes everything outside the RFC 3986 unreserved set.
std::string url_encode(std::string_view text);

}  // namespace cwatch
