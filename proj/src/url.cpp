#include "cwatch/url.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <vector>

namespace cwatch {

namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

bool valid_scheme(std::string_view s) {
  if (s.empty() || !std::isalpha(static_cast<unsigned char>(s[0]))) return false;
  return std::all_of(s.begin(), s.end(), [](unsigned char c) {
    return std::isalnum(c) || c == '+' || c == '-' || c == '.';
  });
}

std::string remove_dot_segments(std::string_view path) {
  std::vector<std::string_view> out;
  bool absolute = !path.empty() && path.front() == '/';
  bool trailing = false;
  std::size_t pos = absolute ? 1 : 0;
  while (pos <= path.size()) {
    std::size_t next = path.find('/', pos);
    if (next == std::string_view::npos) next = path.size();
    std::string_view seg = path.substr(pos, next - pos);
    trailing = false;
    if (seg == "..") {
      if (!out.empty()) out.pop_back();
      trailing = true;
    } else if (seg == ".") {
      trailing = true;
    } else {
      out.push_back(seg);
    }
    pos = next + 1;
  }
  std::string result = absolute ? "/" : "";
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (i) result += '/';
    result += out[i];
  }
  if (trailing && !result.empty() && result.back() != '/') result += '/';
  return result;
}

}  // namespace

std::string Url::origin() const {
  std::string out = scheme + "://" + host;
  if (port) out += ":" + std::to_string(*port);
  return out;
}

std::string Url::target() const {
  std::string out = path.empty() ? "/" : path;
  if (query) out += "?" + *query;
  return out;
}

std::string Url::str() const {
  std::string out = origin() + path;
  if (query) out += "?" + *query;
  if (fragment) out += "#" + *fragment;
  return out;
}

std::optional<Url> parse_url(std::string_view text) {
  auto colon = text.find(':');
  if (colon == std::string_view::npos || !valid_scheme(text.substr(0, colon))) return std::nullopt;
  if (text.substr(colon, 3) != "://") return std::nullopt;
  Url url;
  url.scheme = lower(text.substr(0, colon));
  std::string_view rest = text.substr(colon + 3);

  auto hash = rest.find('#');
  if (hash != std::string_view::npos) {
    url.fragment = std::string(rest.substr(hash + 1));
    rest = rest.substr(0, hash);
  }
  auto qmark = rest.find('?');
  if (qmark != std::string_view::npos) {
    url.query = std::string(rest.substr(qmark + 1));
    rest = rest.substr(0, qmark);
  }
  auto slash = rest.find('/');
  std::string_view authority = rest.substr(0, slash);
  url.path = slash == std::string_view::npos ? "/" : std::string(rest.substr(slash));

  if (auto at = authority.rfind('@'); at != std::string_view::npos) authority = authority.substr(at + 1);
  auto port_sep = authority.rfind(':');
  if (port_sep != std::string_view::npos && authority.find(']') == std::string_view::npos) {
    std::string_view port_text = authority.substr(port_sep + 1);
    int port = 0;
    auto [ptr, ec] = std::from_chars(port_text.data(), port_text.data() + port_text.size(), port);
    if (ec != std::errc{} || ptr != port_text.data() + port_text.size() || port <= 0 || port > 65535)
      return std::nullopt;
    url.port = port;
    authority = authority.substr(0, port_sep);
  }
  if (authority.empty()) return std::nullopt;
  for (unsigned char c : authority)
    if (std::isspace(c) || c == '<' || c == '>' || c == '"') return std::nullopt;
  url.host = lower(authority);
  return url;
}

std::optional<std::string> resolve_url(const Url& base, std::string_view ref) {
  while (!ref.empty() && std::isspace(static_cast<unsigned char>(ref.front()))) ref.remove_prefix(1);
  while (!ref.empty() && std::isspace(static_cast<unsigned char>(ref.back()))) ref.remove_suffix(1);

  if (auto colon = ref.find(':'); colon != std::string_view::npos &&
                                  valid_scheme(ref.substr(0, colon)) &&
                                  ref.find_first_of("/?#") > colon) {
    auto parsed = parse_url(ref);
    if (!parsed) return std::nullopt;
    parsed->path = remove_dot_segments(parsed->path);
    return parsed->str();
  }

  Url out = base;
  std::optional<std::string> fragment;
  if (auto hash = ref.find('#'); hash != std::string_view::npos) {
    fragment = std::string(ref.substr(hash + 1));
    ref = ref.substr(0, hash);
  }
  out.fragment = fragment;

  if (ref.substr(0, 2) == "//") {
    auto parsed = parse_url(base.scheme + ":" + std::string(ref));
    if (!parsed) return std::nullopt;
    parsed->path = remove_dot_segments(parsed->path);
    parsed->fragment = fragment;
    return parsed->str();
  }

  std::optional<std::string> query;
  if (auto q = ref.find('?'); q != std::string_view::npos) {
    query = std::string(ref.substr(q + 1));
    ref = ref.substr(0, q);
  }

  if (ref.empty()) {
    if (query) out.query = query;
  } else if (ref.front() == '/') {
    out.path = remove_dot_segments(ref);
    out.query = query;
  } else {
    std::string merged = base.path.substr(0, base.path.rfind('/') + 1);
    merged += ref;
    out.path = remove_dot_segments(merged);
    out.query = query;
  }
  return out.str();
}

std::string strip_fragment(std::string_view url) {
  return std::string(url.substr(0, url.find('#')));
}

std::string url_encode(std::string_view text) {
  static constexpr char hex[] = "0123456789ABCDEF";
  std::string out;
  for (unsigned char c : text) {
    if (std::isalnum(c) || c == '-' || c == '_' || c == '.' || c == '~') {
      out += static_cast<char>(c);
    } else {
      out += '%';
      out += hex[c >> 4];
      out += hex[c & 0xF];
    }
  }
  return out;
}

}  // namespace cwatch
