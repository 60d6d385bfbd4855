#include "cwatch/model.hpp"

#include <cstdint>
#include <cstdio>
#include <map>
#include <regex>

#include "cwatch/url.hpp"

namespace cwatch {

std::string_view to_string(ReplyEvidence evidence) {
  switch (evidence) {
    case ReplyEvidence::structural: return "structural";
    case ReplyEvidence::name_mention: return "name-mention";
    case ReplyEvidence::none: break;
  }
  return "none";
}

std::optional<ReplyEvidence> parse_reply_evidence(std::string_view text) {
  if (text == "structural") return ReplyEvidence::structural;
  if (text == "name-mention") return ReplyEvidence::name_mention;
  if (text == "none") return ReplyEvidence::none;
  return std::nullopt;
}

const Post* CanonicalThread::find_post(std::string_view post_id) const {
  for (const auto& p : posts)
    if (p.post_id == post_id) return &p;
  return nullptr;
}

std::optional<PostRef> PostRef::parse(std::string_view text) {
  auto slash = text.find('/');
  if (slash == std::string_view::npos || slash == 0 || slash + 1 == text.size()) return std::nullopt;
  return PostRef{std::string(text.substr(0, slash)), std::string(text.substr(slash + 1))};
}

std::optional<std::string> normalize_author_name(std::string_view raw) {
  std::string out;
  bool pending_space = false;
  for (std::size_t i = 0; i < raw.size(); ++i) {
    auto c = static_cast<unsigned char>(raw[i]);
    bool space = c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
    // U+00A0 NO-BREAK SPACE
    if (c == 0xC2 && i + 1 < raw.size() && static_cast<unsigned char>(raw[i + 1]) == 0xA0) {
      space = true;
      ++i;
    }
    if (space) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) out += ' ';
    pending_space = false;
    out += static_cast<char>(c);
  }
  if (out.empty()) return std::nullopt;
  return out;
}

std::string author_key(std::string_view raw) {
  auto name = normalize_author_name(raw);
  return name ? *name : std::string(kAnonymousAuthor);
}

std::vector<Violation> validate_thread(const CanonicalThread& t) {
  std::vector<Violation> out;
  auto add = [&](std::string code, std::string post_id, std::string detail) {
    out.push_back({std::move(code), std::move(post_id), std::move(detail)});
  };

  if (t.thread_id.empty()) add("empty-thread-id", "", "thread id is empty");
  if (!parse_url(t.source_url)) add("invalid-source-url", "", "source url is not absolute: '" + t.source_url + "'");
  if (t.site_id.empty()) add("empty-site-id", "", "site id is empty");
  if (t.title.empty()) add("empty-title", "", "title is empty");

  static const std::regex markup(R"(<[A-Za-z/!][^<>]*>)");
  std::map<std::string, std::size_t, std::less<>> seen;
  for (std::size_t i = 0; i < t.posts.size(); ++i) {
    const Post& p = t.posts[i];
    if (p.post_id.empty()) add("empty-post-id", "", "post #" + std::to_string(i + 1) + " has no id");
    if (!seen.emplace(p.post_id, i).second) add("duplicate-post-id", p.post_id, "post id repeated");
    if (p.author.empty() || normalize_author_name(p.author).value_or("") != p.author)
      if (p.author != kAnonymousAuthor) add("empty-author", p.post_id, "author key not normalized");
    if (i > 0 && p.timestamp < t.posts[i - 1].timestamp)
      add("unordered-posts", p.post_id, "timestamp earlier than previous post");
    if (p.reply_to) {
      if (*p.reply_to == p.post_id) {
        add("self-reply", p.post_id, "post replies to itself");
      } else {
        auto it = seen.find(*p.reply_to);
        if (it == seen.end() || it->second >= i)
          add("dangling-or-forward-reply", p.post_id, "reply_to '" + *p.reply_to + "' is not an earlier post");
      }
    }
    if ((p.reply_evidence == ReplyEvidence::none) != !p.reply_to.has_value())
      add("reply-evidence-mismatch", p.post_id, "reply evidence does not match reply_to");
    if (std::regex_search(p.content, markup)) add("markup-in-content", p.post_id, "content contains a markup token");
  }
  return out;
}

ThreadStatistics thread_statistics(const CanonicalThread& t) {
  ThreadStatistics s;
  s.post_count = t.posts.size();
  std::set<std::string_view> authors;
  for (const auto& p : t.posts) {
    authors.insert(p.author);
    if (!s.first || p.timestamp < *s.first) s.first = p.timestamp;
    if (!s.last || p.timestamp > *s.last) s.last = p.timestamp;
  }
  s.author_count = authors.size();
  return s;
}

std::string fnv1a_hex(std::string_view data) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string make_thread_id(std::string_view title, std::string_view first_author, Timestamp first_timestamp) {
  std::string key(title);
  key += '\x1f';
  key += first_author;
  key += '\x1f';
  key += format_iso8601(first_timestamp);
  return "t" + fnv1a_hex(key);
}

}  // namespace cwatch
