#pragma once

#include <compare>
#include <cstddef>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "cwatch/time.hpp"

namespace cwatch {

inline constexpr std::string_view kAnonymousAuthor = "<anonymous>";

enum class ReplyEvidence { none, structural, name_mention };

std::string_view to_string(ReplyEvidence evidence);
std::optional<ReplyEvidence> parse_reply_evidence(std::string_view text);

struct Post {
  std::string post_id;
  std::string author;
  Timestamp timestamp{};
  std::string content;
  std::optional<std::string> reply_to;
  ReplyEvidence reply_evidence = ReplyEvidence::none;

  bool operator==(const Post&) const = default;
};

// Site-independent representation of one discussion thread.
struct CanonicalThread {
  std::string thread_id;
  std::string source_url;
  std::string site_id;
  std::string title;
  Timestamp fetched_at{};
  std::vector<Post> posts;

  const Post* find_post(std::string_view post_id) const;

  bool operator==(const CanonicalThread&) const = default;
};

struct Author {
  std::string name;
  int post_count = 0;
  int topic_count = 0;
  int thread_count = 0;

  bool operator==(const Author&) const = default;
};

struct CorpusSelection {
  std::set<std::string> thread_ids;

  bool operator==(const CorpusSelection&) const = default;
};

// Globally unique reference to one post: "<thread_id>/<post_id>".
struct PostRef {
  std::string thread_id;
  std::string post_id;

  std::string str() const { return thread_id + "/" + post_id; }
  static std::optional<PostRef> parse(std::string_view text);

  auto operator<=>(const PostRef&) const = default;
};

// Trims and collapses whitespace runs (including no-break spaces) into one
// space. Returns nullopt when nothing is left, which means "anonymous".
std::optional<std::string> normalize_author_name(std::string_view raw);

// normalize_author_name with the anonymous key substituted.
std::string author_key(std::string_view raw);

struct Violation {
  std::string code;
  std::string post_id;  // empty for thread-level violations
  std::string detail;

  bool operator==(const Violation&) const = default;
};

// Returns every invariant violation of the thread; empty means valid.
// Codes: empty-thread-id, invalid-source-url, empty-site-id, empty-title,
// empty-post-id, duplicate-post-id, empty-author, unordered-posts,
// self-reply, dangling-or-forward-reply, reply-evidence-mismatch,
// markup-in-content.
std::vector<Violation> validate_thread(const CanonicalThread& thread);

struct ThreadStatistics {
  std::size_t post_count = 0;
  std::size_t author_count = 0;
  std::optional<Timestamp> first;
  std::optional<Timestamp> last;

  bool operator==(const ThreadStatistics&) const = default;
};

ThreadStatistics thread_statistics(const CanonicalThread& thread);

// Site-independent identity of a thread: derived from the title and the
// opening post, so the same discussion gets the same id on every page
// layout and keeps it while new replies arrive.
std::string make_thread_id(std::string_view title, std::string_view first_author,
                           Timestamp first_timestamp);

// 64-bit FNV-1a, printed as 16 lowercase hex digits.
std::string fnv1a_hex(std::string_view data);

}  // namespace cwatch
