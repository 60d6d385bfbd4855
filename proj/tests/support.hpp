#pragma once

#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <unistd.h>

#include "cwatch/fs_util.hpp"
#include "cwatch/model.hpp"
#include "cwatch/time.hpp"

namespace testing {

inline std::filesystem::path fixtures() { return CW_FIXTURES; }

inline std::string fixture_text(const std::string& relative) { return cwatch::read_file(fixtures() / relative); }

// Compares against a frozen golden file. With CW_WRITE_GOLDEN=1 a missing
// golden is written instead, for review before it is committed.
inline bool matches_golden(const std::string& relative, const std::string& actual) {
  auto path = fixtures() / "golden" / relative;
  if (!std::filesystem::exists(path)) {
    if (std::getenv("CW_WRITE_GOLDEN")) {
      std::filesystem::create_directories(path.parent_path());
      cwatch::write_file_atomic(path, actual);
      return true;
    }
    return false;
  }
  return cwatch::read_file(path) == actual;
}

class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("cwatch-test-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline cwatch::Timestamp at(const char* iso) { return *cwatch::parse_iso8601(iso); }

inline cwatch::Post post(std::string id, std::string author, const char* iso, std::string content,
                         std::optional<std::string> reply_to = std::nullopt) {
  cwatch::Post p;
  p.post_id = std::move(id);
  p.author = std::move(author);
  p.timestamp = at(iso);
  p.content = std::move(content);
  if (reply_to) {
    p.reply_to = std::move(reply_to);
    p.reply_evidence = cwatch::ReplyEvidence::structural;
  }
  return p;
}

inline cwatch::CanonicalThread thread(std::string id, std::string site, std::vector<cwatch::Post> posts,
                                      std::string title = "A thread") {
  cwatch::CanonicalThread t;
  t.thread_id = std::move(id);
  t.site_id = std::move(site);
  t.source_url = "https://" + t.site_id + ".example/" + t.thread_id;
  t.title = std::move(title);
  t.fetched_at = at("2013-06-01T00:00:00Z");
  t.posts = std::move(posts);
  return t;
}

// Random valid thread for property tests.
inline cwatch::CanonicalThread random_thread(std::mt19937_64& rng, int index) {
  static const char* names[] = {"Robert", "David VIETI", "Alice Martin", "Renée", "Kevin", "Julie"};
  static const char* words[] = {"battery", "charge", "café", "range", "x < y & z", "winter", "\"quoted\"", "été"};
  cwatch::CanonicalThread t;
  t.thread_id = "t" + std::to_string(index) + "x" + std::to_string(rng() % 100000);
  t.site_id = rng() % 2 ? "sitea" : "siteb";
  t.source_url = "https://" + t.site_id + ".example/thread/" + t.thread_id;
  t.title = std::string("Title ") + words[rng() % 8];
  t.fetched_at = cwatch::Timestamp{std::chrono::seconds{1370000000 + static_cast<long long>(rng() % 1000000)}};
  int n = 1 + static_cast<int>(rng() % 8);
  long long clock = 1363000000 + static_cast<long long>(rng() % 1000000);
  for (int i = 0; i < n; ++i) {
    cwatch::Post p;
    p.post_id = "p" + std::to_string(i + 1);
    p.author = names[rng() % 6];
    clock += static_cast<long long>(rng() % 5000);
    p.timestamp = cwatch::Timestamp{std::chrono::seconds{clock}};
    int len = 1 + static_cast<int>(rng() % 12);
    for (int w = 0; w < len; ++w) p.content += (w ? " " : "") + std::string(words[rng() % 8]);
    if (i > 0 && rng() % 2) {
      p.reply_to = "p" + std::to_string(1 + rng() % i);
      p.reply_evidence = rng() % 2 ? cwatch::ReplyEvidence::structural : cwatch::ReplyEvidence::name_mention;
    }
    t.posts.push_back(std::move(p));
  }
  return t;
}

}  // namespace testing
