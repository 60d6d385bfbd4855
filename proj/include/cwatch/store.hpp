#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <shared_mutex>
#include <string>
#include <vector>

#include "cwatch/fs_util.hpp"
#include "cwatch/model.hpp"
#include "cwatch/topic_result.hpp"

namespace cwatch {

enum class ExtractionStatus { pending, running, done, failed };

std::string_view to_string(ExtractionStatus s);
std::optional<ExtractionStatus> parse_extraction_status(std::string_view text);
bool is_terminal(ExtractionStatus s);
// pending -> running -> {done, failed}
bool transition_allowed(ExtractionStatus from, ExtractionStatus to);

struct ExtractionRecord {
  std::string extraction_id;
  CorpusSelection corpus;
  Algorithm algorithm = Algorithm::tng;
  std::map<std::string, std::string> params;
  ExtractionStatus status = ExtractionStatus::pending;
  std::optional<TopicResult> result;   // present iff done
  std::optional<std::string> error;    // failure reason
  TimestampMs created_at{};
  std::optional<TimestampMs> finished_at;  // present iff done or failed

  bool operator==(const ExtractionRecord&) const = default;
};

struct ThreadSummary {
  std::string thread_id;
  std::string title;
  std::string site_id;
  std::string source_url;
  std::size_t post_count = 0;
  std::optional<Timestamp> first_post;
  std::optional<Timestamp> last_post;
  Timestamp fetched_at{};
  int revision = 0;

  bool operator==(const ThreadSummary&) const = default;
};

struct ThreadFilter {
  std::optional<std::string> site_id;
  std::optional<std::string> url_substring;
  // Inclusive; a thread matches when its post span overlaps the range.
  std::optional<Timestamp> from;
  std::optional<Timestamp> to;
};

struct PutThreadResult {
  std::string thread_id;
  int revision = 0;
  bool created = false;
  bool changed = false;
};

// Directory-backed store:
//
//   <root>/STORE_VERSION            {"schema_version": 1}
//   <root>/threads/<id>.json        revision + canonical fields
//   <root>/extractions/<id>.json    record, result embedded
//
// Every file is replaced by write-to-temp, fsync, rename. Leftover temp
// files from an interrupted write are removed when the store is opened.
class Store {
 public:
  static constexpr int kSchemaVersion = 1;

  // Creates the layout if the directory is empty or missing. Throws
  // cwatch::Error("schema-version") when an existing store has another
  // version, Error("io") on filesystem failures.
  explicit Store(std::filesystem::path root);

  const std::filesystem::path& root() const noexcept { return root_; }

  // Upsert keyed by source_url. The stored id is kept for a known url; the
  // thread's own id is used otherwise, suffixed when another url already
  // owns it. Re-putting identical content (fetched_at aside) leaves the
  // revision alone; different content replaces it and bumps the revision.
  // Throws Error("invalid-thread") listing validation codes.
  PutThreadResult put_thread(const CanonicalThread& thread);

  // Throws Error("not-found").
  CanonicalThread get_thread(const std::string& thread_id) const;
  std::optional<std::string> find_thread_by_url(const std::string& source_url) const;
  bool has_thread(const std::string& thread_id) const;
  int thread_revision(const std::string& thread_id) const;

  // Ordered by fetched_at descending, then id.
  std::vector<ThreadSummary> list_threads(const ThreadFilter& filter = {}) const;

  // Assigns an id when extraction_id is empty. Throws Error("not-found") for
  // a corpus thread that does not exist, Error("invalid-record") when the
  // record violates its status invariants, Error("conflict") for an id
  // already in use.
  std::string put_extraction(ExtractionRecord record);
  ExtractionRecord get_extraction(const std::string& extraction_id) const;
  std::vector<ExtractionRecord> list_extractions() const;

  // Throws Error("illegal-transition") unless transition_allowed. Entering
  // done requires a result; entering done or failed stamps finished_at.
  ExtractionRecord update_extraction_status(const std::string& extraction_id, ExtractionStatus to,
                                            std::optional<TopicResult> result = std::nullopt,
                                            std::optional<std::string> error = std::nullopt,
                                            std::optional<TimestampMs> now = std::nullopt);

  // Test hook run between writing a temp file and renaming it.
  void set_write_hook(WriteHook hook);

 private:
  struct Entry {
    ThreadSummary summary;
  };

  std::filesystem::path thread_path(const std::string& id) const;
  std::filesystem::path extraction_path(const std::string& id) const;
  void write(const std::filesystem::path& path, const std::string& content);
  void check_record(const ExtractionRecord& record) const;

  std::filesystem::path root_;
  mutable std::shared_mutex mutex_;
  std::map<std::string, Entry> threads_;
  std::map<std::string, std::string> by_url_;
  std::uint64_t next_extraction_ = 1;
  WriteHook hook_;
};

// JSON forms used by the store and the HTTP layer.
std::string thread_to_json(const CanonicalThread& t, int revision);
CanonicalThread thread_from_json(std::string_view text, int* revision = nullptr);
std::string extraction_to_json(const ExtractionRecord& r);
ExtractionRecord extraction_from_json(std::string_view text);

}  // namespace cwatch
