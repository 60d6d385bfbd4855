#pragma once

#include <chrono>
#include <filesystem>
#include <optional>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <vector>

namespace cwatch {

struct ThreadRules {
  std::string title_selector;
  std::string post_list_selector;
  std::optional<std::string> next_page_selector;

  bool operator==(const ThreadRules&) const = default;
};

// Selectors other than the thread rules are evaluated relative to one post node.
struct PostRules {
  // Native post id used to resolve reply links; defaults to the post node's
  // id attribute.
  std::optional<std::string> id_selector;
  std::string author_selector;
  std::string timestamp_selector;
  std::vector<std::string> timestamp_formats;  // strptime patterns, tried in order
  std::chrono::seconds utc_offset{0};          // site-local clock
  std::string content_selector;
  std::optional<std::string> reply_link_selector;

  bool operator==(const PostRules&) const = default;
};

struct SiteDefinition {
  std::string site_id;
  std::vector<std::string> host_patterns;  // lowercase globs
  ThreadRules thread_rules;
  PostRules post_rules;
  int version = 1;

  bool operator==(const SiteDefinition&) const = default;
};

struct ExtractionDiagnostic {
  enum class Severity { error, warning };

  Severity severity = Severity::error;
  std::string code;
  std::string selector;
  std::string context;

  bool is_error() const { return severity == Severity::error; }
  bool operator==(const ExtractionDiagnostic&) const = default;
};

std::string_view to_string(ExtractionDiagnostic::Severity severity);

// Definition files are INI documents:
//
//   [site]    id, version, hosts (comma-separated globs)
//   [thread]  title, posts, next_page
//   [post]    id, author, timestamp, timestamp_formats (" | "-separated),
//             timezone, content, reply_link
//
// Throws cwatch::Error("definition-format").
SiteDefinition parse_site_definition(std::string_view text);
std::string serialize_site_definition(const SiteDefinition& def);

// Selector syntax, host patterns, id slug and duplicate ids against `loaded`.
std::vector<ExtractionDiagnostic> lint_definition(const SiteDefinition& def,
                                                  const std::vector<SiteDefinition>& loaded);
// Like lint_definition, but format errors are reported as diagnostics.
std::vector<ExtractionDiagnostic> lint_definition_text(std::string_view text,
                                                       const std::vector<SiteDefinition>& loaded);

bool host_matches(std::string_view pattern, std::string_view host);
// True when some host could match both patterns.
bool patterns_overlap(std::string_view a, std::string_view b);

// Throws cwatch::Error("ambiguous-definition") when two definitions can claim
// the same host.
void check_ambiguity(const std::vector<SiteDefinition>& defs);

// The definition whose host patterns match the URL's host.
std::optional<SiteDefinition> match_site(std::string_view url, const std::vector<SiteDefinition>& defs);

// Directory of "<site_id>.ini" files. The directory is rescanned whenever
// its listing changes, so definitions can be added or edited while running.
class DefinitionRegistry {
 public:
  explicit DefinitionRegistry(std::filesystem::path directory);

  // Rescans unconditionally; throws on format errors or ambiguity and keeps
  // the previously loaded set in that case.
  void reload();
  // Rescans if any file was added, removed or modified. Errors are recorded
  // in last_error() and the previous set stays active.
  bool refresh();

  std::optional<SiteDefinition> match(std::string_view url);
  std::vector<SiteDefinition> list();
  std::optional<std::string> last_error() const;

  // Lints, writes <id>.ini atomically and reloads. With replace=true an
  // existing id may be updated to a higher version. Throws
  // cwatch::Error("definition-invalid") listing the diagnostics.
  SiteDefinition add(std::string_view text, bool replace = false);

  const std::filesystem::path& directory() const noexcept { return directory_; }

 private:
  std::string snapshot() const;
  std::vector<SiteDefinition> scan() const;

  std::filesystem::path directory_;
  mutable std::shared_mutex mutex_;
  std::vector<SiteDefinition> defs_;
  std::string snapshot_;
  std::optional<std::string> last_error_;
};

}  // namespace cwatch
