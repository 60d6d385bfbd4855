#pragma once

#include <optional>
#include <string>
#include <vector>

#include "cwatch/html.hpp"
#include "cwatch/model.hpp"
#include "cwatch/site_definition.hpp"

namespace cwatch {

// One post as found on a page, before ordering and id assignment.
struct PagePost {
  std::string native_id;
  std::string author;
  Timestamp timestamp{};
  std::string content;
  std::optional<std::string> reply_link;
};

struct PageExtraction {
  std::string title;
  std::vector<PagePost> posts;
  std::optional<std::string> next_page;  // absolute URL
  std::vector<ExtractionDiagnostic> diagnostics;

  bool has_errors() const;
};

struct ThreadExtraction {
  std::optional<CanonicalThread> thread;
  std::vector<ExtractionDiagnostic> diagnostics;

  bool has_errors() const;
};

// Applies a definition to one clean page without assembling a thread.
PageExtraction extract_page(const CleanDocument& doc, const SiteDefinition& def);

// Merges page extractions (in page order) into a thread: posts are stably
// sorted by timestamp, numbered p1..pn, and structural reply links resolved
// against native ids. Links that are unresolvable or point forward are
// dropped with a warning.
ThreadExtraction assemble_thread(std::vector<PageExtraction> pages, const SiteDefinition& def,
                                 const std::string& source_url, Timestamp fetched_at);

// extract_page + assemble_thread for a single page.
ThreadExtraction apply_definition(const CleanDocument& doc, const SiteDefinition& def, Timestamp fetched_at);

// Links posts without a reply_to whose content opens with "@Name" or
// "Name:" to the most recent earlier post by that author.
CanonicalThread resolve_name_mentions(CanonicalThread thread);

// Plain text of an element: <br> and block elements become line breaks,
// whitespace runs collapse, blank lines are dropped.
std::string element_plain_text(const xml::Node& node);

// Whitespace-collapsed single line.
std::string collapse_whitespace(std::string_view text);

}  // namespace cwatch
