#pragma once

#include <atomic>
#include <filesystem>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "cwatch/fetch.hpp"
#include "cwatch/site_definition.hpp"
#include "cwatch/store.hpp"

namespace cwatch {

// (keywords, limit) -> result URLs in provider order, at most `limit`.
// Failures throw cwatch::Error("search-provider").
class SearchProvider {
 public:
  virtual ~SearchProvider() = default;
  virtual std::vector<std::string> search(const std::string& keywords, int limit) = 0;
};

// Canned results: one URL per line, blank lines and '#' comments ignored.
// The keywords are not interpreted.
class FixtureSearchProvider : public SearchProvider {
 public:
  explicit FixtureSearchProvider(std::filesystem::path results_file);
  std::vector<std::string> search(const std::string& keywords, int limit) override;

 private:
  std::filesystem::path results_file_;
};

// Web-search HTTP API: GET <endpoint>?q=<keywords>&count=<limit> with the key
// in an Ocp-Apim-Subscription-Key header. Accepts Bing-style
// {"webPages":{"value":[{"url":..}]}}, {"results":[{"url":..}]} or a bare
// array of URL strings.
class LiveSearchProvider : public SearchProvider {
 public:
  LiveSearchProvider(std::string endpoint, std::string api_key, std::chrono::milliseconds timeout);
  std::vector<std::string> search(const std::string& keywords, int limit) override;

 private:
  std::string endpoint_;
  std::string api_key_;
  std::chrono::milliseconds timeout_;
};

// Extracts result URLs from a search API response body.
std::vector<std::string> parse_search_response(std::string_view body);

struct BulkFetchReport {
  std::string keywords;
  int urls_found = 0;
  int urls_supported = 0;
  std::vector<std::string> threads_stored;
  std::vector<std::pair<std::string, std::string>> failures;  // (url, reason)

  bool operator==(const BulkFetchReport&) const = default;
};

struct BulkOptions {
  int workers = 4;
  // Called after each supported URL is settled with (done, total).
  std::function<void(int, int)> progress;
};

// Searches, keeps URLs some loaded definition matches, and fetches and
// stores each as a thread. A failing URL is recorded and never stops the
// others. URLs already in the store are not fetched again and count as
// stored. The report lists outcomes in provider order. Throws
// Error("invalid-limit") for limit < 1; provider errors propagate.
BulkFetchReport bulk_fetch(const std::string& keywords, int limit, SearchProvider& provider, Fetcher& fetcher,
                           DefinitionRegistry& defs, Store& store, const BulkOptions& options = {});

}  // namespace cwatch
