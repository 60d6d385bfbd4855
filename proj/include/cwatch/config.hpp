#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>

#include "cwatch/fetch.hpp"

namespace cwatch {

struct SearchConfig {
  std::string provider = "fixture";  // fixture | live
  std::string endpoint;
  std::string api_key_env = "CW_SEARCH_API_KEY";
  std::filesystem::path fixture_file;
};

struct ServerConfig {
  std::string bind = "127.0.0.1";
  int port = 8080;
  std::filesystem::path ui_dir = "ui";
};

struct Config {
  std::filesystem::path store_root = "cw-data";
  std::filesystem::path definitions_dir = "definitions";
  std::filesystem::path fixtures_dir = "fixtures";
  FetchPolicy fetch;
  int bulk_workers = 4;
  SearchConfig search;
  ServerConfig server;
  int job_workers = 2;
};

// Dotted keys accepted in the config file and, upper-cased with dots turned
// into underscores and a CW_ prefix, as environment overrides
// (fetch.min_delay_ms -> CW_FETCH_MIN_DELAY_MS).
const std::map<std::string, std::string>& config_keys();  // key -> description

// Reads the JSON file (nested objects or dotted keys), then applies `env`.
// Relative paths from the file resolve against the file's directory.
// Throws cwatch::Error("config").
Config load_config(const std::optional<std::filesystem::path>& file,
                   const std::map<std::string, std::string>& env);

// CW_* variables of the running process.
std::map<std::string, std::string> process_environment();

}  // namespace cwatch
