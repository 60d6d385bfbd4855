#include "cwatch/config.hpp"

#include <json.hpp>

#include <algorithm>
#include <cctype>
#include <charconv>

#include "cwatch/error.hpp"
#include "cwatch/fs_util.hpp"

extern char** environ;

namespace cwatch {

namespace {

using nlohmann::json;

void flatten(const json& j, const std::string& prefix, std::map<std::string, std::string>& out) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    std::string key = prefix.empty() ? it.key() : prefix + "." + it.key();
    if (it->is_object()) flatten(*it, key, out);
    else if (it->is_string()) out[key] = it->get<std::string>();
    else if (it->is_number_integer() || it->is_boolean()) out[key] = it->dump();
    else throw Error("config", "unsupported value for " + key);
  }
}

std::string env_name(const std::string& key) {
  std::string out = "CW_";
  for (char c : key) out += c == '.' ? '_' : static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return out;
}

int to_int(const std::string& key, const std::string& value, int lo) {
  int v = 0;
  auto [p, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
  if (value.empty() || ec != std::errc() || p != value.data() + value.size() || v < lo)
    throw Error("config", key + " must be an integer >= " + std::to_string(lo) + ", got '" + value + "'");
  return v;
}

bool is_path_key(const std::string& key) {
  return key == "store.root" || key == "definitions.dir" || key == "fetch.fixtures_dir" ||
         key == "search.fixture_file" || key == "server.ui_dir";
}

}  // namespace

const std::map<std::string, std::string>& config_keys() {
  static const std::map<std::string, std::string> keys = {
      {"store.root", "store directory"},
      {"definitions.dir", "site definition directory"},
      {"fetch.fixtures_dir", "root for fixture:// URLs"},
      {"fetch.min_delay_ms", "minimum delay between requests to one host"},
      {"fetch.timeout_ms", "per-request timeout"},
      {"fetch.max_retries", "retries after the first attempt"},
      {"fetch.backoff_ms", "first retry delay, doubled per retry"},
      {"fetch.max_pages", "page cap per thread"},
      {"fetch.user_agent", "User-Agent header"},
      {"fetch.workers", "concurrent fetches in a bulk run"},
      {"search.provider", "fixture or live"},
      {"search.endpoint", "live search API URL"},
      {"search.api_key_env", "environment variable holding the search API key"},
      {"search.fixture_file", "canned search results, one URL per line"},
      {"server.bind", "listen address"},
      {"server.port", "listen port"},
      {"server.ui_dir", "static UI bundle served under /ui"},
      {"jobs.workers", "background job workers"},
  };
  return keys;
}

Config load_config(const std::optional<std::filesystem::path>& file,
                   const std::map<std::string, std::string>& env) {
  std::map<std::string, std::string> values;
  std::filesystem::path base;
  if (file) {
    std::string text;
    try {
      text = read_file(*file);
    } catch (const std::exception& e) {
      throw Error("config", "cannot read config file " + file->string() + ": " + e.what());
    }
    json j;
    try {
      j = json::parse(text);
    } catch (const json::exception& e) {
      throw Error("config", "config file " + file->string() + ": " + e.what());
    }
    if (!j.is_object()) throw Error("config", "config file must hold a JSON object");
    flatten(j, "", values);
    base = file->parent_path();
    for (auto& [k, v] : values)
      if (is_path_key(k) && !v.empty() && std::filesystem::path(v).is_relative()) v = (base / v).lexically_normal().string();
  }
  for (const auto& [key, _] : config_keys()) {
    auto it = env.find(env_name(key));
    if (it != env.end()) values[key] = it->second;
  }

  Config c;
  for (const auto& [k, v] : values) {
    if (!config_keys().count(k)) throw Error("config", "unknown config key " + k);
    if (k == "store.root") c.store_root = v;
    else if (k == "definitions.dir") c.definitions_dir = v;
    else if (k == "fetch.fixtures_dir") c.fixtures_dir = v;
    else if (k == "fetch.min_delay_ms") c.fetch.per_host_min_delay = std::chrono::milliseconds(to_int(k, v, 0));
    else if (k == "fetch.timeout_ms") c.fetch.timeout = std::chrono::milliseconds(to_int(k, v, 1));
    else if (k == "fetch.max_retries") c.fetch.max_retries = to_int(k, v, 0);
    else if (k == "fetch.backoff_ms") c.fetch.backoff_base = std::chrono::milliseconds(to_int(k, v, 0));
    else if (k == "fetch.max_pages") c.fetch.max_pages_per_thread = to_int(k, v, 1);
    else if (k == "fetch.user_agent") c.fetch.user_agent = v;
    else if (k == "fetch.workers") c.bulk_workers = to_int(k, v, 1);
    else if (k == "search.provider") {
      if (v != "fixture" && v != "live") throw Error("config", "search.provider must be fixture or live");
      c.search.provider = v;
    } else if (k == "search.endpoint") c.search.endpoint = v;
    else if (k == "search.api_key_env") c.search.api_key_env = v;
    else if (k == "search.fixture_file") c.search.fixture_file = v;
    else if (k == "server.bind") c.server.bind = v;
    else if (k == "server.port") c.server.port = to_int(k, v, 0);
    else if (k == "server.ui_dir") c.server.ui_dir = v;
    else if (k == "jobs.workers") c.job_workers = to_int(k, v, 1);
  }
  try {
    validate_policy(c.fetch);
  } catch (const Error& e) {
    throw Error("config", e.what());
  }
  return c;
}

std::map<std::string, std::string> process_environment() {
  std::map<std::string, std::string> out;
  for (char** e = environ; e && *e; ++e) {
    std::string_view kv(*e);
    auto eq = kv.find('=');
    if (eq == std::string_view::npos || kv.substr(0, 3) != "CW_") continue;
    out.emplace(std::string(kv.substr(0, eq)), std::string(kv.substr(eq + 1)));
  }
  return out;
}

}  // namespace cwatch
