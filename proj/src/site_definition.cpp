#include "cwatch/site_definition.hpp"

#include <fnmatch.h>

#include <algorithm>
#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <cctype>
#include <mutex>
#include <sstream>

#include "cwatch/error.hpp"
#include "cwatch/fs_util.hpp"
#include "cwatch/selector.hpp"
#include "cwatch/time.hpp"
#include "cwatch/url.hpp"

namespace cwatch {

namespace fs = std::filesystem;
namespace pt = boost::property_tree;

namespace {

std::string trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return std::string(s);
}

std::vector<std::string> split(std::string_view s, std::string_view sep) {
  std::vector<std::string> out;
  std::size_t pos = 0;
  while (true) {
    std::size_t next = s.find(sep, pos);
    std::string part = trim(s.substr(pos, next == std::string_view::npos ? std::string_view::npos : next - pos));
    if (!part.empty()) out.push_back(std::move(part));
    if (next == std::string_view::npos) break;
    pos = next + sep.size();
  }
  return out;
}

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

[[noreturn]] void format_error(const std::string& what) { throw Error("definition-format", what); }

std::optional<std::string> get(const pt::ptree& section, const char* key) {
  auto v = section.get_optional<std::string>(pt::ptree::path_type(key, '\0'));
  if (!v) return std::nullopt;
  std::string t = trim(*v);
  if (t.empty()) return std::nullopt;
  return t;
}

std::string require(const pt::ptree& section, const char* section_name, const char* key) {
  auto v = get(section, key);
  if (!v) format_error(std::string("missing key '") + key + "' in [" + section_name + "]");
  return *v;
}

std::string format_offset(std::chrono::seconds offset) {
  long total = static_cast<long>(offset.count());
  char sign = total < 0 ? '-' : '+';
  total = std::labs(total);
  char buf[32];
  std::snprintf(buf, sizeof buf, "%c%02ld:%02ld", sign, total / 3600, (total % 3600) / 60);
  return buf;
}

bool valid_slug(std::string_view id) {
  if (id.empty() || !std::isalnum(static_cast<unsigned char>(id[0]))) return false;
  return std::all_of(id.begin(), id.end(), [](unsigned char c) { return std::isalnum(c) || c == '_' || c == '-'; });
}

ExtractionDiagnostic error(std::string code, std::string selector, std::string context) {
  return {ExtractionDiagnostic::Severity::error, std::move(code), std::move(selector), std::move(context)};
}

}  // namespace

std::string_view to_string(ExtractionDiagnostic::Severity severity) {
  return severity == ExtractionDiagnostic::Severity::error ? "error" : "warning";
}

SiteDefinition parse_site_definition(std::string_view text) {
  pt::ptree tree;
  try {
    std::istringstream in{std::string(text)};
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    format_error(e.what());
  }
  auto site = tree.get_child_optional("site");
  auto thread = tree.get_child_optional("thread");
  auto post = tree.get_child_optional("post");
  if (!site || !thread || !post) format_error("definition needs [site], [thread] and [post] sections");

  SiteDefinition def;
  def.site_id = require(*site, "site", "id");
  std::string version = get(*site, "version").value_or("1");
  try {
    std::size_t used = 0;
    def.version = std::stoi(version, &used);
    if (used != version.size()) throw std::invalid_argument(version);
  } catch (const std::exception&) {
    format_error("version must be an integer, got '" + version + "'");
  }
  for (auto& p : split(get(*site, "hosts").value_or(""), ",")) def.host_patterns.push_back(lower(p));

  def.thread_rules.title_selector = require(*thread, "thread", "title");
  def.thread_rules.post_list_selector = require(*thread, "thread", "posts");
  def.thread_rules.next_page_selector = get(*thread, "next_page");

  auto& pr = def.post_rules;
  pr.id_selector = get(*post, "id");
  pr.author_selector = require(*post, "post", "author");
  pr.timestamp_selector = require(*post, "post", "timestamp");
  pr.timestamp_formats = split(require(*post, "post", "timestamp_formats"), " | ");
  if (auto tz = get(*post, "timezone")) {
    auto offset = parse_utc_offset(*tz);
    if (!offset) format_error("bad timezone offset '" + *tz + "'");
    pr.utc_offset = *offset;
  }
  pr.content_selector = require(*post, "post", "content");
  pr.reply_link_selector = get(*post, "reply_link");
  return def;
}

std::string serialize_site_definition(const SiteDefinition& def) {
  std::ostringstream out;
  out << "[site]\n";
  out << "id = " << def.site_id << "\n";
  out << "version = " << def.version << "\n";
  out << "hosts = ";
  for (std::size_t i = 0; i < def.host_patterns.size(); ++i) out << (i ? ", " : "") << def.host_patterns[i];
  out << "\n\n[thread]\n";
  out << "title = " << def.thread_rules.title_selector << "\n";
  out << "posts = " << def.thread_rules.post_list_selector << "\n";
  if (def.thread_rules.next_page_selector) out << "next_page = " << *def.thread_rules.next_page_selector << "\n";
  const auto& pr = def.post_rules;
  out << "\n[post]\n";
  if (pr.id_selector) out << "id = " << *pr.id_selector << "\n";
  out << "author = " << pr.author_selector << "\n";
  out << "timestamp = " << pr.timestamp_selector << "\n";
  out << "timestamp_formats = ";
  for (std::size_t i = 0; i < pr.timestamp_formats.size(); ++i) out << (i ? " | " : "") << pr.timestamp_formats[i];
  out << "\n";
  out << "timezone = " << format_offset(pr.utc_offset) << "\n";
  out << "content = " << pr.content_selector << "\n";
  if (pr.reply_link_selector) out << "reply_link = " << *pr.reply_link_selector << "\n";
  return out.str();
}

std::vector<ExtractionDiagnostic> lint_definition(const SiteDefinition& def,
                                                  const std::vector<SiteDefinition>& loaded) {
  std::vector<ExtractionDiagnostic> out;
  if (!valid_slug(def.site_id)) out.push_back(error("invalid-site-id", "", "site id '" + def.site_id + "' is not a slug"));
  if (def.host_patterns.empty()) out.push_back(error("empty-host-patterns", "", "site " + def.site_id + " claims no hosts"));
  if (def.version < 1) out.push_back(error("invalid-version", "", "version must be >= 1"));
  if (def.post_rules.timestamp_formats.empty())
    out.push_back(error("no-timestamp-formats", "", "at least one timestamp format is required"));

  auto check = [&](const std::string& field, const std::optional<std::string>& selector) {
    if (!selector) return;
    if (auto err = Selector::syntax_error(*selector)) out.push_back(error("selector-syntax", *selector, field + ": " + *err));
  };
  check("thread.title", def.thread_rules.title_selector);
  check("thread.posts", def.thread_rules.post_list_selector);
  check("thread.next_page", def.thread_rules.next_page_selector);
  check("post.id", def.post_rules.id_selector);
  check("post.author", def.post_rules.author_selector);
  check("post.timestamp", def.post_rules.timestamp_selector);
  check("post.content", def.post_rules.content_selector);
  check("post.reply_link", def.post_rules.reply_link_selector);

  for (const auto& other : loaded) {
    if (other.site_id == def.site_id) {
      out.push_back(error("duplicate-site-id", "", "site id '" + def.site_id + "' is already loaded"));
      continue;
    }
    for (const auto& a : def.host_patterns)
      for (const auto& b : other.host_patterns)
        if (patterns_overlap(a, b))
          out.push_back(error("host-overlap", "", "pattern '" + a + "' overlaps '" + b + "' of site " + other.site_id));
  }
  return out;
}

std::vector<ExtractionDiagnostic> lint_definition_text(std::string_view text,
                                                       const std::vector<SiteDefinition>& loaded) {
  try {
    return lint_definition(parse_site_definition(text), loaded);
  } catch (const Error& e) {
    return {error(e.code(), "", e.what())};
  }
}

bool host_matches(std::string_view pattern, std::string_view host) {
  std::string p = lower(std::string(pattern));
  std::string h = lower(std::string(host));
  return ::fnmatch(p.c_str(), h.c_str(), 0) == 0;
}

bool patterns_overlap(std::string_view a, std::string_view b) {
  return lower(std::string(a)) == lower(std::string(b)) || host_matches(a, b) || host_matches(b, a);
}

void check_ambiguity(const std::vector<SiteDefinition>& defs) {
  for (std::size_t i = 0; i < defs.size(); ++i) {
    for (std::size_t j = i + 1; j < defs.size(); ++j) {
      if (defs[i].site_id == defs[j].site_id)
        throw Error("ambiguous-definition", "site id '" + defs[i].site_id + "' is defined twice");
      for (const auto& a : defs[i].host_patterns)
        for (const auto& b : defs[j].host_patterns)
          if (patterns_overlap(a, b))
            throw Error("ambiguous-definition", "sites " + defs[i].site_id + " and " + defs[j].site_id +
                                                    " both claim '" + a + "' / '" + b + "'");
    }
  }
}

std::optional<SiteDefinition> match_site(std::string_view url, const std::vector<SiteDefinition>& defs) {
  auto parsed = parse_url(url);
  if (!parsed) return std::nullopt;
  const SiteDefinition* found = nullptr;
  for (const auto& def : defs) {
    bool hit = std::any_of(def.host_patterns.begin(), def.host_patterns.end(),
                           [&](const std::string& p) { return host_matches(p, parsed->host); });
    if (!hit) continue;
    if (found) throw Error("ambiguous-definition", "host " + parsed->host + " matches several definitions");
    found = &def;
  }
  if (!found) return std::nullopt;
  return *found;
}

DefinitionRegistry::DefinitionRegistry(fs::path directory) : directory_(std::move(directory)) {
  fs::create_directories(directory_);
  reload();
}

std::string DefinitionRegistry::snapshot() const {
  std::vector<std::string> entries;
  std::error_code ec;
  for (const auto& entry : fs::directory_iterator(directory_, ec)) {
    if (entry.path().extension() != ".ini" || is_temp_file(entry.path())) continue;
    auto mtime = fs::last_write_time(entry.path(), ec).time_since_epoch().count();
    auto size = fs::file_size(entry.path(), ec);
    entries.push_back(entry.path().filename().string() + ":" + std::to_string(mtime) + ":" + std::to_string(size));
  }
  std::sort(entries.begin(), entries.end());
  std::string out;
  for (auto& e : entries) out += e + "\n";
  return out;
}

std::vector<SiteDefinition> DefinitionRegistry::scan() const {
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(directory_))
    if (entry.path().extension() == ".ini" && !is_temp_file(entry.path())) files.push_back(entry.path());
  std::sort(files.begin(), files.end());
  std::vector<SiteDefinition> defs;
  for (const auto& file : files) {
    SiteDefinition def;
    try {
      def = parse_site_definition(read_file(file));
    } catch (const Error& e) {
      throw Error(e.code(), file.filename().string() + ": " + e.what());
    }
    if (def.site_id != file.stem().string())
      throw Error("definition-format", file.filename().string() + ": id '" + def.site_id + "' does not match file name");
    for (const auto& d : lint_definition(def, {}))
      throw Error("definition-invalid", file.filename().string() + ": " + d.code + " " + d.context);
    defs.push_back(std::move(def));
  }
  check_ambiguity(defs);
  return defs;
}

void DefinitionRegistry::reload() {
  std::unique_lock lock(mutex_);
  std::string snap = snapshot();
  try {
    defs_ = scan();
    last_error_.reset();
  } catch (const Error& e) {
    last_error_ = e.what();
    snapshot_ = snap;
    throw;
  }
  snapshot_ = std::move(snap);
}

bool DefinitionRegistry::refresh() {
  {
    std::shared_lock lock(mutex_);
    if (snapshot() == snapshot_) return false;
  }
  std::unique_lock lock(mutex_);
  std::string snap = snapshot();
  if (snap == snapshot_) return false;
  snapshot_ = snap;
  try {
    defs_ = scan();
    last_error_.reset();
  } catch (const Error& e) {
    last_error_ = e.what();
    return false;
  }
  return true;
}

std::optional<SiteDefinition> DefinitionRegistry::match(std::string_view url) {
  refresh();
  std::shared_lock lock(mutex_);
  return match_site(url, defs_);
}

std::vector<SiteDefinition> DefinitionRegistry::list() {
  refresh();
  std::shared_lock lock(mutex_);
  return defs_;
}

std::optional<std::string> DefinitionRegistry::last_error() const {
  std::shared_lock lock(mutex_);
  return last_error_;
}

SiteDefinition DefinitionRegistry::add(std::string_view text, bool replace) {
  std::unique_lock lock(mutex_);
  std::vector<SiteDefinition> others;
  std::optional<SiteDefinition> previous;
  SiteDefinition def;
  std::vector<ExtractionDiagnostic> diagnostics;
  try {
    def = parse_site_definition(text);
  } catch (const Error& e) {
    throw Error("definition-invalid", std::string(e.code()) + ": " + e.what());
  }
  for (const auto& d : defs_) {
    if (replace && d.site_id == def.site_id)
      previous = d;
    else
      others.push_back(d);
  }
  diagnostics = lint_definition(def, others);
  if (previous && def.version <= previous->version)
    diagnostics.push_back(error("stale-version", "", "version must be greater than " + std::to_string(previous->version)));
  if (!diagnostics.empty()) {
    std::string msg;
    for (const auto& d : diagnostics) msg += (msg.empty() ? "" : "; ") + d.code + ": " + d.context;
    throw Error("definition-invalid", msg);
  }
  write_file_atomic(directory_ / (def.site_id + ".ini"), text);
  defs_ = scan();
  snapshot_ = snapshot();
  last_error_.reset();
  return def;
}

}  // namespace cwatch
