// commentwatcher: command-line front end over the same core as the HTTP API.

#include <CLI11.hpp>

#include <csignal>
#include <iostream>
#include <thread>

#include "cwatch/app.hpp"
#include "cwatch/error.hpp"
#include "cwatch/fs_util.hpp"
#include "cwatch/http_server.hpp"
#include "cwatch/site_definition.hpp"

namespace {

std::vector<std::string> split_commas(const std::string& text) {
  std::vector<std::string> out;
  std::size_t from = 0;
  while (from <= text.size()) {
    std::size_t comma = text.find(',', from);
    if (comma == std::string::npos) comma = text.size();
    if (comma > from) out.push_back(text.substr(from, comma - from));
    from = comma + 1;
  }
  return out;
}

std::map<std::string, std::string> parse_params(const std::vector<std::string>& items) {
  std::map<std::string, std::string> out;
  for (const auto& item : items) {
    auto eq = item.find('=');
    if (eq == std::string::npos || eq == 0)
      throw cwatch::Error("bad-request", "parameters are key=value, got '" + item + "'");
    out[item.substr(0, eq)] = item.substr(eq + 1);
  }
  return out;
}

std::optional<cwatch::Timestamp> parse_time_option(const std::string& text, const char* what) {
  if (text.empty()) return std::nullopt;
  auto t = cwatch::parse_iso8601(text);
  if (!t) throw cwatch::Error("bad-request", std::string(what) + " must be an ISO 8601 UTC timestamp");
  return t;
}

void write_out(const std::string& doc) { std::cout << doc << std::flush; }

int serve(cwatch::App& app, const std::string& bind, int port) {
  sigset_t set;
  sigemptyset(&set);
  sigaddset(&set, SIGINT);
  sigaddset(&set, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &set, nullptr);

  cwatch::HttpServer server(app);
  int bound = server.bind(bind, port);
  std::cerr << "listening on http://" << bind << ":" << bound << "/" << std::endl;
  std::thread waiter([&] {
    int sig = 0;
    sigwait(&set, &sig);
    server.stop();
  });
  server.run();
  pthread_kill(waiter.native_handle(), SIGTERM);
  waiter.join();
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App cli{"Fetch forum threads, extract topics and build reply networks."};
  cli.require_subcommand(1);

  std::string config_file, store_dir, defs_dir, fixtures_dir;
  cli.add_option("-c,--config", config_file, "JSON config file");
  cli.add_option("--store", store_dir, "store directory (store.root)");
  cli.add_option("--definitions", defs_dir, "site definition directory (definitions.dir)");
  cli.add_option("--fixtures", fixtures_dir, "root for fixture:// URLs (fetch.fixtures_dir)");

  auto* fetch = cli.add_subcommand("fetch", "fetch one thread and store it");
  std::string fetch_url;
  fetch->add_option("url", fetch_url)->required();

  auto* bulk = cli.add_subcommand("fetch-bulk", "search by keywords and fetch every supported result");
  std::vector<std::string> keywords;
  int limit = 20;
  bulk->add_option("keywords", keywords)->required();
  bulk->add_option("-n,--limit", limit, "search results to consider")->capture_default_str();

  auto* sources = cli.add_subcommand("sources", "site definitions");
  sources->require_subcommand(1);
  sources->add_subcommand("list", "loaded definitions");
  auto* src_add = sources->add_subcommand("add", "lint and install a definition file");
  std::string src_file;
  bool replace = false;
  src_add->add_option("file", src_file)->required()->check(CLI::ExistingFile);
  src_add->add_flag("--replace", replace, "allow updating an existing site to a higher version");
  auto* src_lint = sources->add_subcommand("lint", "check a definition file without installing it");
  std::string lint_file;
  src_lint->add_option("file", lint_file)->required()->check(CLI::ExistingFile);

  auto* threads = cli.add_subcommand("threads", "stored threads");
  threads->require_subcommand(1);
  auto* th_list = threads->add_subcommand("list", "thread summaries, newest fetch first");
  std::string site, url_part, from, to;
  th_list->add_option("--site", site);
  th_list->add_option("--url", url_part, "substring of the source URL");
  th_list->add_option("--from", from, "posts on or after (ISO 8601)");
  th_list->add_option("--to", to, "posts on or before (ISO 8601)");
  auto* th_export = threads->add_subcommand("export", "print one thread");
  std::string export_id, export_format = "canonical";
  th_export->add_option("thread_id", export_id)->required();
  th_export->add_option("--format", export_format)->check(CLI::IsMember({"canonical", "json"}))->capture_default_str();

  auto* extract = cli.add_subcommand("extract", "run a topic extraction and wait for it");
  std::string thread_ids, algorithm = "tng";
  std::vector<std::string> param_items;
  bool all_threads = false;
  extract->add_option("--threads", thread_ids, "comma-separated thread ids");
  extract->add_flag("--all", all_threads, "use every stored thread");
  extract->add_option("-a,--algorithm", algorithm)->capture_default_str();
  extract->add_option("-p,--param", param_items, "algorithm or corpus parameter key=value");

  auto* topics = cli.add_subcommand("topics", "print the result document of an extraction");
  std::string topics_id;
  topics->add_option("extraction_id", topics_id)->required();

  auto* network = cli.add_subcommand("network", "export the reply network of an extraction");
  std::string net_id, net_topics, net_format = "graphml";
  bool drop_isolated = false;
  network->add_option("extraction_id", net_id)->required();
  auto* topics_opt = network->add_option("--topics", net_topics, "comma-separated topic ids to keep");
  network->add_flag("--drop-isolated", drop_isolated, "with --topics, remove nodes left without arcs");
  network->add_option("--format", net_format)->capture_default_str();

  auto* timeline = cli.add_subcommand("timeline", "per-interval topic counts of an extraction");
  std::string tl_id, group_by = "forum";
  int intervals = 10;
  timeline->add_option("extraction_id", tl_id)->required();
  timeline->add_option("-n,--intervals", intervals)->capture_default_str();
  timeline->add_option("--group-by", group_by)->capture_default_str();

  auto* serve_cmd = cli.add_subcommand("serve", "run the HTTP service");
  std::string bind;
  int port = -1;
  serve_cmd->add_option("--bind", bind, "listen address (server.bind)");
  serve_cmd->add_option("--port", port, "listen port (server.port)");

  CLI11_PARSE(cli, argc, argv);

  try {
    std::optional<std::filesystem::path> file;
    if (!config_file.empty()) file = config_file;
    cwatch::Config config = cwatch::load_config(file, cwatch::process_environment());
    if (!store_dir.empty()) config.store_root = store_dir;
    if (!defs_dir.empty()) config.definitions_dir = defs_dir;
    if (!fixtures_dir.empty()) config.fixtures_dir = fixtures_dir;
    if (!bind.empty()) config.server.bind = bind;
    if (port >= 0) config.server.port = port;

    if (src_lint->parsed()) {
      cwatch::DefinitionRegistry registry(config.definitions_dir);
      auto diags = cwatch::lint_definition_text(cwatch::read_file(lint_file), registry.list());
      bool failed = false;
      for (const auto& d : diags) {
        std::cout << to_string(d.severity) << "\t" << d.code << "\t" << d.selector << "\t" << d.context << "\n";
        failed = failed || d.is_error();
      }
      if (diags.empty()) std::cout << "ok\n";
      return failed ? 1 : 0;
    }

    cwatch::App app(config);
    if (fetch->parsed()) {
      write_out(app.fetch(fetch_url));
    } else if (bulk->parsed()) {
      std::string joined;
      for (const auto& k : keywords) joined += (joined.empty() ? "" : " ") + k;
      write_out(app.bulk_fetch(joined, limit));
    } else if (sources->parsed()) {
      if (src_add->parsed()) write_out(app.add_source(cwatch::read_file(src_file), replace));
      else write_out(app.sources());
    } else if (th_list->parsed()) {
      cwatch::ThreadFilter f;
      if (!site.empty()) f.site_id = site;
      if (!url_part.empty()) f.url_substring = url_part;
      f.from = parse_time_option(from, "--from");
      f.to = parse_time_option(to, "--to");
      write_out(app.threads(f));
    } else if (th_export->parsed()) {
      write_out(app.thread(export_id, export_format));
    } else if (extract->parsed()) {
      std::vector<std::string> ids = split_commas(thread_ids);
      if (all_threads)
        for (const auto& s : app.store().list_threads()) ids.push_back(s.thread_id);
      std::string id = app.run_extraction(ids, algorithm, parse_params(param_items));
      std::string doc = app.extraction(id);
      write_out(doc);
      return app.store().get_extraction(id).status == cwatch::ExtractionStatus::done ? 0 : 1;
    } else if (topics->parsed()) {
      write_out(app.topics_view(topics_id));
    } else if (network->parsed()) {
      cwatch::NetworkQuery q;
      if (topics_opt->count() > 0) q.topics = cwatch::parse_topic_list(net_topics);
      q.keep_isolated = !drop_isolated;
      q.format = net_format;
      write_out(app.network_view(net_id, q));
    } else if (timeline->parsed()) {
      write_out(app.timeline_view(tl_id, {intervals, cwatch::parse_group_by(group_by)}));
    } else if (serve_cmd->parsed()) {
      return serve(app, config.server.bind, config.server.port);
    }
  } catch (const cwatch::Error& e) {
    std::cerr << "error: " << e.code() << ": " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
