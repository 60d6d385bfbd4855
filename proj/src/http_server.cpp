#include "cwatch/http_server.hpp"

#include <httplib.h>

#include <charconv>
#include <filesystem>

#include "cwatch/error.hpp"

namespace cwatch {

using nlohmann::json;

namespace {

std::vector<std::string> split_path(const std::string& path) {
  std::vector<std::string> parts;
  std::size_t from = 1;
  while (from <= path.size()) {
    std::size_t slash = path.find('/', from);
    if (slash == std::string::npos) slash = path.size();
    if (slash > from) parts.push_back(path.substr(from, slash - from));
    from = slash + 1;
  }
  return parts;
}

json parse_body(const ApiRequest& r) {
  try {
    json j = json::parse(r.body.empty() ? "{}" : r.body);
    if (!j.is_object()) throw Error("invalid-json", "request body must be a JSON object");
    return j;
  } catch (const json::exception& e) {
    throw Error("invalid-json", std::string("request body is not valid JSON: ") + e.what());
  }
}

std::string string_field(const json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) throw Error("missing-field", std::string("missing field ") + key);
  if (!it->is_string()) throw Error("bad-request", std::string(key) + " must be a string");
  return it->get<std::string>();
}

std::string param_value(const std::string& key, const json& v) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_number() || v.is_boolean()) return v.dump();
  throw Error("bad-request", "parameter " + key + " must be a string, number or boolean");
}

int int_query(const ApiRequest& r, const std::string& key, int fallback) {
  auto it = r.query.find(key);
  if (it == r.query.end()) return fallback;
  int v = 0;
  const std::string& s = it->second;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc() || p != s.data() + s.size())
    throw Error("bad-request", key + " must be an integer, got '" + s + "'");
  return v;
}

std::optional<std::string> opt_query(const ApiRequest& r, const std::string& key) {
  auto it = r.query.find(key);
  if (it == r.query.end()) return std::nullopt;
  return it->second;
}

std::optional<Timestamp> time_query(const ApiRequest& r, const std::string& key) {
  auto v = opt_query(r, key);
  if (!v) return std::nullopt;
  auto t = parse_iso8601(*v);
  if (!t) throw Error("bad-request", key + " must be an ISO 8601 UTC timestamp");
  return t;
}

ApiResponse json_response(int status, std::string body) { return {status, "application/json", std::move(body)}; }

ApiResponse route(App& app, const ApiRequest& r) {
  auto parts = split_path(r.path);
  if (parts.empty() || parts[0] != "api") throw Error("not-found", "no route " + r.path);
  parts.erase(parts.begin());
  const bool get = r.method == "GET", post = r.method == "POST";
  const std::size_t n = parts.size();
  auto method_not_allowed = [&]() -> ApiResponse {
    return json_response(405, dump_document({{"error", "method-not-allowed"}, {"message", r.method + " " + r.path}}));
  };

  if (n == 1 && parts[0] == "health") return get ? json_response(200, app.health()) : method_not_allowed();

  if (n == 1 && parts[0] == "fetch") {
    if (!post) return method_not_allowed();
    json body = parse_body(r);
    return json_response(201, app.fetch(string_field(body, "url")));
  }
  if (n == 2 && parts[0] == "fetch" && parts[1] == "bulk") {
    if (!post) return method_not_allowed();
    json body = parse_body(r);
    std::string keywords = string_field(body, "keywords");
    int limit = 20;
    if (auto it = body.find("limit"); it != body.end()) {
      if (!it->is_number_integer()) throw Error("bad-request", "limit must be an integer");
      limit = it->get<int>();
    }
    return json_response(202, app.submit_bulk_fetch(keywords, limit));
  }

  if (n == 2 && parts[0] == "jobs") return get ? json_response(200, app.job(parts[1])) : method_not_allowed();

  if (parts[0] == "threads" && n == 1) {
    if (!get) return method_not_allowed();
    ThreadFilter f;
    f.site_id = opt_query(r, "site_id");
    f.url_substring = opt_query(r, "url");
    f.from = time_query(r, "from");
    f.to = time_query(r, "to");
    return json_response(200, app.threads(f));
  }
  if (parts[0] == "threads" && n == 2) {
    if (!get) return method_not_allowed();
    std::string format = opt_query(r, "format").value_or("json");
    std::string doc = app.thread(parts[1], format);
    return {200, format == "canonical" ? "application/xml" : "application/json", doc};
  }

  if (parts[0] == "extractions" && n == 1) {
    if (get) return json_response(200, app.extractions());
    if (!post) return method_not_allowed();
    json body = parse_body(r);
    std::string algorithm = string_field(body, "algorithm");
    std::vector<std::string> ids;
    auto it = body.find("thread_ids");
    if (it == body.end() || !it->is_array()) throw Error("missing-field", "thread_ids must be an array");
    for (const auto& id : *it) {
      if (!id.is_string()) throw Error("bad-request", "thread_ids must hold strings");
      ids.push_back(id.get<std::string>());
    }
    std::map<std::string, std::string> params;
    if (auto p = body.find("params"); p != body.end() && !p->is_null()) {
      if (!p->is_object()) throw Error("bad-request", "params must be an object");
      for (auto kv = p->begin(); kv != p->end(); ++kv) params[kv.key()] = param_value(kv.key(), kv.value());
    }
    return json_response(202, app.submit_extraction(ids, algorithm, params));
  }
  if (parts[0] == "extractions" && n == 2) {
    return get ? json_response(200, app.extraction(parts[1])) : method_not_allowed();
  }
  if (parts[0] == "extractions" && n == 3) {
    if (!get) return method_not_allowed();
    const std::string& id = parts[1];
    if (parts[2] == "topics") return {200, "application/xml", app.topics_view(id)};
    if (parts[2] == "network") {
      NetworkQuery q;
      if (auto t = opt_query(r, "topics")) q.topics = parse_topic_list(*t);
      if (auto k = opt_query(r, "keep_isolated")) {
        if (*k != "true" && *k != "false") throw Error("bad-request", "keep_isolated must be true or false");
        q.keep_isolated = *k == "true";
      }
      q.format = opt_query(r, "format").value_or("graphml");
      std::string doc = app.network_view(id, q);
      return {200, q.format == "json" ? "application/json" : "application/graphml+xml", doc};
    }
    if (parts[2] == "timeline") {
      TimelineQuery q;
      q.intervals = int_query(r, "intervals", q.intervals);
      if (auto g = opt_query(r, "group_by")) q.group_by = parse_group_by(*g);
      return {200, "text/tab-separated-values; charset=utf-8", app.timeline_view(id, q)};
    }
    throw Error("not-found", "no view " + parts[2]);
  }

  if (n == 1 && parts[0] == "sources") {
    if (get) return json_response(200, app.sources());
    if (!post) return method_not_allowed();
    std::string text = r.body;
    bool replace = false;
    if (r.content_type.rfind("application/json", 0) == 0) {
      json body = parse_body(r);
      text = string_field(body, "definition");
      if (auto it = body.find("replace"); it != body.end()) {
        if (!it->is_boolean()) throw Error("bad-request", "replace must be a boolean");
        replace = it->get<bool>();
      }
    } else if (auto q = opt_query(r, "replace")) {
      replace = *q == "true";
    }
    return json_response(201, app.add_source(text, replace));
  }

  throw Error("not-found", "no route " + r.path);
}

}  // namespace

ApiResponse dispatch(App& app, const ApiRequest& request) {
  try {
    return route(app, request);
  } catch (const Error& e) {
    return json_response(http_status(e.code()), error_document(e));
  } catch (const std::exception& e) {
    return json_response(500, error_document(Error("internal", e.what())));
  }
}

struct HttpServer::Impl {
  App& app;
  httplib::Server server;
  explicit Impl(App& a) : app(a) {}
};

HttpServer::HttpServer(App& app) : impl_(std::make_unique<Impl>(app)) {
  auto handler = [this](const httplib::Request& req, httplib::Response& res) {
    ApiRequest r;
    r.method = req.method;
    r.path = req.path;
    for (const auto& [k, v] : req.params) r.query[k] = v;
    r.body = req.body;
    r.content_type = req.get_header_value("Content-Type");
    ApiResponse out = dispatch(impl_->app, r);
    res.status = out.status;
    res.set_content(out.body, out.content_type);
  };
  auto& s = impl_->server;
  s.Get(R"(/api/.*)", handler);
  s.Post(R"(/api/.*)", handler);

  const auto& ui = impl_->app.config().server.ui_dir;
  std::error_code ec;
  if (!ui.empty() && std::filesystem::is_directory(ui, ec)) {
    s.set_mount_point("/ui", ui.string());
  } else {
    s.Get(R"(/ui(/.*)?)", [](const httplib::Request&, httplib::Response& res) {
      res.status = 404;
      res.set_content(error_document(Error("not-found", "the UI bundle is not installed")), "application/json");
    });
  }
}

HttpServer::~HttpServer() { stop(); }

int HttpServer::bind(const std::string& host, int port) {
  auto& s = impl_->server;
  int bound = port == 0 ? s.bind_to_any_port(host) : (s.bind_to_port(host, port) ? port : -1);
  if (bound < 0) throw Error("bind", "cannot listen on " + host + ":" + std::to_string(port));
  return bound;
}

void HttpServer::run() { impl_->server.listen_after_bind(); }

void HttpServer::stop() { impl_->server.stop(); }

}  // namespace cwatch
