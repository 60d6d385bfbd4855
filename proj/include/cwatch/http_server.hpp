#pragma once

#include <map>
#include <memory>
#include <string>

#include "cwatch/app.hpp"

namespace cwatch {

struct ApiRequest {
  std::string method;  // GET, POST
  std::string path;    // without query string
  std::map<std::string, std::string> query;
  std::string body;
  std::string content_type;
};

struct ApiResponse {
  int status = 200;
  std::string content_type = "application/json";
  std::string body;
};

// Routes one request to the App. Never throws; errors become JSON error
// documents with the mapped status.
ApiResponse dispatch(App& app, const ApiRequest& request);

// The JSON API plus static files under /ui, served with cpp-httplib.
class HttpServer {
 public:
  explicit HttpServer(App& app);
  ~HttpServer();

  // Returns the bound port; port 0 picks a free one. Throws Error("bind").
  int bind(const std::string& host, int port);
  // Serves until stop() is called.
  void run();
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace cwatch
