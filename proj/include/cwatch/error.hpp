#pragma once

#include <stdexcept>
#include <string>

namespace cwatch {

// Base error carrying a machine-readable code such as "not-found" or
// "unsupported-site". The code is what the HTTP and CLI layers map on.
class Error : public std::runtime_error {
 public:
  Error(std::string code, const std::string& message)
      : std::runtime_error(message), code_(std::move(code)) {}

  const std::string& code() const noexcept { return code_; }

 private:
  std::string code_;
};

class FetchError : public Error {
 public:
  FetchError(std::string code, const std::string& message, int status = 0)
      : Error(std::move(code), message), status_(status) {}

  // HTTP status of the last attempt, 0 when no response was received.
  int status() const noexcept { return status_; }

 private:
  int status_;
};

}  // namespace cwatch
