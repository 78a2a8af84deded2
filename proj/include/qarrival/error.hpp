#pragma once

#include <stdexcept>
#include <string>

namespace qarrival {

enum class ErrorKind {
  invalid_parameter,
  invalid_case,
  invalid_strategy,
  numeric_failure,
  infeasible_response,
};

inline const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::invalid_parameter: return "invalid-parameter";
    case ErrorKind::invalid_case: return "invalid-case";
    case ErrorKind::invalid_strategy: return "invalid-strategy";
    case ErrorKind::numeric_failure: return "numeric-failure";
    case ErrorKind::infeasible_response: return "infeasible-response";
  }
  return "unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

inline void require(bool cond, ErrorKind kind, const std::string& what) {
  if (!cond) throw Error(kind, what);
}

}  // namespace qarrival
