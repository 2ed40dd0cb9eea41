#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace cointss {

/// Failure categories. The CLI maps input problems to exit code 2 and
/// numerical problems to exit code 3 (see `is_validation_kind`).
enum class ErrorKind {
  dimension,
  validation,
  domain,
  parameter,
  order,
  length,
  data,
  driver,
  stability,
  numeric,
  rank,
  multiplicity,
  minimality,
  convergence,
  conditioning,
  singularity,
  not_cointegrated,
};

inline std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::dimension: return "dimension";
    case ErrorKind::validation: return "validation";
    case ErrorKind::domain: return "domain";
    case ErrorKind::parameter: return "parameter";
    case ErrorKind::order: return "order";
    case ErrorKind::length: return "length";
    case ErrorKind::data: return "data";
    case ErrorKind::driver: return "driver";
    case ErrorKind::stability: return "stability";
    case ErrorKind::numeric: return "numeric";
    case ErrorKind::rank: return "rank";
    case ErrorKind::multiplicity: return "multiplicity";
    case ErrorKind::minimality: return "minimality";
    case ErrorKind::convergence: return "convergence";
    case ErrorKind::conditioning: return "conditioning";
    case ErrorKind::singularity: return "singularity";
    case ErrorKind::not_cointegrated: return "not_cointegrated";
  }
  return "unknown";
}

inline bool is_validation_kind(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::dimension:
    case ErrorKind::validation:
    case ErrorKind::domain:
    case ErrorKind::parameter:
    case ErrorKind::order:
    case ErrorKind::length:
    case ErrorKind::data:
    case ErrorKind::driver:
      return true;
    default:
      return false;
  }
}

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + " error: " + what),
        kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) {
  throw Error(kind, what);
}

inline void require(bool condition, ErrorKind kind, const std::string& what) {
  if (!condition) fail(kind, what);
}

}  // namespace cointss
