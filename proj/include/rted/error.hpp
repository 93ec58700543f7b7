#pragma once

#include <stdexcept>
#include <string>

namespace rted {

enum class ErrorKind {
  Schema,        // missing or malformed columns / fields
  Format,        // structurally invalid input (timestamps, syntax)
  Data,          // bad values (NaN, out of range)
  Domain,        // argument outside the mathematical domain
  Fit,           // model cannot be fitted
  DegenerateVariable,
  Config,
  Topology,
  Numerical,
  Resource,      // iteration caps, size limits
  UnsupportedMode,
  EmptyResult,
};

const char* to_string(ErrorKind kind) noexcept;

/// Exception type thrown by every module. `kind()` drives CLI exit codes.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + " error: " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

inline const char* to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::Schema: return "schema";
    case ErrorKind::Format: return "format";
    case ErrorKind::Data: return "data";
    case ErrorKind::Domain: return "domain";
    case ErrorKind::Fit: return "fit";
    case ErrorKind::DegenerateVariable: return "degenerate-variable";
    case ErrorKind::Config: return "configuration";
    case ErrorKind::Topology: return "topology";
    case ErrorKind::Numerical: return "numerical";
    case ErrorKind::Resource: return "resource";
    case ErrorKind::UnsupportedMode: return "unsupported-mode";
    case ErrorKind::EmptyResult: return "empty-result";
  }
  return "unknown";
}

}  // namespace rted
