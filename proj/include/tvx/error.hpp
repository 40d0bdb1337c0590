#pragma once

#include <stdexcept>
#include <string>

namespace tvx {

enum class ErrorKind {
  DimensionMismatch,
  Infeasible,
  Unbounded,
  NonConvergence,
  Unsupported,
  Precondition,
  Representation,
  Parse,
  Configuration,
};

const char* to_string(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

inline const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::DimensionMismatch: return "dimension mismatch";
    case ErrorKind::Infeasible: return "infeasible";
    case ErrorKind::Unbounded: return "unbounded";
    case ErrorKind::NonConvergence: return "non-convergence";
    case ErrorKind::Unsupported: return "unsupported";
    case ErrorKind::Precondition: return "precondition violated";
    case ErrorKind::Representation: return "representation limit";
    case ErrorKind::Parse: return "parse error";
    case ErrorKind::Configuration: return "configuration error";
  }
  return "unknown error";
}

}  // namespace tvx
