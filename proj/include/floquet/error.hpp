#pragma once

#include <stdexcept>
#include <string>

namespace floquet {

// Error categories map one-to-one onto the CLI exit codes.
enum class ErrorKind { config, gate, convergence, truncation };

inline const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::config: return "config";
    case ErrorKind::gate: return "gate";
    case ErrorKind::convergence: return "convergence";
    case ErrorKind::truncation: return "truncation";
  }
  return "unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

/// Invalid model, unknown parameter, unreadable input.
struct ConfigError : Error {
  explicit ConfigError(const std::string& what) : Error(ErrorKind::config, what) {}
};

/// Harmonic cutoff too small for the requested operation.
struct TruncationError : Error {
  explicit TruncationError(const std::string& what) : Error(ErrorKind::truncation, what) {}
};

/// Eigensolver, propagator or minimizer failed to reach its tolerance.
struct ConvergenceError : Error {
  explicit ConvergenceError(const std::string& what) : Error(ErrorKind::convergence, what) {}
};

}  // namespace floquet
