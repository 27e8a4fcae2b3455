#pragma once

#include <stdexcept>
#include <string>

namespace cifnet {

enum class ErrorKind { input, state, format, numerical, config };

inline const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::input: return "input";
    case ErrorKind::state: return "state";
    case ErrorKind::format: return "format";
    case ErrorKind::numerical: return "numerical";
    case ErrorKind::config: return "config";
  }
  return "unknown";
}

/// Base of every exception thrown by the library. The kind drives the CLI exit code.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

/// Bad arguments: dimension mismatch, unknown label, out-of-range parameter.
struct InputError : Error {
  explicit InputError(const std::string& what) : Error(ErrorKind::input, what) {}
};

/// Operation not valid for the object's current state (e.g. solving an empty neuron).
struct StateError : Error {
  explicit StateError(const std::string& what) : Error(ErrorKind::state, what) {}
};

/// Malformed or truncated file contents.
struct FormatError : Error {
  explicit FormatError(const std::string& what) : Error(ErrorKind::format, what) {}
};

/// Non-finite values or a failed decomposition.
struct NumericalError : Error {
  explicit NumericalError(const std::string& what) : Error(ErrorKind::numerical, what) {}
};

struct ConfigError : Error {
  explicit ConfigError(const std::string& what) : Error(ErrorKind::config, what) {}
};

}  // namespace cifnet
