#pragma once

#include <stdexcept>
#include <string>

namespace legflow {

/// Coarse failure classes; the CLI maps them to exit codes
/// (validation -> 2, numerical -> 3).
enum class ErrorKind {
  Validation,   // bad arguments, bad config, preconditions
  Unsupported,  // operation not available for this model / dimension
  Numerical,    // degeneracy, non-convergence, NaN/Inf
  Io,           // file format / filesystem problems
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, std::string msg)
      : std::runtime_error(std::move(msg)), kind_(kind) {}
  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

inline Error validation_error(const std::string& msg) {
  return Error(ErrorKind::Validation, msg);
}
inline Error unsupported_error(const std::string& msg) {
  return Error(ErrorKind::Unsupported, msg);
}
inline Error numerical_error(const std::string& msg) {
  return Error(ErrorKind::Numerical, msg);
}
inline Error io_error(const std::string& msg) {
  return Error(ErrorKind::Io, msg);
}

}  // namespace legflow
