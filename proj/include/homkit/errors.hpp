#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace homkit {

/// Base class for all library errors. `kind()` is a stable machine-readable
/// tag suitable for structured error reporting.
class Error : public std::runtime_error {
 public:
  Error(std::string kind, const std::string& message)
      : std::runtime_error(message), kind_(std::move(kind)) {}

  const std::string& kind() const noexcept { return kind_; }

 private:
  std::string kind_;
};

/// A precondition on an argument was violated.
class InvalidInput : public Error {
 public:
  explicit InvalidInput(const std::string& m) : Error("invalid_input", m) {}
};

/// A projective transfer produced a point with (near-)zero homogeneous weight.
class PointAtInfinity : public Error {
 public:
  explicit PointAtInfinity(const std::string& m) : Error("point_at_infinity", m) {}
};

/// The input configuration does not determine a solution (rank deficiency).
class DegenerateConfiguration : public Error {
 public:
  explicit DegenerateConfiguration(const std::string& m) : Error("degenerate", m) {}
};

/// A random-geometry generator exhausted its retry budget.
class InfeasibleGeometry : public Error {
 public:
  explicit InfeasibleGeometry(const std::string& m) : Error("infeasible_geometry", m) {}
};

/// A file could not be parsed; the message carries location diagnostics.
class ParseError : public Error {
 public:
  explicit ParseError(const std::string& m) : Error("parse_error", m) {}
};

}  // namespace homkit
