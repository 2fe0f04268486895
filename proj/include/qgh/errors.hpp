#pragma once

#include <stdexcept>
#include <string>

namespace qgh {

/// Base for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Iterative method failed to converge; carries the last residual.
class NumericalError : public Error {
 public:
  NumericalError(const std::string& what, double residual)
      : Error(what + " (residual " + std::to_string(residual) + ")"), residual_(residual) {}
  double residual() const { return residual_; }

 private:
  double residual_;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

/// Input outside the documented domain of an operation.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Character quadrature landed too far from an integer.
class QuadratureError : public Error {
 public:
  QuadratureError(const std::string& what, double raw)
      : Error(what + " (raw value " + std::to_string(raw) + ")"), raw_(raw) {}
  double raw() const { return raw_; }

 private:
  double raw_;
};

/// Scenario or CSV input rejected; line is 0 when unknown.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, int line = 0, std::string field = {})
      : Error(format(what, line, field)), line_(line), field_(std::move(field)) {}
  int line() const { return line_; }
  const std::string& field() const { return field_; }

 private:
  static std::string format(const std::string& what, int line, const std::string& field) {
    std::string out = what;
    if (!field.empty()) out += " [field " + field + "]";
    if (line > 0) out += " [line " + std::to_string(line) + "]";
    return out;
  }
  int line_;
  std::string field_;
};

}  // namespace qgh
