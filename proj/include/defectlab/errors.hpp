#pragma once

#include <stdexcept>
#include <string>

namespace defectlab {

// Bad arguments: mismatched field sizes, negative times, empty vertex sets.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// Region geometry does not admit the requested construction.
class GeometryError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Singular solves, failed factorizations, non-convergence.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Too many censored walks; the message says how to raise the horizon.
class HorizonError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Requested object exceeds desk-scale caps.
class ResourceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed input files and configs. `line` is 0 when unknown.
class FormatError : public std::runtime_error {
 public:
  FormatError(const std::string& what, int line = 0)
      : std::runtime_error(line > 0 ? "line " + std::to_string(line) + ": " + what : what),
        line_(line) {}
  int line() const { return line_; }

 private:
  int line_;
};

// Bad command line or config; `field` names the offending entry.
class UsageError : public std::runtime_error {
 public:
  UsageError(const std::string& field, const std::string& what)
      : std::runtime_error(field + ": " + what), field_(field) {}
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

}  // namespace defectlab
