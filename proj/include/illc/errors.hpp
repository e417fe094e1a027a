#pragma once

#include <stdexcept>
#include <string>

namespace illc {

// Base class for every error raised by the library. The CLI maps each
// subclass onto a process exit code.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad user-supplied configuration (ranges, enum names, flag combinations).
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Matrix/vector shapes that do not line up.
class DimensionError : public Error {
 public:
  using Error::Error;
};

// Structurally valid input that breaks a precondition (non-finite values,
// empty sets, mismatched clusterings).
class ValidationError : public Error {
 public:
  using Error::Error;
};

// Argument outside the domain of a math function (e.g. sigmoid inverse).
class DomainError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

// Malformed file content. `row` is 1-based, 0 when not applicable.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t row = 0)
      : Error(what), row_(row) {}
  std::size_t row() const { return row_; }

 private:
  std::size_t row_;
};

// Loss or parameters became non-finite.
class NumericError : public Error {
 public:
  using Error::Error;
};

}  // namespace illc
