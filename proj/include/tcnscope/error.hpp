#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace tcnscope {

/// Base of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Tensor extents do not fit the operation.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// An operation argument is outside its valid range (stride, probability, ids).
class ParameterError : public Error {
 public:
  using Error::Error;
};

/// Invalid architecture, mask, split or run configuration.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Labels, datasets or sequences are unusable for the requested operation.
class DataError : public Error {
 public:
  using Error::Error;
};

/// Two artifacts that must belong together do not (bundle vs model, checkpoint vs dataset).
class ConsistencyError : public Error {
 public:
  using Error::Error;
};

/// Training produced a non-finite value.
class NumericError : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line)
      : Error(line == 0 ? what : "line " + std::to_string(line) + ": " + what), line_(line) {}

  /// 1-based line number, 0 when not tied to a line.
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

}  // namespace tcnscope
