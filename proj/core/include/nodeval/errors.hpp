#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace nodeval {

/// Base class for every error thrown by this library.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// An argument lies outside an operation's documented domain.
class ArgumentError : public Error {
public:
  using Error::Error;
};

/// Input data violates a structural contract (duplicate ids, bad shapes).
class ValidationError : public Error {
public:
  using Error::Error;
};

/// Line-oriented text could not be parsed. line() is 1-based.
class ParseError : public Error {
public:
  ParseError(std::size_t line, const std::string& message)
      : Error("line " + std::to_string(line) + ": " + message), line_(line) {}

  std::size_t line() const noexcept { return line_; }

private:
  std::size_t line_;
};

/// A parsed field lies outside its permitted range.
class RangeError : public ParseError {
public:
  using ParseError::ParseError;
};

/// A box cannot be encoded from the requested grid cell and anchor.
class EncodingError : public Error {
public:
  using Error::Error;
};

/// A metric with an empty denominator (0/0); the caller picks the convention.
class UndefinedMetricError : public Error {
public:
  using Error::Error;
};

/// Non-finite intermediate values or a failed numeric verification.
class NumericError : public Error {
public:
  using Error::Error;
};

} // namespace nodeval
