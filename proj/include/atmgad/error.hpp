#pragma once

#include <stdexcept>
#include <string>

namespace atmgad {

// Base for every error raised by the library. The CLI maps InputError
// subclasses to exit code 2 and everything else to exit code 1.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad user input: unreadable files, malformed rows, invalid values.
class InputError : public Error {
 public:
  using Error::Error;
};

class ParseError : public InputError {
 public:
  ParseError(const std::string& source, std::size_t line, const std::string& what)
      : InputError(source + ":" + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class ValidationError : public InputError {
 public:
  using InputError::InputError;
};

// Unknown versions, bad magic, name/shape mismatches in binary artifacts.
class FormatError : public InputError {
 public:
  using InputError::InputError;
};

class ShapeError : public Error {
 public:
  using Error::Error;
};

// Raised when a forward op produces NaN/Inf or training diverges.
class NumericError : public Error {
 public:
  using Error::Error;
};

}  // namespace atmgad
