#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace dendrite {

/// Base class of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A precondition on the arguments was violated (bad point, empty set, ...).
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// Malformed tree file or CSV input. Carries the 1-based source position.
class ParseError : public Error {
 public:
  ParseError(std::size_t line, std::size_t column, const std::string& what)
      : Error("line " + std::to_string(line) + ", column " + std::to_string(column) + ": " + what),
        line_(line),
        column_(column) {}

  std::size_t line() const noexcept { return line_; }
  std::size_t column() const noexcept { return column_; }

 private:
  std::size_t line_;
  std::size_t column_;
};

/// A solver failed to converge or produced a non-finite result.
class NumericalError : public Error {
 public:
  using Error::Error;
};

}  // namespace dendrite
