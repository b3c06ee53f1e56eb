#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace topicshift {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input text (JSON, config files). Carries the 1-based line when known.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line = 0)
      : Error(line == 0 ? what : "line " + std::to_string(line) + ": " + what),
        line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// Well-formed input that violates a data-model invariant.
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// Tensor shape or index-contract violation inside the model.
class ShapeError : public Error {
 public:
  using Error::Error;
};

}  // namespace topicshift
