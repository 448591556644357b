#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace lpoison {

// Raised when an argument or configuration violates a documented contract.
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Raised by the dataset readers. line() is 1-based, 0 when not tied to a line.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, std::size_t line)
      : std::runtime_error(what), line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

// Raised when a linear system cannot be solved reliably.
class NumericalError : public std::runtime_error {
 public:
  NumericalError(const std::string& what, double condition_estimate)
      : std::runtime_error(what), condition_estimate_(condition_estimate) {}

  double condition_estimate() const noexcept { return condition_estimate_; }

 private:
  double condition_estimate_;
};

}  // namespace lpoison
