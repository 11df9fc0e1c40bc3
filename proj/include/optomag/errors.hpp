#pragma once

#include <stdexcept>
#include <string>

namespace optomag {

// Bad parameter value or precondition violation (unknown label, η outside
// [0,1], negative temperature, ...).
class DomainError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Config text that cannot be parsed. Carries the 1-based line number.
class ParseError : public std::runtime_error {
 public:
  ParseError(int line, const std::string& what)
      : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}
  int line() const noexcept { return line_; }

 private:
  int line_;
};

// Requested Hilbert space or truncation exceeds a configured bound.
class TruncationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Conditioning on an event of (numerically) zero probability, or an
// estimator with nothing to estimate from (zero counts, zero intensity).
class ConditioningError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace optomag
