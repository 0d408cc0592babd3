#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace twostep {

/// Malformed or inconsistent input (bad dataset, empty arm, wrong lengths).
class InvalidInput : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Argument outside the mathematical domain of a function.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Correlation requested for a sequence with zero rank variance.
class UndefinedCorrelation : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Enumeration larger than the caller allowed. `count()` is the exact size,
/// saturated at UINT64_MAX when it does not fit.
class CapacityError : public std::length_error {
 public:
  CapacityError(const std::string& what, std::uint64_t count)
      : std::length_error(what), count_(count) {}
  std::uint64_t count() const noexcept { return count_; }

 private:
  std::uint64_t count_;
};

/// No admissible candidate exists (e.g. cut-point cell constraints).
class InfeasibleError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// File or config parse failure. `line()` is 1-based, 0 when not line-specific.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, std::size_t line = 0)
      : std::runtime_error(what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

}  // namespace twostep
