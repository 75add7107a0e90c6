#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace lnodec {

/// A state left the admissible region of the problem (e.g. the plasma
/// temperature dropped onto the logarithmic singularity).
class DomainError : public std::runtime_error {
 public:
  explicit DomainError(const std::string& what, double time = 0.0,
                       std::ptrdiff_t index = -1)
      : std::runtime_error(what), time_(time), index_(index) {}

  /// Time at which the offending evaluation happened.
  double time() const noexcept { return time_; }
  /// Grid index of the failing step, or -1 when not raised from a rollout.
  std::ptrdiff_t index() const noexcept { return index_; }

 private:
  double time_;
  std::ptrdiff_t index_;
};

class NonFiniteError : public std::runtime_error {
 public:
  NonFiniteError(const std::string& what, std::ptrdiff_t index)
      : std::runtime_error(what), index_(index) {}
  std::ptrdiff_t index() const noexcept { return index_; }

 private:
  std::ptrdiff_t index_;
};

class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, int line)
      : std::runtime_error("line " + std::to_string(line) + ": " + what),
        line_(line) {}
  int line() const noexcept { return line_; }

 private:
  int line_;
};

class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace lnodec
