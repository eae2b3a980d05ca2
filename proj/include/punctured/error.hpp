#pragma once

#include <stdexcept>
#include <string>

namespace punctured {

// Bad input: invalid parameters, violated preconditions, malformed files.
class InvalidInput : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// A numerical procedure failed to reach its target accuracy.
class NumericalFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Truncated Fock basis too small for the requested accuracy.
class TruncationError : public NumericalFailure {
 public:
  TruncationError(const std::string& what, int suggested_n_max)
      : NumericalFailure(what), suggested_n_max_(suggested_n_max) {}
  int suggested_n_max() const noexcept { return suggested_n_max_; }

 private:
  int suggested_n_max_;
};

}  // namespace punctured
