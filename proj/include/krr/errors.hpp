#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace krr {

// Malformed caller input: bad dimensions, bad parameters, bad files.
class InputError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// A factorization pivot was not strictly positive. Carries the 0-based
// index of the failing pivot.
class NotPositiveDefinite : public std::runtime_error {
 public:
  explicit NotPositiveDefinite(std::size_t index)
      : std::runtime_error("matrix not positive definite at pivot " +
                           std::to_string(index)),
        index_(index) {}

  std::size_t index() const noexcept { return index_; }

 private:
  std::size_t index_;
};

// Two routes that must agree numerically did not. This signals a bug,
// not bad input.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace krr
