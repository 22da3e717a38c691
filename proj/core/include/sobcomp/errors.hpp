#pragma once

#include <stdexcept>
#include <string>

namespace sobcomp {

// Input outside an operation's domain (bad coordinates, r <= 0, non-unit
// direction, violated preconditions). The CLI maps these to exit code 1.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// Malformed input data (configs, tables, profiles) or a user-supplied
// function that produced a non-finite value. Exit code 1.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// An estimator or solver could not produce a trustworthy number
// (budget exhausted, empty shell, stagnation, NaN). Exit code 2.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace sobcomp
