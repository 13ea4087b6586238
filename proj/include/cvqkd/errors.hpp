#pragma once

#include <stdexcept>

namespace cvqkd {

/// Input outside the mathematical domain of an operation (V < 1, T outside [0,1], ...).
class DomainError : public std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// Matrix / mode-count mismatch between operands.
class DimensionError : public std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// Mode index or label not present in a state.
class IndexError : public std::out_of_range {
  using std::out_of_range::out_of_range;
};

/// A covariance matrix violates the uncertainty bound beyond tolerance.
class PhysicalityError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// An eigensolve or closed-form radical failed to produce trustworthy values.
class NumericalError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// A quantity that must be bounded away from zero degenerated.
class DegenerateError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// A covariance factorization required for sampling does not exist.
class FactorizationError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Too few shots for the requested estimate.
class InsufficientDataError : public std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

}  // namespace cvqkd
