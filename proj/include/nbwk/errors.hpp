#pragma once

#include <stdexcept>
#include <string>

namespace nbwk {

/// Malformed arguments: shape mismatches, nonpositive masses, bad option values.
class InvalidInput : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// An operation was asked to act where it is undefined, e.g. a gradient at a collision.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// A stated precondition on the input does not hold (checked, not assumed).
class PreconditionError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// A sampled field was evaluated outside the region its interpolation rule covers.
class OutOfReach : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

}  // namespace nbwk
