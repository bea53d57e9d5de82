#pragma once

#include <stdexcept>
#include <string>

namespace vclass {

/// Covariance matrix violates the Heisenberg bound.
class UnphysicalStateError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Squeezer model evaluated at or above the oscillation threshold.
class AboveThresholdError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Requested excess-noise target lies outside the reachable range.
class InfeasibleTargetError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// State class not covered by a closed-form measure (e.g. asymmetric EoF).
class UnsupportedStateError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace vclass
