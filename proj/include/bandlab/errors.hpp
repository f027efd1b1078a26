#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace bandlab {

// Bad arguments, violated preconditions, malformed config or files.
class DomainError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class UnsupportedError : public DomainError {
 public:
  using DomainError::DomainError;
};

// Evaluation budget exceeded (dense grids too large for desk scale).
class ResourceError : public DomainError {
 public:
  using DomainError::DomainError;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Anything that went wrong inside a numerical routine.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class SingularOperatorError : public NumericalError {
 public:
  SingularOperatorError(double sigma_min, double sigma_max)
      : NumericalError("singular operator: sigma_min/sigma_max = " +
                       std::to_string(sigma_max > 0.0 ? sigma_min / sigma_max : 0.0)),
        sigma_min_(sigma_min),
        sigma_max_(sigma_max) {}

  double sigma_min() const noexcept { return sigma_min_; }
  double sigma_max() const noexcept { return sigma_max_; }

 private:
  double sigma_min_;
  double sigma_max_;
};

class DivergenceError : public NumericalError {
 public:
  explicit DivergenceError(std::size_t epoch)
      : NumericalError("training diverged at epoch " + std::to_string(epoch)),
        epoch_(epoch) {}
  std::size_t epoch() const noexcept { return epoch_; }

 private:
  std::size_t epoch_;
};

class InsufficientDataError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class ExperimentError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

}  // namespace bandlab
