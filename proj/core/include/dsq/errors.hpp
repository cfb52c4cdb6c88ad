#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace dsq {

/// Precondition violated by a caller-supplied argument.
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Covariance violates the uncertainty relation (or is not PSD).
class UnphysicalState : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Covariance is (numerically) singular where an inverse is required.
class DegenerateState : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Moment set cannot be turned into a covariance matrix.
class MalformedMoments : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Moment inversion has no solution within tolerance.
class ReconstructionError : public std::runtime_error {
 public:
  ReconstructionError(const std::string& what, std::vector<double> residuals)
      : std::runtime_error(what), residuals_(std::move(residuals)) {}

  /// Residual norm per moment order, index 0 is order 1.
  const std::vector<double>& residuals() const noexcept { return residuals_; }

 private:
  std::vector<double> residuals_;
};

/// Calibration fit is ill-conditioned or failed to converge.
class FitError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Experiment configuration is missing or malformed.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace dsq
