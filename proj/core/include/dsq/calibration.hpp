#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace dsq {

/// Mean thermal occupation 1 / (exp(hf / kT) - 1).
double planck_occupation(double temperature_k, double frequency_hz);

struct SweepPoint {
  double temperature_k = 0.0;
  /// Measured single-quadrature variance of the amplified noise.
  double variance = 0.0;
  /// Samples behind the variance estimate; 0 marks a noise-free value.
  std::uint64_t n_samples = 0;
};

struct TemperatureSweep {
  double frequency_hz = 5.573e9;
  std::vector<SweepPoint> points;

  void validate() const;
};

/// Quadrature variance G * 0.25 * (2 n(T) + 1 + 2 N) of a thermal input
/// amplified with gain G and added noise N.
double sweep_variance_model(double gain, double noise_photons, double temperature_k, double frequency_hz);

/// Sample variances drawn from their exact chi-squared law. n_samples == 0
/// returns the model values.
TemperatureSweep simulate_sweep(double gain, double noise_photons, std::span<const double> temperatures_k,
                                double frequency_hz, std::uint64_t n_samples, std::uint64_t seed);

std::vector<double> default_calibration_temperatures();

struct CalibrationResult {
  double total_gain = 0.0;
  double noise_photons = 0.0;
  /// Covariance of (total_gain, noise_photons).
  Eigen::Matrix2d covariance = Eigen::Matrix2d::Zero();
  /// RMS of the weighted residuals.
  double fit_residual = 0.0;
  int iterations = 0;

  double gain_error() const { return std::sqrt(covariance(0, 0)); }
  double noise_error() const { return std::sqrt(covariance(1, 1)); }
};

/// Weighted Levenberg-Marquardt fit of (G, N). Throws FitError when the
/// occupation spread is too small to separate gain from added noise.
CalibrationResult fit_gain_noise(const TemperatureSweep& sweep);

/// CSV with columns temperature_K,variance,n_samples and a frequency header.
void write_sweep_csv(std::ostream& out, const TemperatureSweep& sweep);
TemperatureSweep read_sweep_csv(std::istream& in);

std::string to_json(const CalibrationResult& result);
CalibrationResult calibration_from_json(std::string_view text);

}  // namespace dsq
