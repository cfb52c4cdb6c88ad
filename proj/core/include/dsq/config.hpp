#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "dsq/devices.hpp"

namespace dsq {

struct SweepSpec {
  /// Tone powers at the coupled port; -infinity marks an undisplaced row.
  std::vector<double> displacement_powers_dbm;
  std::vector<double> thetas_deg;
  /// Fitted gains to use during reconstruction instead of chain.gain_j.
  std::optional<std::filesystem::path> calibration_file;
};

struct WignerCase {
  std::string label;
  /// Either a tone power or a signal-path photon number |alpha|^2.
  std::optional<double> power_dbm;
  std::optional<double> photons;
  double theta_deg = 0.0;
};

struct WignerSpec {
  std::vector<WignerCase> cases;
  /// Half-width of the grid around the origin; chosen from the states when unset.
  std::optional<double> half_range;
  std::size_t resolution = 201;
};

struct CalibrationSpec {
  std::vector<double> temperatures_k;
  std::uint64_t samples_per_point = 1'000'000;
  std::uint64_t seed = 1;
};

struct ExperimentConfig {
  JpaParams jpa = JpaParams::representative();
  CouplerParams coupler;
  DetectionChain chain;
  RfContext rf;
  SweepSpec sweep;
  WignerSpec wigner;
  std::optional<CalibrationSpec> calibration;
  std::uint64_t samples_per_point = 1'000'000;
  std::uint64_t seed = 2016;
  std::size_t jackknife_blocks = 16;
  /// Output directory; empty means "decide at run time".
  std::filesystem::path outputs;

  /// Representative operating point: 6.4 dB squeezing, 10 noise photons
  /// per path, -155..-125 dBm at theta = 45 and 135 deg.
  static ExperimentConfig defaults();
  /// Throws ConfigError.
  void validate() const;
};

/// Sections and keys absent from the document keep their defaults, except
/// `calibration`, which stays unset. Unknown keys are rejected.
ExperimentConfig parse_config(std::string_view json_text);
ExperimentConfig load_config(const std::filesystem::path& path);
std::string to_json(const ExperimentConfig& config);

}  // namespace dsq
