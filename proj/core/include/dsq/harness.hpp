#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "dsq/calibration.hpp"
#include "dsq/config.hpp"
#include "dsq/gaussian_state.hpp"

namespace dsq {

struct Estimate {
  double value = 0.0;
  /// Jackknife standard error.
  double error = 0.0;
};

struct SweepRow {
  double power_dbm = 0.0;
  double theta_deg = 0.0;
  /// Signal-path displacement |alpha|.
  double alpha = 0.0;
  /// "ok", or the failure kind: "reconstruction-failure", "unphysical",
  /// "malformed-moments", "error".
  std::string status = "ok";

  Estimate squeezing_db;
  Estimate photon_number;
  Estimate negativity_dpm;
  Estimate negativity_rsm;

  double truth_squeezing_db = 0.0;
  double truth_photon_number = 0.0;
  double truth_negativity = 0.0;

  bool heisenberg_pass = false;
  bool gaussian_pass = false;
};

/// Reconstruction chain: the configured chain, with gains replaced by the
/// fitted ones when the sweep names a calibration file.
DetectionChain reconstruction_chain(const ExperimentConfig& config);

/// Noise-free state entering the hybrid ring for one sweep point.
GaussianState sweep_point_state(const ExperimentConfig& config, double power_dbm, double theta_deg);

/// Seed of a sweep point, a function of (seed, power, theta) only.
std::uint64_t sweep_point_seed(std::uint64_t seed, double power_dbm, double theta_deg);

/// One row per (power, theta) in list order. Rows that fail keep their
/// truth columns and carry the failure kind in `status`.
std::vector<SweepRow> run_displacement_sweep(const ExperimentConfig& config);

void write_sweep_table(std::ostream& out, const std::vector<SweepRow>& rows);
std::vector<SweepRow> read_sweep_table(std::istream& in);

/// Writes sweep.csv and sweep_summary.json into `out_dir`; returns the rows.
std::vector<SweepRow> export_sweep(const ExperimentConfig& config, const std::filesystem::path& out_dir);

struct WignerPanel {
  WignerCase spec;
  double alpha = 0.0;
  GaussianState state = vacuum(1);
  WignerGrid grid;
  ContourEllipse ellipse;
  double squeezing_db = 0.0;
  double photon_number = 0.0;
};

std::vector<WignerPanel> build_wigner_panels(const ExperimentConfig& config);

/// One grid file per case, named wigner_<label>.txt. Throws on I/O failure
/// after attempting every file.
std::vector<std::filesystem::path> export_wigner_panels(const ExperimentConfig& config,
                                                         const std::filesystem::path& out_dir);

/// Plain-text grid: '#' key=value metadata, then one row of values per p.
void write_wigner_grid(std::ostream& out, const WignerPanel& panel);

struct WignerGridFile {
  std::map<std::string, std::string> metadata;
  WignerGrid grid;
};
WignerGridFile read_wigner_grid(std::istream& in);

struct PathCalibration {
  TemperatureSweep sweep;
  CalibrationResult fit;
};

struct CalibrationRun {
  PathCalibration path_1;
  PathCalibration path_2;
};

/// Simulates a Planck sweep for each path with the configured chain as
/// ground truth and fits (G, N). Requires the calibration section.
CalibrationRun run_calibration(const ExperimentConfig& config);

/// Writes calibration.json and calibration_path{1,2}.csv into `out_dir`.
CalibrationRun export_calibration(const ExperimentConfig& config, const std::filesystem::path& out_dir);

std::string to_json(const CalibrationRun& run);
CalibrationRun calibration_run_from_json(std::string_view text);
CalibrationRun load_calibration(const std::filesystem::path& path);

/// Analytic invariant suite without Monte Carlo. Prints one line per check
/// and returns the number of failures.
int run_selftest(std::ostream& log);

}  // namespace dsq
