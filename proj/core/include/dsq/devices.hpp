#pragma once

#include <cmath>
#include <string_view>

#include "dsq/gaussian_state.hpp"

namespace dsq {

inline constexpr double kPlanckConstant = 6.62607015e-34;   // J s
inline constexpr double kBoltzmannConstant = 1.380649e-23;  // J / K

/// Squeezer driven by a (possibly thermal) input.
struct JpaParams {
  SqueezeParams squeeze;
  /// Occupation of the thermal input; zero gives a pure squeezed vacuum.
  double thermal_occupation = 0.0;

  /// 6.4 dB of squeezing at gamma = 45 deg with 9.9 dB of anti-squeezing,
  /// which fixes r and the input occupation.
  static JpaParams representative();
  void validate() const;
};

/// Directional coupler seen as a highly reflective splitter.
struct CouplerParams {
  double coupling_db = -19.5;
  double insertion_loss_db = -0.18;

  void validate() const;
  /// Signal-path transmissivity, 1 - 10^{coupling_db/10}.
  double transmissivity() const;
  /// Power efficiency of the insertion loss, 10^{insertion_loss_db/10}.
  double efficiency() const;
};

/// Two phase-insensitive amplification paths. `gain_error` is the fraction
/// by which the true cross-correlation gain sqrt(g1 g2) exceeds the value
/// assumed during reconstruction; single-path gains are taken as exact. It
/// does not affect simulated data.
struct DetectionChain {
  double gain_1 = 1.0;
  double gain_2 = 1.0;
  double noise_photons_1 = 0.0;
  double noise_photons_2 = 0.0;
  double gain_error = 0.0;

  void validate() const;
  double assumed_cross_gain() const { return std::sqrt(gain_1 * gain_2) / (1.0 + gain_error); }
};

enum class PhotonConversion { kAtCoupledPort, kAtSignalPath };

std::string_view to_string(PhotonConversion mode);
/// Accepts "at-coupled-port" and "at-signal-path".
PhotonConversion parse_photon_conversion(std::string_view text);

struct RfContext {
  double carrier_frequency = 5.573e9;  // Hz
  double bandwidth = 4.0e5;            // Hz
  PhotonConversion conversion = PhotonConversion::kAtSignalPath;

  void validate() const;
};

GaussianState jpa_emit(const JpaParams& params);

/// Photon flux of a tone of the given power: 10^{(P - 30)/10} / (h f).
double dbm_to_photon_rate(double power_dbm, const RfContext& ctx);

/// Displacement amplitude |alpha| in the signal path produced by a tone of
/// `power_dbm`, counting photons within the measurement bandwidth.
double displacement_power_to_alpha(double power_dbm, const CouplerParams& coupler, const RfContext& ctx);

/// Tone amplitude at the coupled port whose transmitted part is `effective`.
DisplacementParams tone_for_displacement(const DisplacementParams& effective, const CouplerParams& coupler);

/// Mixes a single-mode signal with a coherent tone on the coupler, traces
/// out the coupled port and applies the insertion loss.
GaussianState coupler_displace(const GaussianState& signal, const DisplacementParams& tone,
                               const CouplerParams& params);

/// 50:50 splitting of the signal with vacuum; returns the two output paths.
GaussianState hybrid_ring_split(const GaussianState& signal);

}  // namespace dsq
