#include "dsq/devices.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "dsq/errors.hpp"

namespace dsq {

JpaParams JpaParams::representative() {
  constexpr double kSqueezingDb = 6.4;
  constexpr double kAntiSqueezingDb = 9.9;
  // lambda_min = 0.25 (2n+1) e^{-2r}, lambda_max = 0.25 (2n+1) e^{2r}
  const double log_purity = (kAntiSqueezingDb - kSqueezingDb) / 20.0;
  const double log_squeeze = (kAntiSqueezingDb + kSqueezingDb) / 20.0;
  JpaParams params;
  params.squeeze = SqueezeParams(log_squeeze * std::numbers::ln10 / 2.0, -2.0 * std::numbers::pi / 4.0);
  params.thermal_occupation = (std::pow(10.0, log_purity) - 1.0) / 2.0;
  return params;
}

void JpaParams::validate() const {
  if (!(thermal_occupation >= 0.0) || !std::isfinite(thermal_occupation)) {
    throw InvalidArgument("JPA thermal occupation must be finite and nonnegative");
  }
  if (!(squeeze.r >= 0.0)) throw InvalidArgument("JPA squeezing factor must be nonnegative");
}

void CouplerParams::validate() const {
  if (!(coupling_db < 0.0)) throw InvalidArgument("coupler coupling must be negative in dB");
  if (!(insertion_loss_db <= 0.0)) throw InvalidArgument("coupler insertion loss must be <= 0 dB");
}

double CouplerParams::transmissivity() const {
  validate();
  return 1.0 - std::pow(10.0, coupling_db / 10.0);
}

double CouplerParams::efficiency() const {
  validate();
  return std::pow(10.0, insertion_loss_db / 10.0);
}

void DetectionChain::validate() const {
  if (!(gain_1 > 0.0) || !(gain_2 > 0.0)) throw InvalidArgument("detection gains must be positive");
  if (!(noise_photons_1 >= 0.0) || !(noise_photons_2 >= 0.0)) {
    throw InvalidArgument("detection noise occupations must be nonnegative");
  }
  if (!(gain_error > -1.0) || !std::isfinite(gain_error)) {
    throw InvalidArgument("gain error must be finite and greater than -1");
  }
}

std::string_view to_string(PhotonConversion mode) {
  return mode == PhotonConversion::kAtCoupledPort ? "at-coupled-port" : "at-signal-path";
}

PhotonConversion parse_photon_conversion(std::string_view text) {
  if (text == "at-coupled-port") return PhotonConversion::kAtCoupledPort;
  if (text == "at-signal-path") return PhotonConversion::kAtSignalPath;
  throw InvalidArgument("unknown photon conversion mode '" + std::string(text) + "'");
}

void RfContext::validate() const {
  if (!(carrier_frequency > 0.0) || !(bandwidth > 0.0)) {
    throw InvalidArgument("carrier frequency and bandwidth must be positive");
  }
}

GaussianState jpa_emit(const JpaParams& params) {
  params.validate();
  return squeeze(thermal(params.thermal_occupation), 0, params.squeeze);
}

double dbm_to_photon_rate(double power_dbm, const RfContext& ctx) {
  ctx.validate();
  if (std::isnan(power_dbm) || power_dbm == INFINITY) throw InvalidArgument("power must be finite or -inf");
  const double watts = std::pow(10.0, (power_dbm - 30.0) / 10.0);
  return watts / (kPlanckConstant * ctx.carrier_frequency);
}

double displacement_power_to_alpha(double power_dbm, const CouplerParams& coupler, const RfContext& ctx) {
  double photons = dbm_to_photon_rate(power_dbm, ctx) / ctx.bandwidth;
  if (ctx.conversion == PhotonConversion::kAtCoupledPort) {
    coupler.validate();
    photons *= std::pow(10.0, coupler.coupling_db / 10.0);
  }
  return std::sqrt(photons);
}

DisplacementParams tone_for_displacement(const DisplacementParams& effective, const CouplerParams& coupler) {
  const double reflectivity = 1.0 - coupler.transmissivity();
  return DisplacementParams(effective.magnitude / std::sqrt(reflectivity), effective.theta);
}

GaussianState coupler_displace(const GaussianState& signal, const DisplacementParams& tone,
                               const CouplerParams& params) {
  if (signal.num_modes() != 1) throw InvalidArgument("coupler acts on a single-mode signal");
  const GaussianState mixed =
      beam_splitter(tensor(signal, coherent(tone.amplitude())), 0, 1, params.transmissivity());
  return lossy_channel(mixed.reduced({0}), 0, params.efficiency());
}

GaussianState hybrid_ring_split(const GaussianState& signal) {
  if (signal.num_modes() != 1) throw InvalidArgument("hybrid ring acts on a single-mode signal");
  return beam_splitter(tensor(signal, vacuum(1)), 0, 1, 0.5);
}

}  // namespace dsq
