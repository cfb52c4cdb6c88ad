#include <cmath>
#include <limits>
#include <numbers>

#include <gtest/gtest.h>

#include "dsq/devices.hpp"
#include "dsq/errors.hpp"

using namespace dsq;

namespace {
constexpr double kPi = std::numbers::pi;
}

TEST(Jpa, RepresentativeSettingGivesQuotedLevels) {
  const JpaParams jpa = JpaParams::representative();
  const GaussianState st = jpa_emit(jpa);
  const Eigen::Vector2d lambda = Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d>(st.cov()).eigenvalues();
  EXPECT_NEAR(-10.0 * std::log10(lambda(0) / 0.25), 6.4, 1e-12);
  EXPECT_NEAR(10.0 * std::log10(lambda(1) / 0.25), 9.9, 1e-12);
  EXPECT_NEAR(jpa.squeeze.gamma(), -3.0 * kPi / 4.0, 1e-12);
  // gamma is defined modulo pi: -135 deg and 45 deg name the same axis.
  EXPECT_NEAR(contour_ellipse(st).angle_from_p, kPi / 4.0, 1e-12);
  EXPECT_TRUE(st.is_physical());
}

TEST(Jpa, PureSqueezerWithoutThermalInput) {
  JpaParams jpa;
  jpa.squeeze = SqueezeParams(0.5, 0.0);
  EXPECT_NEAR(jpa_emit(jpa).cov().determinant(), 1.0 / 16.0, 1e-15);
  jpa.thermal_occupation = -0.1;
  EXPECT_THROW(jpa_emit(jpa), InvalidArgument);
}

TEST(Rf, PhotonRateFromPower) {
  const RfContext ctx;
  const double watts = 1e-3 * std::pow(10.0, -12.5);
  EXPECT_NEAR(dbm_to_photon_rate(-125.0, ctx) / (watts / (6.62607015e-34 * 5.573e9)), 1.0, 1e-14);
  EXPECT_EQ(dbm_to_photon_rate(-std::numeric_limits<double>::infinity(), ctx), 0.0);
  EXPECT_THROW(dbm_to_photon_rate(std::nan(""), ctx), InvalidArgument);
  EXPECT_THROW(dbm_to_photon_rate(std::numeric_limits<double>::infinity(), ctx), InvalidArgument);
  RfContext bad;
  bad.bandwidth = 0.0;
  EXPECT_THROW(dbm_to_photon_rate(-120.0, bad), InvalidArgument);
}

TEST(Rf, DisplacementPhotonsAtSweepEnd) {
  // -125 dBm over 400 kHz at 5.573 GHz is about 214 photons in the signal path.
  RfContext ctx;
  const CouplerParams coupler;
  const double n_signal = std::pow(displacement_power_to_alpha(-125.0, coupler, ctx), 2);
  EXPECT_NEAR(n_signal, 1e-3 * std::pow(10.0, -12.5) / (6.62607015e-34 * 5.573e9 * 4e5), 1e-9);
  EXPECT_GT(n_signal, 200.0);
  EXPECT_LT(n_signal, 230.0);
  ctx.conversion = PhotonConversion::kAtCoupledPort;
  EXPECT_NEAR(std::pow(displacement_power_to_alpha(-125.0, coupler, ctx), 2), n_signal * std::pow(10.0, -1.95), 1e-9);
  // A 30 dB sweep spans a factor 1000 in photon number.
  ctx.conversion = PhotonConversion::kAtSignalPath;
  EXPECT_NEAR(std::pow(displacement_power_to_alpha(-155.0, coupler, ctx), 2) * 1000.0, n_signal, 1e-9);
}

TEST(Rf, ConversionModeNames) {
  EXPECT_EQ(parse_photon_conversion("at-coupled-port"), PhotonConversion::kAtCoupledPort);
  EXPECT_EQ(to_string(parse_photon_conversion("at-signal-path")), "at-signal-path");
  EXPECT_THROW(parse_photon_conversion("signal"), InvalidArgument);
}

TEST(Coupler, Parameters) {
  const CouplerParams c;
  EXPECT_NEAR(c.transmissivity(), 1.0 - std::pow(10.0, -1.95), 1e-15);
  EXPECT_NEAR(c.efficiency(), std::pow(10.0, -0.018), 1e-15);
  EXPECT_THROW((CouplerParams{1.0, -0.1}.transmissivity()), InvalidArgument);
  EXPECT_THROW((CouplerParams{-20.0, 0.5}.efficiency()), InvalidArgument);
}

TEST(Coupler, DisplacesByTargetAmplitude) {
  const CouplerParams c;
  const DisplacementParams target(12.0, 3.0 * kPi / 4.0);
  const GaussianState out = coupler_displace(vacuum(1), tone_for_displacement(target, c), c);
  const double scale = std::sqrt(c.efficiency());
  EXPECT_NEAR(out.mean()(0), scale * 12.0 * std::sin(3.0 * kPi / 4.0), 1e-12);
  EXPECT_NEAR(out.mean()(1), scale * 12.0 * std::cos(3.0 * kPi / 4.0), 1e-12);
  // Coherent tone plus vacuum signal leaves vacuum noise.
  EXPECT_LE((out.cov() - vacuum(1).cov()).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(Coupler, FidelityAgainstIdealDisplacement) {
  const GaussianState sq = jpa_emit(JpaParams::representative());
  const DisplacementParams target(14.6, kPi / 4.0);
  const auto degradation = [&](const CouplerParams& c) {
    const GaussianState via = coupler_displace(sq, tone_for_displacement(target, c), c);
    const GaussianState ideal = lossy_channel(displace(sq, 0, target), 0, c.efficiency());
    return squeezing_level_db(ideal, 0) - squeezing_level_db(via, 0);
  };
  const double nominal = degradation(CouplerParams{});
  EXPECT_GT(nominal, 0.0);
  EXPECT_LT(nominal, 0.15);
  double previous = nominal;
  for (double coupling : {-30.0, -40.0, -50.0, -60.0}) {
    const double d = degradation(CouplerParams{coupling, -0.18});
    EXPECT_LT(d, previous);
    previous = d;
  }
  EXPECT_LT(previous, 1e-4);
}

TEST(Coupler, RejectsMultiModeSignal) {
  EXPECT_THROW(coupler_displace(vacuum(2), DisplacementParams(1.0, 0.0), CouplerParams{}), InvalidArgument);
  EXPECT_THROW(hybrid_ring_split(vacuum(2)), InvalidArgument);
}

TEST(HybridRing, SplitsInputEvenly) {
  const GaussianState in = displace(thermal(0.5), 0, DisplacementParams(2.0, 0.0));
  const GaussianState out = hybrid_ring_split(in);
  EXPECT_NEAR(out.mean()(0), std::sqrt(0.5) * in.mean()(0), 1e-15);
  EXPECT_NEAR(out.mean()(2), std::sqrt(0.5) * in.mean()(0), 1e-15);
  EXPECT_NEAR(photon_number(out, 0), 0.5 * photon_number(in, 0), 1e-12);
  EXPECT_NEAR(photon_number(out, 1), 0.5 * photon_number(in, 0), 1e-12);
  EXPECT_LE((hybrid_ring_split(vacuum(1)).cov() - vacuum(2).cov()).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(DetectionChain, AssumedGains) {
  DetectionChain ch{2.0, 3.0, 1.0, 1.0, 0.03};
  EXPECT_DOUBLE_EQ(ch.assumed_cross_gain(), std::sqrt(6.0) / 1.03);
  ch.gain_2 = 0.0;
  EXPECT_THROW(ch.validate(), InvalidArgument);
  EXPECT_THROW((DetectionChain{1, 1, -1, 0, 0}.validate()), InvalidArgument);
  EXPECT_THROW((DetectionChain{1, 1, 0, 0, -1}.validate()), InvalidArgument);
}
