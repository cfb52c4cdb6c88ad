#include <cmath>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "dsq/detection.hpp"
#include "dsq/errors.hpp"
#include "dsq/physicality.hpp"
#include "dsq/reconstruction.hpp"
#include "oracles/fock.hpp"

using namespace dsq;
using cd = std::complex<double>;

namespace {

constexpr double kPi = std::numbers::pi;

GaussianState displaced_squeezed(double r, double phi, double n_th, cd alpha) {
  return displace(squeeze(thermal(n_th), 0, SqueezeParams(r, phi)), 0, DisplacementParams::from_amplitude(alpha));
}

double max_abs_diff(const SignalMomentSet& a, const SignalMomentSet& b) {
  double worst = 0.0;
  for (const auto& [e, v] : b.entries()) worst = std::max(worst, std::abs(a.get(e) - v));
  return worst;
}

std::vector<RawMomentSet> sample_blocks(const GaussianState& in, const DetectionChain& chain, std::uint64_t n,
                                        std::uint64_t seed, std::size_t blocks) {
  std::vector<RawMomentSet> out;
  for (const auto& acc : simulate_moment_blocks(in, chain, n, seed, blocks)) out.push_back(acc.finalize());
  return out;
}

RawMomentSet pooled(const std::vector<RawMomentSet>& blocks) {
  RawMomentSet full = blocks.front();
  for (std::size_t i = 1; i < blocks.size(); ++i) full = RawMomentSet::merge(full, blocks[i]);
  return full;
}

}  // namespace

TEST(NormalOrderedMoments, MatchFockOracle) {
  const double r = 0.35, phi = 1.9, n_th = 0.2;
  const cd alpha(0.8, -1.1);
  const SignalMomentSet m = normal_ordered_moments(displaced_squeezed(r, phi, n_th, alpha));
  const int dim = 90;
  const oracle::Mat u = oracle::displace_op(dim, alpha) * oracle::squeeze_op(dim, r, phi);
  const oracle::Mat rho = u * oracle::thermal_dm(dim, n_th) * u.adjoint();
  const oracle::Mat a = oracle::annihilation(dim);
  const oracle::Mat ad = a.adjoint();
  for (const auto& e : mode_exponents(1, 4)) {
    oracle::Mat op = oracle::Mat::Identity(dim, dim);
    for (int k = 0; k < e[0]; ++k) op = op * ad;
    for (int k = 0; k < e[1]; ++k) op = op * a;
    EXPECT_NEAR(std::abs(m.get(e) - oracle::expect(rho, op)), 0.0, 1e-8) << exponent_key(std::span(e.data(), 2));
  }
}

TEST(Dpm, ExactInverseForAnyChain) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 25; ++trial) {
    const GaussianState in =
        displaced_squeezed(u(rng), 2 * kPi * u(rng), 0.5 * u(rng), std::polar(3.0 * u(rng), 2 * kPi * u(rng)));
    const DetectionChain chain{std::pow(10.0, 4 * u(rng) - 1), std::pow(10.0, 4 * u(rng) - 1), 20 * u(rng),
                               20 * u(rng), 0.0};
    const DpmResult res = dpm_reconstruct_detailed(expected_raw_moments(in, chain), chain);
    ASSERT_EQ(res.residuals.size(), 4u);
    for (double r : res.residuals) EXPECT_LE(r, 1e-10) << "trial " << trial;
    const SignalMomentSet truth = normal_ordered_moments(in);
    EXPECT_LE(max_abs_diff(res.signal, truth), 1e-9 * std::max(1.0, std::abs(truth.get(2, 2))));
    // Recovered noise is the anti-normally ordered thermal moment <h h^dag> = N + 1.
    EXPECT_NEAR(res.noise_1.get(1, 1).real(), chain.noise_photons_1 + 1.0, 1e-9);
    EXPECT_NEAR(res.noise_2.get(2, 2).real(), 2.0 * std::pow(chain.noise_photons_2 + 1.0, 2), 1e-7);
  }
}

TEST(Dpm, NoiselessChainRecoversLowOrderMoments) {
  const double r = 0.5, phi = 0.8;
  const cd alpha(1.2, -0.4);
  const DetectionChain chain;
  const SignalMomentSet s = dpm_reconstruct(expected_raw_moments(displaced_squeezed(r, phi, 0.0, alpha), chain), chain);
  EXPECT_NEAR(std::abs(s.get(0, 1) - alpha), 0.0, 1e-10);
  EXPECT_NEAR(std::abs(s.get(1, 1) - (std::norm(alpha) + std::pow(std::sinh(r), 2))), 0.0, 1e-10);
  const cd a2 = alpha * alpha - std::polar(1.0, phi) * std::sinh(r) * std::cosh(r);
  EXPECT_NEAR(std::abs(s.get(0, 2) - a2), 0.0, 1e-10);
}

TEST(Dpm, VacuumInputGivesVanishingSignalMoments) {
  const DetectionChain chain{1.0, 1.0, 10.0, 10.0, 0.0};
  const auto blocks = sample_blocks(vacuum(1), chain, 400'000, 8, 16);
  const SignalMomentSet full = dpm_reconstruct(pooled(blocks), chain);
  std::vector<SignalMomentSet> reps;
  for (const auto& loo : leave_one_out(blocks)) reps.push_back(dpm_reconstruct(loo, chain));
  for (const ModeExponent e : {ModeExponent{0, 1, 0, 0}, ModeExponent{1, 1, 0, 0}, ModeExponent{0, 2, 0, 0}}) {
    std::vector<cd> values;
    for (const auto& r : reps) values.push_back(r.get(e));
    EXPECT_LE(std::abs(full.get(e)), 4.0 * jackknife_error(values)) << exponent_key(e);
  }
}

TEST(Dpm, ZeroGainIsRejected) {
  const auto m = expected_raw_moments(vacuum(1), DetectionChain{});
  EXPECT_THROW(dpm_reconstruct(m, DetectionChain{0.0, 1.0, 0, 0, 0}), InvalidArgument);
  EXPECT_THROW(dpm_reconstruct(m, DetectionChain{1.0, 1.0, 0, 0, -1.0}), InvalidArgument);
}

TEST(Dpm, InconsistentMomentsReportResiduals) {
  const DetectionChain chain{1.0, 1.0, 2.0, 2.0, 0.0};
  const RawMomentSet good = expected_raw_moments(vacuum(1), chain);
  std::vector<double> values(good.means().begin(), good.means().end());
  // <I1 Q2> - <Q1 I2> is the imaginary part of <S1^* S2>, which no input state can produce.
  values[raw_index({1, 0, 0, 1})] += 1.0;
  try {
    dpm_reconstruct(RawMomentSet::exact(4, values), chain);
    FAIL() << "expected a reconstruction failure";
  } catch (const ReconstructionError& e) {
    ASSERT_EQ(e.residuals().size(), 2u);
    EXPECT_LE(e.residuals()[0], 1e-10);
    EXPECT_GT(e.residuals()[1], 0.1);
  }
}

TEST(Rsm, ExactInverseGivesSplitState) {
  const DetectionChain chain{2.0, 0.5, 7.0, 3.0, 0.0};
  const GaussianState in = displaced_squeezed(0.9, 3 * kPi / 2, 0.25, cd(2.0, 1.0));
  const SignalMomentSet t =
      rsm_reconstruct(expected_raw_moments(in, chain), expected_raw_moments(vacuum(1), chain), chain);
  const GaussianState split = hybrid_ring_split(in);
  const GaussianState back = moments_to_state(t);
  EXPECT_LE((back.cov() - split.cov()).cwiseAbs().maxCoeff(), 1e-10);
  EXPECT_LE((back.mean() - split.mean()).cwiseAbs().maxCoeff(), 1e-10);
  EXPECT_LE(max_abs_diff(t, normal_ordered_moments(split)), 1e-9);
  // Recombining the outputs gives the input field.
  EXPECT_LE(max_abs_diff(recombine_outputs(t), normal_ordered_moments(in)), 1e-9);
}

TEST(Rsm, SelfReferenceGivesVacuumMarginals) {
  const DetectionChain chain{1.0, 1.0, 3.0, 3.0, 0.0};
  const RawMomentSet m = accumulate_moments(simulate_detection(vacuum(1), chain, 20'000, 2));
  const GaussianState st = moments_to_state(rsm_reconstruct(m, m, chain));
  EXPECT_LE((st.mode_cov(0) - vacuum(1).cov()).cwiseAbs().maxCoeff(), 1e-10);
  EXPECT_LE((st.mode_cov(1) - vacuum(1).cov()).cwiseAbs().maxCoeff(), 1e-10);
  EXPECT_LE(st.mean().cwiseAbs().maxCoeff(), 1e-10);
  // Cross correlations of the noise only factorise on average.
  EXPECT_LE(st.cov().topRightCorner(2, 2).cwiseAbs().maxCoeff(), 0.1);
}

TEST(Rsm, OrderCoverageMismatch) {
  const DetectionChain chain;
  EXPECT_THROW(rsm_reconstruct(expected_raw_moments(vacuum(1), chain, 4), expected_raw_moments(vacuum(1), chain, 2), chain),
               InvalidArgument);
}

TEST(MomentsToState, VacuumAndDisplacedSqueezed) {
  const GaussianState v = moments_to_state(normal_ordered_moments(vacuum(1)));
  EXPECT_LE((v.cov() - vacuum(1).cov()).cwiseAbs().maxCoeff(), 1e-15);

  // <a> = 2i, <a^dag a> = 4 + sinh^2 r, <a^2> = -4 - e^{i phi} sinh r cosh r.
  const double r = 0.3, phi = 0.6;
  SignalMomentSet s(1, 2);
  s.set(0, 1, cd(0.0, 2.0));
  s.set(1, 0, cd(0.0, -2.0));
  s.set(1, 1, 4.0 + std::pow(std::sinh(r), 2));
  const cd a2 = cd(-4.0, 0.0) - std::polar(std::sinh(r) * std::cosh(r), phi);
  s.set(0, 2, a2);
  s.set(2, 0, std::conj(a2));
  const GaussianState st = moments_to_state(s);
  const GaussianState expected =
      displace(squeeze(vacuum(1), 0, SqueezeParams(r, phi)), 0, DisplacementParams::from_amplitude(cd(0.0, 2.0)));
  EXPECT_LE((st.cov() - expected.cov()).cwiseAbs().maxCoeff(), 1e-14);
  EXPECT_LE((st.mean() - expected.mean()).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(MomentsToState, MalformedSets) {
  SignalMomentSet missing(1, 2);
  missing.set(0, 1, 0.0);
  missing.set(1, 0, 0.0);
  EXPECT_THROW(moments_to_state(missing), MalformedMoments);
  SignalMomentSet broken = normal_ordered_moments(vacuum(1), 2);
  broken.set(0, 2, cd(0.1, 0.0));
  broken.set(2, 0, cd(0.3, 0.0));
  EXPECT_THROW(moments_to_state(broken), MalformedMoments);
  EXPECT_THROW(moments_to_state(SignalMomentSet(1, 1)), MalformedMoments);
}

TEST(MonteCarlo, ReconstructedCovarianceWithinThreeStandardErrors) {
  const DetectionChain chain{1.0, 1.0, 10.0, 10.0, 0.0};
  const GaussianState in = jpa_emit(JpaParams::representative());
  const auto blocks = sample_blocks(in, chain, 1'000'000, 31, 16);
  const GaussianState full = moments_to_state(dpm_reconstruct(pooled(blocks), chain));
  std::vector<GaussianState> reps;
  for (const auto& loo : leave_one_out(blocks)) reps.push_back(moments_to_state(dpm_reconstruct(loo, chain)));
  for (const auto [i, j] : {std::pair{0, 0}, std::pair{1, 1}, std::pair{0, 1}}) {
    std::vector<double> values;
    for (const auto& r : reps) values.push_back(r.cov()(i, j));
    EXPECT_NEAR(full.cov()(i, j), in.cov()(i, j), 3.0 * jackknife_error(values)) << i << j;
  }
}

TEST(MonteCarlo, ReconstructedSetsAreHermitian) {
  const DetectionChain chain{1.0, 2.0, 4.0, 6.0, 0.0};
  const GaussianState in = displaced_squeezed(0.6, 1.0, 0.1, cd(1.0, 1.0));
  const RawMomentSet m = accumulate_moments(simulate_detection(in, chain, 50'000, 6));
  const RawMomentSet ref = accumulate_moments(simulate_detection(vacuum(1), chain, 50'000, 7));
  for (const SignalMomentSet& s : {dpm_reconstruct(m, chain), rsm_reconstruct(m, ref, chain)}) {
    for (const auto& [e, v] : s.entries()) {
      const ModeExponent dag{e[1], e[0], e[3], e[2]};
      EXPECT_EQ(v, std::conj(s.get(dag)));
    }
  }
}

TEST(MonteCarlo, StandardErrorsScaleAsInverseSquareRoot) {
  const DetectionChain chain{1.0, 1.0, 10.0, 10.0, 0.0};
  const GaussianState in = jpa_emit(JpaParams::representative());
  const std::vector<std::uint64_t> sizes{10'000, 100'000, 1'000'000};
  std::vector<double> log_n, log_se;
  for (std::uint64_t n : sizes) {
    double mean_se = 0.0;
    for (std::uint64_t seed = 0; seed < 4; ++seed) {
      const auto blocks = sample_blocks(in, chain, n, 1000 + seed, 64);
      std::vector<double> occupation, squeeze_re;
      for (const auto& loo : leave_one_out(blocks)) {
        const SignalMomentSet s = dpm_reconstruct(loo, chain);
        occupation.push_back(s.get(1, 1).real());
        squeeze_re.push_back(s.get(0, 2).imag());
      }
      mean_se += 0.5 * (jackknife_error(occupation) + jackknife_error(squeeze_re)) / 4.0;
    }
    log_n.push_back(std::log(static_cast<double>(n)));
    log_se.push_back(std::log(mean_se));
  }
  const double xm = (log_n[0] + log_n[1] + log_n[2]) / 3.0;
  const double ym = (log_se[0] + log_se[1] + log_se[2]) / 3.0;
  double sxy = 0.0, sxx = 0.0;
  for (int i = 0; i < 3; ++i) {
    sxy += (log_n[i] - xm) * (log_se[i] - ym);
    sxx += (log_n[i] - xm) * (log_n[i] - xm);
  }
  EXPECT_NEAR(sxy / sxx, -0.5, 0.05);
}

TEST(GainError, DegradationGrowsWithPhotonNumber) {
  const GaussianState sq = jpa_emit(JpaParams::representative());
  const double truth = squeezing_level_db(sq, 0);
  const auto error_at = [&](double photons, double eps, double theta) {
    const DetectionChain sim{1.0, 1.0, 10.0, 10.0, 0.0};
    DetectionChain assumed = sim;
    assumed.gain_error = eps;
    const GaussianState in = displace(sq, 0, DisplacementParams(std::sqrt(photons), theta));
    const SignalMomentSet s = dpm_reconstruct(expected_raw_moments(in, sim), assumed, ReconstructionOptions{10.0, 1e300});
    return truth - squeezing_level_db(moments_to_state(s), 0);
  };
  // Displacement along the squeezed quadrature.
  double previous = error_at(0.0, 0.03, 3.0 * kPi / 4.0);
  for (double n : {0.5, 2.0, 10.0, 50.0, 200.0}) {
    const double e = error_at(n, 0.03, 3.0 * kPi / 4.0);
    EXPECT_GT(e, previous) << n;
    previous = e;
  }
  EXPECT_GT(error_at(50.0, 0.03, 3.0 * kPi / 4.0), error_at(50.0, 0.003, 3.0 * kPi / 4.0));
  EXPECT_GT(error_at(50.0, 0.003, 3.0 * kPi / 4.0), error_at(50.0, 0.0003, 3.0 * kPi / 4.0));
  EXPECT_NEAR(error_at(200.0, 0.0, 3.0 * kPi / 4.0), 0.0, 1e-9);
  // Along the anti-squeezed quadrature only the undisplaced offset remains.
  EXPECT_NEAR(error_at(200.0, 0.03, kPi / 4.0), error_at(0.0, 0.03, kPi / 4.0), 1e-6);
}
