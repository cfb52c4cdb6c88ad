#include <cmath>
#include <limits>
#include <numbers>
#include <ostream>
#include <string>

#include "dsq/calibration.hpp"
#include "dsq/detection.hpp"
#include "dsq/harness.hpp"
#include "dsq/physicality.hpp"
#include "dsq/reconstruction.hpp"

namespace dsq {
namespace {

class Suite {
 public:
  explicit Suite(std::ostream& log) : log_(log) {}

  template <typename Fn>
  void run(const std::string& name, Fn&& fn) {
    std::string detail;
    bool ok = false;
    try {
      ok = fn(detail);
    } catch (const std::exception& e) {
      detail = std::string("threw: ") + e.what();
    }
    log_ << (ok ? "PASS " : "FAIL ") << name;
    if (!detail.empty()) log_ << "  (" << detail << ")";
    log_ << '\n';
    if (!ok) ++failures_;
  }

  int failures() const { return failures_; }

 private:
  std::ostream& log_;
  int failures_ = 0;
};

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

}  // namespace

int run_selftest(std::ostream& log) {
  Suite suite(log);
  const ExperimentConfig config = ExperimentConfig::defaults();
  const double pi = std::numbers::pi;

  suite.run("displacement invariance", [&](std::string& detail) {
    const GaussianState base = sweep_point_state(config, -std::numeric_limits<double>::infinity(), 45.0);
    const double s0 = squeezing_level_db(base, 0);
    const double n0 = negativity(hybrid_ring_split(base));
    double worst = 0.0;
    for (double theta : {45.0, 135.0}) {
      for (int p = -155; p <= -125; p += 5) {
        const GaussianState st = sweep_point_state(config, p, theta);
        worst = std::max({worst, std::abs(squeezing_level_db(st, 0) - s0),
                          std::abs(negativity(hybrid_ring_split(st)) - n0)});
      }
    }
    detail = "max deviation " + num(worst);
    return worst <= 1e-12;
  });

  suite.run("closed-form split covariance", [&](std::string& detail) {
    double worst = 0.0;
    for (int i = 0; i < 20; ++i) {
      for (int j = 0; j < 20; ++j) {
        const double r = 1.5 * i / 19.0;
        const double phi = 2.0 * pi * j / 20.0;
        const GaussianState split = hybrid_ring_split(squeeze(vacuum(1), 0, SqueezeParams(r, phi)));
        const Eigen::Matrix4d composed = split.cov() / kVacuumVariance;
        worst = std::max(worst, (composed - closed_form_split_covariance(r, phi)).cwiseAbs().maxCoeff());
      }
    }
    detail = "max error " + num(worst);
    return worst <= 1e-12;
  });

  suite.run("split squeezed vacuum negativity", [&](std::string& detail) {
    double worst = 0.0;
    for (double r : {0.0, 0.25, 0.5, 1.0}) {
      const auto res = negativity_details(hybrid_ring_split(squeeze(vacuum(1), 0, SqueezeParams(r, 0.0))));
      worst = std::max({worst, std::abs(res.nu - std::exp(-r)),
                        std::abs(res.negativity - std::max(0.0, (std::exp(r) - 1.0) / 2.0))});
    }
    detail = "max error " + num(worst);
    return worst <= 1e-12;
  });

  suite.run("symplectic matrices preserve the symplectic form", [&](std::string& detail) {
    double worst = 0.0;
    const Eigen::MatrixXd w1 = symplectic_form(1);
    const Eigen::MatrixXd w2 = symplectic_form(2);
    for (double r : {0.0, 0.3, 1.2}) {
      for (double phi : {0.0, 1.0, 4.0}) {
        const Eigen::Matrix2d s = squeeze_symplectic(SqueezeParams(r, phi));
        worst = std::max(worst, (s * w1 * s.transpose() - w1).cwiseAbs().maxCoeff());
      }
    }
    for (double t : {0.0, 0.25, 0.5, 0.99}) {
      const Eigen::Matrix4d b = beam_splitter_symplectic(t);
      worst = std::max(worst, (b * w2 * b.transpose() - w2).cwiseAbs().maxCoeff());
    }
    detail = "max error " + num(worst);
    return worst <= 1e-12;
  });

  suite.run("coupler displacement fidelity", [&](std::string& detail) {
    const GaussianState sq = jpa_emit(config.jpa);
    const DisplacementParams target(15.0, 0.75 * pi);
    const auto degradation = [&](const CouplerParams& c) {
      const GaussianState via = coupler_displace(sq, tone_for_displacement(target, c), c);
      const GaussianState ideal = lossy_channel(displace(sq, 0, target), 0, c.efficiency());
      return squeezing_level_db(ideal, 0) - squeezing_level_db(via, 0);
    };
    const double nominal = degradation(config.coupler);
    const double weak = degradation(CouplerParams{-60.0, config.coupler.insertion_loss_db});
    detail = "degradation " + num(nominal) + " dB, at -60 dB " + num(weak) + " dB";
    return nominal >= 0.0 && nominal < 0.15 && std::abs(weak) < 1e-4;
  });

  const GaussianState probe = sweep_point_state(config, -125.0, 135.0);
  DetectionChain chain = config.chain;
  chain.gain_1 = 2.5;
  chain.gain_2 = 0.7;

  suite.run("dual-path inversion of exact moments", [&](std::string& detail) {
    const auto res = dpm_reconstruct_detailed(expected_raw_moments(probe, chain), chain);
    double worst_res = 0.0;
    for (double r : res.residuals) worst_res = std::max(worst_res, r);
    const GaussianState back = moments_to_state(res.signal);
    const double err = std::max((back.cov() - probe.cov()).cwiseAbs().maxCoeff(),
                                (back.mean() - probe.mean()).cwiseAbs().maxCoeff());
    detail = "residual " + num(worst_res) + ", state error " + num(err);
    return worst_res <= 1e-10 && err <= 1e-9;
  });

  suite.run("reference-state inversion of exact moments", [&](std::string& detail) {
    const auto moments = rsm_reconstruct(expected_raw_moments(probe, chain), expected_raw_moments(vacuum(1), chain), chain);
    const GaussianState truth = hybrid_ring_split(probe);
    const double err = (moments_to_state(moments).cov() - truth.cov()).cwiseAbs().maxCoeff();
    detail = "covariance error " + num(err);
    return err <= 1e-10;
  });

  suite.run("Heisenberg check on exact and doctored moments", [&](std::string& detail) {
    const SignalMomentSet good = normal_ordered_moments(probe);
    SignalMomentSet bad = normal_ordered_moments(vacuum(1));
    bad.set(1, 1, -0.1);
    const bool ok = heisenberg_check(good).pass && heisenberg_check(normal_ordered_moments(hybrid_ring_split(probe))).pass &&
                    !heisenberg_check(bad).pass;
    detail = ok ? "" : "unexpected verdict";
    return ok;
  });

  suite.run("Gaussianity of exact moments", [&](std::string& detail) {
    const auto report = gaussianity_check(normal_ordered_moments(hybrid_ring_split(probe)));
    double worst = 0.0;
    for (const auto& c : report.cumulants) worst = std::max(worst, std::abs(c.value));
    detail = "max |cumulant| " + num(worst);
    return report.pass;
  });

  suite.run("calibration fit on noise-free data", [&](std::string& detail) {
    const auto temps = default_calibration_temperatures();
    const auto fit = fit_gain_noise(simulate_sweep(1e7, 12.0, temps, config.rf.carrier_frequency, 0, 0));
    const double err = std::max(std::abs(fit.total_gain / 1e7 - 1.0), std::abs(fit.noise_photons / 12.0 - 1.0));
    detail = "relative error " + num(err);
    return err <= 1e-10 && fit.fit_residual <= 1e-10;
  });

  suite.run("Planck occupation identity", [&](std::string& detail) {
    const double f = config.rf.carrier_frequency;
    const double t = kPlanckConstant * f / (kBoltzmannConstant * std::log(2.0));
    const double err = std::abs(planck_occupation(t, f) - 1.0);
    detail = "error " + num(err);
    return err <= 1e-12;
  });

  return suite.failures();
}

}  // namespace dsq
