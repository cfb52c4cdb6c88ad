#include "dsq/reconstruction.hpp"

#include <cmath>
#include <map>

#include "dsq/errors.hpp"

namespace dsq {
namespace {

using cd = std::complex<double>;

struct Gains {
  double g1;
  double g2;
  double cross;
};

Gains assumed_gains(const DetectionChain& chain) {
  const Gains g{chain.gain_1, chain.gain_2, chain.assumed_cross_gain()};
  if (!(g.cross > 0.0) || !std::isfinite(g.cross)) {
    throw InvalidArgument("assumed detection gains must be positive and finite");
  }
  return g;
}

// Gain factor of a path moment with k1 = n1 + m1 factors from path 1 and
// k2 = n2 + m2 from path 2: min(k1, k2) factor pairs are normalised by the
// cross-correlation gain, the rest by the single-path gains.
double gain_factor(const ModeExponent& e, const Gains& g) {
  const int k1 = e[0] + e[1];
  const int k2 = e[2] + e[3];
  const int m = std::min(k1, k2);
  return std::pow(g.g1, 0.5 * (k1 - m)) * std::pow(g.g2, 0.5 * (k2 - m)) * std::pow(g.cross, m);
}

// Expansion of <S1*^n1 S1^m1 S2*^n2 S2^m2> / gain into products of output
// moments t and noise moments H1, H2. Each path contributes
// (c^dag + h)^n (c + h^dag)^m, with the c factors normally ordered and the
// h factors anti-normally ordered (they commute with each other).
template <typename Fn>
void for_each_term(const ModeExponent& e, Fn&& fn) {
  for (int i1 = 0; i1 <= e[0]; ++i1)
    for (int j1 = 0; j1 <= e[1]; ++j1)
      for (int i2 = 0; i2 <= e[2]; ++i2)
        for (int j2 = 0; j2 <= e[3]; ++j2) {
          const double c = binomial(e[0], i1) * binomial(e[1], j1) * binomial(e[2], i2) * binomial(e[3], j2);
          fn(c, ModeExponent{i1, j1, i2, j2}, ModeExponent{e[0] - i1, e[1] - j1, 0, 0},
             ModeExponent{e[2] - i2, e[3] - j2, 0, 0});
        }
}

std::vector<ModeExponent> exponents_of_order(int num_modes, int order) {
  std::vector<ModeExponent> out;
  for (const auto& e : mode_exponents(num_modes, order)) {
    if (total_order(e) == order) out.push_back(e);
  }
  return out;
}

}  // namespace

DpmResult dpm_reconstruct_detailed(const RawMomentSet& moments, const DetectionChain& chain,
                                   const ReconstructionOptions& options) {
  chain.validate();
  const Gains gains = assumed_gains(chain);
  const int order_max = moments.max_order();
  if (order_max < 1) throw InvalidArgument("moment set must reach at least order 1");

  DpmResult result{SignalMomentSet(1, order_max), SignalMomentSet(1, order_max), SignalMomentSet(1, order_max), {}};
  auto& s = result.signal;
  auto& h1 = result.noise_1;
  auto& h2 = result.noise_2;

  const auto noise_value = [](const SignalMomentSet& h, const ModeExponent& e) -> cd {
    const int k = total_order(e);
    if (k == 0) return 1.0;
    if (k == 1) return 0.0;  // zero-mean noise
    return h.get(e);
  };

  for (int k = 1; k <= order_max; ++k) {
    // Unknowns: input-mode moments of order k, plus noise moments of order k for k >= 2.
    const auto sig_unknowns = exponents_of_order(1, k);
    const auto noise_unknowns = k >= 2 ? exponents_of_order(1, k) : std::vector<ModeExponent>{};
    std::map<ModeExponent, Eigen::Index> sig_col;
    std::map<ModeExponent, Eigen::Index> noise_col;
    Eigen::Index cols = 0;
    for (const auto& e : sig_unknowns) sig_col[e] = cols++;
    const Eigen::Index noise1_base = cols;
    for (const auto& e : noise_unknowns) noise_col[e] = cols++;
    const Eigen::Index noise2_base = cols;
    cols += static_cast<Eigen::Index>(noise_unknowns.size());

    const auto equations = exponents_of_order(2, k);
    const auto rows = static_cast<Eigen::Index>(equations.size());
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(rows, cols);
    Eigen::VectorXcd b(rows);
    double variance = 0.0;
    for (Eigen::Index r = 0; r < rows; ++r) {
      const auto& e = equations[r];
      const double gf = gain_factor(e, gains);
      cd rhs = moments.path_moment(e[0], e[1], e[2], e[3]) / gf;
      const double err = moments.path_moment_error(e[0], e[1], e[2], e[3]) / gf;
      variance += err * err;
      for_each_term(e, [&](double c, const ModeExponent& st, const ModeExponent& n1, const ModeExponent& n2) {
        // c1 = (a + v)/sqrt(2), c2 = (a - v)/sqrt(2) with v in vacuum: only
        // the pure-a part of the normally ordered output moment survives.
        const ModeExponent in{st[0] + st[2], st[1] + st[3], 0, 0};
        const double w = c * std::pow(2.0, -0.5 * total_order(st));
        const int os = total_order(in);
        const int o1 = total_order(n1);
        const int o2 = total_order(n2);
        if (os == k) {
          a(r, sig_col.at(in)) += w;
        } else if (o1 == k) {
          if (k >= 2) a(r, noise_col.at(n1)) += w;
        } else if (o2 == k) {
          if (k >= 2) a(r, noise2_base + (noise_col.at(n2) - noise1_base)) += w;
        } else {
          rhs -= w * s.get(in) * noise_value(h1, n1) * noise_value(h2, n2);
        }
      });
      b(r) = rhs;
    }

    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(a);
    if (qr.rank() < cols) {
      throw ReconstructionError("moment equations of order " + std::to_string(k) + " are rank deficient",
                                result.residuals);
    }
    const Eigen::VectorXcd x = qr.solve(b.real()).cast<cd>() + cd(0.0, 1.0) * qr.solve(b.imag()).cast<cd>();
    const double residual = (a.cast<cd>() * x - b).norm();
    result.residuals.push_back(residual);
    const double tolerance = options.exact_tolerance * std::max(1.0, b.norm()) +
                             options.residual_sigma * std::sqrt(variance);
    if (!(residual <= tolerance)) {
      throw ReconstructionError("order " + std::to_string(k) + " residual " + std::to_string(residual) +
                                    " exceeds tolerance " + std::to_string(tolerance),
                                result.residuals);
    }
    for (const auto& [e, c] : sig_col) s.set(e, x(c));
    for (const auto& [e, c] : noise_col) {
      h1.set(e, x(c));
      h2.set(e, x(noise2_base + (c - noise1_base)));
    }
  }
  // Noise means are zero by assumption.
  h1.set(1, 0, 0.0);
  h1.set(0, 1, 0.0);
  h2.set(1, 0, 0.0);
  h2.set(0, 1, 0.0);
  s.symmetrize();
  h1.symmetrize();
  h2.symmetrize();
  return result;
}

SignalMomentSet dpm_reconstruct(const RawMomentSet& moments, const DetectionChain& chain,
                                const ReconstructionOptions& options) {
  return dpm_reconstruct_detailed(moments, chain, options).signal;
}

SignalMomentSet rsm_reconstruct(const RawMomentSet& moments, const RawMomentSet& reference,
                                const DetectionChain& chain) {
  if (moments.max_order() != reference.max_order()) {
    throw InvalidArgument("signal and reference moment sets cover different orders");
  }
  chain.validate();
  const Gains gains = assumed_gains(chain);
  const int order_max = moments.max_order();

  SignalMomentSet h1(1, order_max);
  SignalMomentSet h2(1, order_max);
  for (const auto& e : mode_exponents(1, order_max)) {
    const double scale1 = std::pow(gains.g1, 0.5 * total_order(e));
    const double scale2 = std::pow(gains.g2, 0.5 * total_order(e));
    h1.set(e, reference.path_moment(e[0], e[1], 0, 0) / scale1);
    h2.set(e, reference.path_moment(0, 0, e[0], e[1]) / scale2);
  }

  SignalMomentSet t(2, order_max);
  for (const auto& e : mode_exponents(2, order_max)) {
    if (total_order(e) == 0) continue;
    cd value = moments.path_moment(e[0], e[1], e[2], e[3]) / gain_factor(e, gains);
    for_each_term(e, [&](double c, const ModeExponent& st, const ModeExponent& n1, const ModeExponent& n2) {
      if (st == e) return;
      value -= c * t.get(st) * h1.get(n1) * h2.get(n2);
    });
    t.set(e, value);
  }
  t.symmetrize();
  return t;
}

GaussianState moments_to_state(const SignalMomentSet& moments) {
  const int modes = moments.num_modes();
  if (moments.max_order() < 2) throw MalformedMoments("moment set must reach order 2");
  const auto require = [&](const ModeExponent& e) {
    if (!moments.contains(e)) throw MalformedMoments("missing moment " + exponent_key(e));
  };
  for (const auto& e : mode_exponents(modes, 2)) require(e);

  double scale = 1.0;
  for (const auto& [e, v] : moments.entries()) scale = std::max(scale, std::abs(v));
  if (moments.hermiticity_defect() > 1e-9 * scale) {
    throw MalformedMoments("moment set violates Hermiticity");
  }

  const SignalMomentSet c = moments.central();
  const auto dim = static_cast<Eigen::Index>(2 * modes);
  Eigen::VectorXd mean(dim);
  Eigen::MatrixXd cov(dim, dim);
  for (int m = 0; m < modes; ++m) {
    const ModeExponent ann = m == 0 ? ModeExponent{0, 1, 0, 0} : ModeExponent{0, 0, 0, 1};
    const ModeExponent aa = m == 0 ? ModeExponent{0, 2, 0, 0} : ModeExponent{0, 0, 0, 2};
    const ModeExponent num = m == 0 ? ModeExponent{1, 1, 0, 0} : ModeExponent{0, 0, 1, 1};
    const cd alpha = moments.get(ann);
    const cd c_aa = c.get(aa);
    const double c_n = c.get(num).real();
    const auto i = static_cast<Eigen::Index>(2 * m);
    mean(i) = alpha.real();
    mean(i + 1) = alpha.imag();
    cov(i, i) = (2.0 * c_aa.real() + 2.0 * c_n + 1.0) / 4.0;
    cov(i + 1, i + 1) = (-2.0 * c_aa.real() + 2.0 * c_n + 1.0) / 4.0;
    cov(i, i + 1) = cov(i + 1, i) = c_aa.imag() / 2.0;
  }
  if (modes == 2) {
    const cd c_ab = c.get(ModeExponent{0, 1, 0, 1});
    const cd c_adb = c.get(ModeExponent{1, 0, 0, 1});
    Eigen::Matrix2d cross;
    cross << (c_ab.real() + c_adb.real()) / 2.0, (c_ab.imag() + c_adb.imag()) / 2.0,
        (c_ab.imag() - c_adb.imag()) / 2.0, (c_adb.real() - c_ab.real()) / 2.0;
    cov.block<2, 2>(0, 2) = cross;
    cov.block<2, 2>(2, 0) = cross.transpose();
  }
  return GaussianState(mean, cov);
}

SignalMomentSet normal_ordered_moments(const GaussianState& state, int max_order) {
  const auto modes = static_cast<int>(state.num_modes());
  if (modes < 1 || modes > 2) throw InvalidArgument("normal_ordered_moments supports one or two modes");
  if (max_order < 1 || max_order > kMaxMomentOrder) throw InvalidArgument("moment order out of range");
  // Normally ordered moments are moments of the P function: a Gaussian with
  // the same mean and covariance reduced by the vacuum contribution.
  const auto dim = static_cast<Eigen::Index>(2 * modes);
  const Eigen::MatrixXd p_cov = state.cov() - kVacuumVariance * Eigen::MatrixXd::Identity(dim, dim);
  SignalMomentSet out(modes, max_order);
  for (const auto& e : mode_exponents(modes, max_order)) {
    std::vector<Eigen::VectorXcd> functionals;
    for (int m = 0; m < modes; ++m) {
      Eigen::VectorXcd create = Eigen::VectorXcd::Zero(dim);
      Eigen::VectorXcd annihilate = Eigen::VectorXcd::Zero(dim);
      create(2 * m) = 1.0;
      create(2 * m + 1) = cd(0.0, -1.0);
      annihilate(2 * m) = 1.0;
      annihilate(2 * m + 1) = cd(0.0, 1.0);
      for (int k = 0; k < e[2 * m]; ++k) functionals.push_back(create);
      for (int k = 0; k < e[2 * m + 1]; ++k) functionals.push_back(annihilate);
    }
    out.set(e, total_order(e) == 0 ? cd(1.0) : gaussian_product_moment(functionals, state.mean(), p_cov));
  }
  out.symmetrize();
  return out;
}

SignalMomentSet recombine_outputs(const SignalMomentSet& outputs) {
  if (outputs.num_modes() != 2) throw InvalidArgument("recombination needs a two-mode moment set");
  SignalMomentSet out(1, outputs.max_order());
  for (const auto& e : mode_exponents(1, outputs.max_order())) {
    const int n = e[0];
    const int m = e[1];
    cd sum = 0.0;
    for (int i = 0; i <= n; ++i)
      for (int j = 0; j <= m; ++j) {
        sum += binomial(n, i) * binomial(m, j) * outputs.get(ModeExponent{i, j, n - i, m - j});
      }
    out.set(e, sum * std::pow(2.0, -0.5 * (n + m)));
  }
  return out;
}

}  // namespace dsq
