#pragma once

#include <complex>
#include <span>
#include <string>
#include <vector>

#include "dsq/detection.hpp"
#include "dsq/moments.hpp"

namespace dsq {

struct HeisenbergReport {
  bool pass = false;
  bool hermitian = false;
  /// Smallest eigenvalue of the full moment matrix.
  double min_eigenvalue = 0.0;
  /// Smallest eigenvalue of the sub-matrix spanned by 1, a, a^dag (and b, b^dag).
  double min_eigenvalue_order2 = 0.0;
  /// Jackknife standard error of min_eigenvalue; zero without replicates.
  double min_eigenvalue_error = 0.0;
  std::string reason;
};

/// Positivity of <B_i^dag B_j> over the operator basis up to degree two,
/// built from central moments. Needs a complete order-4 set.
/// Passes when the matrix is Hermitian and its smallest eigenvalue is at
/// least -tolerance * max(1, max |M_ij|).
HeisenbergReport heisenberg_check(const SignalMomentSet& moments, double tolerance = 1e-9);

/// Statistical variant: the smallest eigenvalue may be negative by at most
/// k_sigma jackknife standard errors computed from leave-one-out replicates.
HeisenbergReport heisenberg_check(const SignalMomentSet& moments, std::span<const SignalMomentSet> replicates,
                                  double k_sigma = 3.0);

/// Operator word letter: creation or annihilation on mode 0 or 1.
struct Letter {
  int mode = 0;
  bool creation = false;
  bool operator==(const Letter&) const = default;
};

/// Normally ordered expansion of a word as exponent -> coefficient.
std::vector<std::pair<ModeExponent, double>> normal_order(std::span<const Letter> word);

struct Cumulant {
  /// Multiplicity of each variable. For signal sets the variables are
  /// (a^dag, a, b^dag, b); for quadrature data (I1, I2, Q1, Q2).
  std::array<int, 4> exponent{};
  std::complex<double> value;
  double standard_error = 0.0;
};

struct GaussianityOptions {
  double k_sigma = 5.0;
  /// Absolute allowance, scaled by the largest moment magnitude.
  double exact_tolerance = 1e-10;
  /// Block count used when a quadrature batch is split for the jackknife.
  std::size_t n_blocks = 16;
};

struct GaussianityReport {
  bool pass = false;
  std::vector<Cumulant> cumulants;
  /// Largest |kappa| / (k_sigma SE + allowance) over all cumulants.
  double worst_ratio = 0.0;
};

/// Third- and fourth-order cumulants of a normally ordered moment set,
/// treated as moments of commuting P-function variables. Without
/// replicates the set is taken as exact.
GaussianityReport gaussianity_check(const SignalMomentSet& moments, const GaussianityOptions& options = {});
GaussianityReport gaussianity_check(const SignalMomentSet& moments, std::span<const SignalMomentSet> replicates,
                                    const GaussianityOptions& options = {});

/// Cumulants of the quadrature data, with jackknife errors over blocks.
GaussianityReport gaussianity_check(std::span<const RawMomentSet> blocks, const GaussianityOptions& options = {});
GaussianityReport gaussianity_check(const QuadratureBatch& batch, const GaussianityOptions& options = {});

/// Leave-one-out jackknife standard error of a scalar estimator.
double jackknife_error(std::span<const double> replicates);
double jackknife_error(std::span<const std::complex<double>> replicates);

/// Leave-one-out pooled sets: element i merges every block except block i.
std::vector<RawMomentSet> leave_one_out(std::span<const RawMomentSet> blocks);

}  // namespace dsq
