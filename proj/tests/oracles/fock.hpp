#pragma once

// Truncated Fock-space reference for single-mode Gaussian operations.
// Independent of the phase-space code: states are density matrices and
// operators are built from matrix exponentials of ladder operators.

#include <cmath>
#include <complex>

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>

namespace oracle {

using cd = std::complex<double>;
using Mat = Eigen::MatrixXcd;

inline Mat annihilation(int dim) {
  Mat a = Mat::Zero(dim, dim);
  for (int n = 1; n < dim; ++n) a(n - 1, n) = std::sqrt(static_cast<double>(n));
  return a;
}

/// exp((conj(xi) a^2 - xi a^dag^2) / 2), xi = r e^{i phi}.
inline Mat squeeze_op(int dim, double r, double phi) {
  const Mat a = annihilation(dim);
  const cd xi = std::polar(r, phi);
  const Mat gen = 0.5 * (std::conj(xi) * a * a - xi * a.adjoint() * a.adjoint());
  return gen.exp();
}

/// exp(alpha a^dag - conj(alpha) a).
inline Mat displace_op(int dim, cd alpha) {
  const Mat a = annihilation(dim);
  const Mat gen = alpha * a.adjoint() - std::conj(alpha) * a;
  return gen.exp();
}

inline Mat vacuum_dm(int dim) {
  Mat rho = Mat::Zero(dim, dim);
  rho(0, 0) = 1.0;
  return rho;
}

inline Mat thermal_dm(int dim, double n_mean) {
  Mat rho = Mat::Zero(dim, dim);
  if (n_mean == 0.0) return vacuum_dm(dim);
  const double x = n_mean / (1.0 + n_mean);
  for (int n = 0; n < dim; ++n) rho(n, n) = std::pow(x, n) / (1.0 + n_mean);
  return rho;
}

inline cd expect(const Mat& rho, const Mat& op) { return (rho * op).trace(); }

struct Moments {
  double mean_q, mean_p, var_q, var_p, cov_qp, photons;
};

/// Quadrature statistics with q = (a + a^dag)/2, p = (a - a^dag)/(2i).
inline Moments moments(const Mat& rho) {
  const int dim = static_cast<int>(rho.rows());
  const Mat a = annihilation(dim);
  const Mat q = 0.5 * (a + a.adjoint());
  const Mat p = cd(0.0, -0.5) * (a - a.adjoint());
  Moments m{};
  m.mean_q = expect(rho, q).real();
  m.mean_p = expect(rho, p).real();
  m.var_q = expect(rho, q * q).real() - m.mean_q * m.mean_q;
  m.var_p = expect(rho, p * p).real() - m.mean_p * m.mean_p;
  m.cov_qp = 0.5 * expect(rho, q * p + p * q).real() - m.mean_q * m.mean_p;
  m.photons = expect(rho, a.adjoint() * a).real();
  return m;
}

}  // namespace oracle
