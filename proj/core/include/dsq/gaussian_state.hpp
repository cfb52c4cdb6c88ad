#pragma once

#include <complex>
#include <string>
#include <string_view>
#include <cstddef>

#include <Eigen/Dense>

namespace dsq {

/// Variance of either quadrature of the vacuum. Quadratures are
/// q = (a + a^dag)/2 and p = (a - a^dag)/(2i), so [q, p] = i/2.
inline constexpr double kVacuumVariance = 0.25;

/// Squeezing amplitude xi = r exp(i phi) of S(xi) = exp(xi^* a^2/2 - xi a^dag^2/2).
struct SqueezeParams {
  SqueezeParams() = default;
  /// Throws InvalidArgument for r < 0 or non-finite input; phi is wrapped into [0, 2 pi).
  SqueezeParams(double r, double phi);

  /// Parameters giving `level_db` of squeezing with the anti-squeezed
  /// quadrature at angle `gamma` (radians) from the p-axis.
  static SqueezeParams from_level_db(double level_db, double gamma);

  double r = 0.0;
  double phi = 0.0;

  /// Angle between the anti-squeezed quadrature and the p-axis, -phi/2.
  double gamma() const noexcept { return -phi / 2.0; }
};

/// Displacement D(alpha) with |alpha| = magnitude and direction at angle
/// theta from the p-axis, i.e. (dq, dp) = magnitude * (sin theta, cos theta).
struct DisplacementParams {
  DisplacementParams() = default;
  DisplacementParams(double magnitude, double theta);

  static DisplacementParams from_amplitude(std::complex<double> alpha);

  double magnitude = 0.0;
  double theta = 0.0;

  /// alpha = <a> shift, alpha = dq + i dp.
  std::complex<double> amplitude() const noexcept;
};

/// Mean vector and covariance matrix of an n-mode Gaussian state in the
/// ordering (q1, p1, q2, p2, ...). Construction checks shape, finiteness
/// and symmetry; physicality is a separate query because reconstructed
/// states may legitimately violate it.
class GaussianState {
 public:
  GaussianState(Eigen::VectorXd mean, Eigen::MatrixXd cov);

  std::size_t num_modes() const noexcept { return static_cast<std::size_t>(mean_.size() / 2); }
  const Eigen::VectorXd& mean() const noexcept { return mean_; }
  const Eigen::MatrixXd& cov() const noexcept { return cov_; }

  Eigen::Vector2d mode_mean(std::size_t mode) const;
  Eigen::Matrix2d mode_cov(std::size_t mode) const;

  /// Marginal state of the listed modes, in the given order.
  GaussianState reduced(std::initializer_list<std::size_t> modes) const;

  /// Smallest eigenvalue of the Hermitian matrix cov + (i/4) Omega.
  double uncertainty_margin() const;
  bool is_physical(double tolerance = 1e-10) const;
  /// Throws UnphysicalState when is_physical(tolerance) is false.
  void require_physical(double tolerance = 1e-10) const;

 private:
  Eigen::VectorXd mean_;
  Eigen::MatrixXd cov_;
};

GaussianState tensor(const GaussianState& a, const GaussianState& b);

GaussianState vacuum(std::size_t num_modes);
GaussianState thermal(double n_mean);
GaussianState coherent(std::complex<double> alpha);

/// Block-diagonal symplectic form with [[0, 1], [-1, 0]] per mode.
Eigen::MatrixXd symplectic_form(std::size_t num_modes);

/// Heisenberg-picture action of S(xi) on (q, p).
Eigen::Matrix2d squeeze_symplectic(const SqueezeParams& params);

/// Two-mode splitter a' = t a + r b, b' = r a - t b with t = sqrt(T).
Eigen::Matrix4d beam_splitter_symplectic(double transmissivity);

GaussianState squeeze(const GaussianState& state, std::size_t mode, const SqueezeParams& params);

/// Shifts the mean only; the covariance is copied unchanged.
GaussianState displace(const GaussianState& state, std::size_t mode, const DisplacementParams& params);

GaussianState beam_splitter(const GaussianState& state, std::size_t mode_a, std::size_t mode_b,
                            double transmissivity);

/// Pure-loss channel: mixing with vacuum at transmissivity `efficiency`.
GaussianState lossy_channel(const GaussianState& state, std::size_t mode, double efficiency);

/// -10 log10(lambda_min / 0.25) of the mode's 2x2 covariance block.
double squeezing_level_db(const GaussianState& state, std::size_t mode);

/// <a^dag a> of the mode.
double photon_number(const GaussianState& state, std::size_t mode);

struct NegativityResult {
  double negativity = 0.0;
  /// Smallest symplectic eigenvalue of the partially transposed state,
  /// vacuum normalised to 1.
  double nu = 0.0;
  /// Same for the untransposed state; >= 1 for physical states.
  double nu_untransposed = 0.0;
};

/// Logarithm-free negativity max{0, (1 - nu)/(2 nu)} of a two-mode state.
/// The blocks are rescaled by 1/kVacuumVariance so the vacuum is the
/// identity before the determinant formula is applied.
NegativityResult negativity_details(const GaussianState& state, double tolerance = 1e-9);
double negativity(const GaussianState& state, double tolerance = 1e-9);

/// Two-mode covariance of a squeezed vacuum split 50:50 with vacuum, in
/// closed form with vacuum normalised to the identity:
///   alpha = beta = [[A- + 1, B], [B, A+ + 1]] / 2,
///   gamma        = [[A- - 1, B], [B, A+ - 1]] / 2,
///   A+- = e^{+-2r} cos^2(phi/2) + e^{-+2r} sin^2(phi/2),  B = -sinh(2r) sin(phi).
Eigen::Matrix4d closed_form_split_covariance(double r, double phi);

/// JSON with row-major "mean" and "cov" arrays and a "convention":
/// "vacuum-0.25" tag.
std::string to_json(const GaussianState& state);
GaussianState gaussian_state_from_json(std::string_view text);

// Wigner function ---------------------------------------------------------

struct WignerGrid {
  double q_min = 0.0;
  double q_max = 0.0;
  double p_min = 0.0;
  double p_max = 0.0;
  /// values(i, j) is W at p = p_i (row), q = q_j (column), both ascending.
  Eigen::MatrixXd values;

  std::size_t resolution() const noexcept { return static_cast<std::size_t>(values.rows()); }
  double q_at(std::size_t j) const;
  double p_at(std::size_t i) const;
  /// Riemann-sum integral of the grid.
  double integral() const;
};

/// 1/e contour of the Wigner function of a single mode.
struct ContourEllipse {
  double center_q = 0.0;
  double center_p = 0.0;
  double semi_major = 0.0;
  double semi_minor = 0.0;
  /// Angle of the major axis from the p-axis towards +q, in [0, pi).
  double angle_from_p = 0.0;
};

double wigner_value(const GaussianState& state, double q, double p);

WignerGrid wigner_grid(const GaussianState& state, double q_min, double q_max, double p_min, double p_max,
                       std::size_t resolution);

ContourEllipse contour_ellipse(const GaussianState& state);

}  // namespace dsq
