#include "dsq/gaussian_state.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include <Eigen/Eigenvalues>

#include "dsq/errors.hpp"
#include "json.hpp"

namespace dsq {
namespace {

constexpr double kSymmetryTolerance = 1e-12;

void check_mode(const GaussianState& state, std::size_t mode) {
  if (mode >= state.num_modes()) {
    throw InvalidArgument("mode index " + std::to_string(mode) + " out of range for " +
                          std::to_string(state.num_modes()) + "-mode state");
  }
}

// Embeds a 2k x 2k symplectic acting on `modes` into the full phase space
// and applies it to mean and covariance.
GaussianState apply_symplectic(const GaussianState& state, const Eigen::MatrixXd& local,
                               std::initializer_list<std::size_t> modes) {
  const auto dim = static_cast<Eigen::Index>(2 * state.num_modes());
  Eigen::MatrixXd full = Eigen::MatrixXd::Identity(dim, dim);
  std::size_t row_block = 0;
  for (std::size_t row_mode : modes) {
    std::size_t col_block = 0;
    for (std::size_t col_mode : modes) {
      full.block<2, 2>(2 * row_mode, 2 * col_mode) = local.block<2, 2>(2 * row_block, 2 * col_block);
      ++col_block;
    }
    ++row_block;
  }
  return GaussianState(full * state.mean(), full * state.cov() * full.transpose());
}

double wrap_angle(double angle) {
  constexpr double kTwoPi = 2.0 * std::numbers::pi;
  double wrapped = std::fmod(angle, kTwoPi);
  if (wrapped < 0.0) wrapped += kTwoPi;
  if (wrapped >= kTwoPi) wrapped = 0.0;
  return wrapped;
}

// Smallest symplectic eigenvalue of a two-mode covariance. For positive
// definite input the eigenvalues +-nu of the Hermitian matrix
// sigma^{1/2} (i Omega) sigma^{1/2} are used; they stay accurate when the two
// symplectic eigenvalues coincide, where the determinant formula loses half
// the digits.
double smallest_symplectic_eigenvalue(const Eigen::Matrix4d& sigma) {
  const Eigen::SelfAdjointEigenSolver<Eigen::Matrix4d> es(sigma);
  if (es.eigenvalues().minCoeff() > 0.0) {
    const Eigen::Matrix4d root = es.operatorSqrt();
    const Eigen::Matrix4d omega = symplectic_form(2);
    const Eigen::Matrix4cd h = std::complex<double>(0.0, 1.0) * (root * omega * root).cast<std::complex<double>>();
    const Eigen::SelfAdjointEigenSolver<Eigen::Matrix4cd> hs(h, Eigen::EigenvaluesOnly);
    return hs.eigenvalues().cwiseAbs().minCoeff();
  }
  const double det_a = sigma.block<2, 2>(0, 0).determinant();
  const double det_b = sigma.block<2, 2>(2, 2).determinant();
  const double det_c = sigma.block<2, 2>(0, 2).determinant();
  const double delta = det_a + det_b + 2.0 * det_c;
  const double disc = std::max(0.0, delta * delta - 4.0 * sigma.determinant());
  return std::sqrt(std::max(0.0, (delta - std::sqrt(disc)) / 2.0));
}

}  // namespace

SqueezeParams::SqueezeParams(double r_in, double phi_in) {
  if (!std::isfinite(r_in) || !std::isfinite(phi_in)) {
    throw InvalidArgument("squeeze parameters must be finite");
  }
  if (r_in < 0.0) throw InvalidArgument("squeezing factor r must be nonnegative");
  r = r_in;
  phi = wrap_angle(phi_in);
}

SqueezeParams SqueezeParams::from_level_db(double level_db, double gamma) {
  // Pure squeezed vacuum: lambda_min = 0.25 e^{-2r}, so level = 20 r / ln 10.
  return SqueezeParams(level_db * std::numbers::ln10 / 20.0, -2.0 * gamma);
}

DisplacementParams::DisplacementParams(double magnitude_in, double theta_in)
    : magnitude(magnitude_in), theta(theta_in) {
  if (!std::isfinite(magnitude_in) || !std::isfinite(theta_in)) {
    throw InvalidArgument("displacement parameters must be finite");
  }
  if (magnitude_in < 0.0) throw InvalidArgument("displacement magnitude must be nonnegative");
}

DisplacementParams DisplacementParams::from_amplitude(std::complex<double> alpha) {
  // alpha = |alpha| (sin theta + i cos theta)
  return DisplacementParams(std::abs(alpha), std::atan2(alpha.real(), alpha.imag()));
}

std::complex<double> DisplacementParams::amplitude() const noexcept {
  return {magnitude * std::sin(theta), magnitude * std::cos(theta)};
}

GaussianState::GaussianState(Eigen::VectorXd mean, Eigen::MatrixXd cov)
    : mean_(std::move(mean)), cov_(std::move(cov)) {
  if (mean_.size() == 0 || mean_.size() % 2 != 0) {
    throw InvalidArgument("mean vector must have even, nonzero length");
  }
  if (cov_.rows() != mean_.size() || cov_.cols() != mean_.size()) {
    throw InvalidArgument("covariance shape does not match mean vector");
  }
  if (!mean_.allFinite() || !cov_.allFinite()) {
    throw InvalidArgument("state contains non-finite entries");
  }
  const double scale = std::max(1.0, cov_.cwiseAbs().maxCoeff());
  if ((cov_ - cov_.transpose()).cwiseAbs().maxCoeff() > kSymmetryTolerance * scale) {
    throw InvalidArgument("covariance matrix is not symmetric");
  }
  cov_ = 0.5 * (cov_ + cov_.transpose()).eval();
}

Eigen::Vector2d GaussianState::mode_mean(std::size_t mode) const {
  check_mode(*this, mode);
  return mean_.segment<2>(static_cast<Eigen::Index>(2 * mode));
}

Eigen::Matrix2d GaussianState::mode_cov(std::size_t mode) const {
  check_mode(*this, mode);
  return cov_.block<2, 2>(static_cast<Eigen::Index>(2 * mode), static_cast<Eigen::Index>(2 * mode));
}

GaussianState GaussianState::reduced(std::initializer_list<std::size_t> modes) const {
  const auto k = static_cast<Eigen::Index>(modes.size());
  if (k == 0) throw InvalidArgument("reduced state needs at least one mode");
  Eigen::VectorXd mean(2 * k);
  Eigen::MatrixXd cov(2 * k, 2 * k);
  Eigen::Index i = 0;
  for (std::size_t mi : modes) {
    check_mode(*this, mi);
    mean.segment<2>(2 * i) = mean_.segment<2>(static_cast<Eigen::Index>(2 * mi));
    Eigen::Index j = 0;
    for (std::size_t mj : modes) {
      cov.block<2, 2>(2 * i, 2 * j) =
          cov_.block<2, 2>(static_cast<Eigen::Index>(2 * mi), static_cast<Eigen::Index>(2 * mj));
      ++j;
    }
    ++i;
  }
  return GaussianState(std::move(mean), std::move(cov));
}

double GaussianState::uncertainty_margin() const {
  const Eigen::MatrixXcd herm =
      cov_.cast<std::complex<double>>() +
      std::complex<double>(0.0, kVacuumVariance) * symplectic_form(num_modes()).cast<std::complex<double>>();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(herm, Eigen::EigenvaluesOnly);
  return solver.eigenvalues().minCoeff();
}

bool GaussianState::is_physical(double tolerance) const {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov_, Eigen::EigenvaluesOnly);
  return solver.eigenvalues().minCoeff() >= -tolerance && uncertainty_margin() >= -tolerance;
}

void GaussianState::require_physical(double tolerance) const {
  if (!is_physical(tolerance)) {
    throw UnphysicalState("covariance violates the uncertainty relation (margin " +
                          std::to_string(uncertainty_margin()) + ")");
  }
}

GaussianState tensor(const GaussianState& a, const GaussianState& b) {
  const auto na = a.mean().size();
  const auto nb = b.mean().size();
  Eigen::VectorXd mean(na + nb);
  mean << a.mean(), b.mean();
  Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(na + nb, na + nb);
  cov.topLeftCorner(na, na) = a.cov();
  cov.bottomRightCorner(nb, nb) = b.cov();
  return GaussianState(std::move(mean), std::move(cov));
}

GaussianState vacuum(std::size_t num_modes) {
  if (num_modes == 0) throw InvalidArgument("vacuum needs at least one mode");
  const auto dim = static_cast<Eigen::Index>(2 * num_modes);
  return GaussianState(Eigen::VectorXd::Zero(dim), kVacuumVariance * Eigen::MatrixXd::Identity(dim, dim));
}

GaussianState thermal(double n_mean) {
  if (!(n_mean >= 0.0) || !std::isfinite(n_mean)) {
    throw InvalidArgument("thermal occupation must be finite and nonnegative");
  }
  return GaussianState(Eigen::VectorXd::Zero(2),
                       (2.0 * n_mean + 1.0) * kVacuumVariance * Eigen::MatrixXd::Identity(2, 2));
}

GaussianState coherent(std::complex<double> alpha) {
  return displace(vacuum(1), 0, DisplacementParams::from_amplitude(alpha));
}

Eigen::MatrixXd symplectic_form(std::size_t num_modes) {
  const auto dim = static_cast<Eigen::Index>(2 * num_modes);
  Eigen::MatrixXd omega = Eigen::MatrixXd::Zero(dim, dim);
  for (Eigen::Index k = 0; k < dim; k += 2) {
    omega(k, k + 1) = 1.0;
    omega(k + 1, k) = -1.0;
  }
  return omega;
}

Eigen::Matrix2d squeeze_symplectic(const SqueezeParams& params) {
  // S^dag a S = a cosh r - a^dag e^{i phi} sinh r
  const double c = std::cosh(params.r);
  const double s = std::sinh(params.r);
  Eigen::Matrix2d reflection;
  reflection << std::cos(params.phi), std::sin(params.phi), std::sin(params.phi), -std::cos(params.phi);
  return c * Eigen::Matrix2d::Identity() - s * reflection;
}

Eigen::Matrix4d beam_splitter_symplectic(double transmissivity) {
  if (!(transmissivity >= 0.0 && transmissivity <= 1.0)) {
    throw InvalidArgument("beam splitter transmissivity must lie in [0, 1]");
  }
  const double t = std::sqrt(transmissivity);
  const double r = std::sqrt(1.0 - transmissivity);
  const Eigen::Matrix2d id = Eigen::Matrix2d::Identity();
  Eigen::Matrix4d s;
  s << t * id, r * id, r * id, -t * id;
  return s;
}

GaussianState squeeze(const GaussianState& state, std::size_t mode, const SqueezeParams& params) {
  check_mode(state, mode);
  return apply_symplectic(state, squeeze_symplectic(params), {mode});
}

GaussianState displace(const GaussianState& state, std::size_t mode, const DisplacementParams& params) {
  check_mode(state, mode);
  Eigen::VectorXd mean = state.mean();
  const auto alpha = params.amplitude();
  mean(static_cast<Eigen::Index>(2 * mode)) += alpha.real();
  mean(static_cast<Eigen::Index>(2 * mode + 1)) += alpha.imag();
  return GaussianState(std::move(mean), state.cov());
}

GaussianState beam_splitter(const GaussianState& state, std::size_t mode_a, std::size_t mode_b,
                            double transmissivity) {
  check_mode(state, mode_a);
  check_mode(state, mode_b);
  if (mode_a == mode_b) throw InvalidArgument("beam splitter needs two distinct modes");
  return apply_symplectic(state, beam_splitter_symplectic(transmissivity), {mode_a, mode_b});
}

GaussianState lossy_channel(const GaussianState& state, std::size_t mode, double efficiency) {
  check_mode(state, mode);
  if (!(efficiency > 0.0 && efficiency <= 1.0)) {
    throw InvalidArgument("channel efficiency must lie in (0, 1]");
  }
  const auto dim = static_cast<Eigen::Index>(2 * state.num_modes());
  const auto k = static_cast<Eigen::Index>(2 * mode);
  Eigen::VectorXd scale = Eigen::VectorXd::Ones(dim);
  scale.segment<2>(k).setConstant(std::sqrt(efficiency));
  Eigen::MatrixXd cov = scale.asDiagonal() * state.cov() * scale.asDiagonal();
  cov.block<2, 2>(k, k) += (1.0 - efficiency) * kVacuumVariance * Eigen::Matrix2d::Identity();
  return GaussianState(scale.cwiseProduct(state.mean()), std::move(cov));
}

double squeezing_level_db(const GaussianState& state, std::size_t mode) {
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> solver(state.mode_cov(mode), Eigen::EigenvaluesOnly);
  const double lambda_min = solver.eigenvalues()(0);
  if (!(lambda_min > 0.0)) throw DegenerateState("quadrature variance is not positive");
  return -10.0 * std::log10(lambda_min / kVacuumVariance);
}

double photon_number(const GaussianState& state, std::size_t mode) {
  const Eigen::Vector2d mu = state.mode_mean(mode);
  // a^dag a = q^2 + p^2 - 1/2 with [q, p] = i/2
  return state.mode_cov(mode).trace() + mu.squaredNorm() - 2.0 * kVacuumVariance;
}

NegativityResult negativity_details(const GaussianState& state, double tolerance) {
  if (state.num_modes() != 2) throw InvalidArgument("negativity is defined for two-mode states");
  const Eigen::Matrix4d sigma = state.cov() / kVacuumVariance;
  Eigen::Matrix4d flip = Eigen::Matrix4d::Identity();
  flip(3, 3) = -1.0;

  NegativityResult out;
  out.nu_untransposed = smallest_symplectic_eigenvalue(sigma);
  if (out.nu_untransposed < 1.0 - tolerance) {
    throw UnphysicalState("two-mode covariance violates the uncertainty relation (nu = " +
                          std::to_string(out.nu_untransposed) + ")");
  }
  out.nu = smallest_symplectic_eigenvalue(flip * sigma * flip);
  if (!(out.nu > 0.0)) throw DegenerateState("partially transposed state has zero symplectic eigenvalue");
  out.negativity = std::max(0.0, (1.0 - out.nu) / (2.0 * out.nu));
  return out;
}

double negativity(const GaussianState& state, double tolerance) {
  return negativity_details(state, tolerance).negativity;
}

Eigen::Matrix4d closed_form_split_covariance(double r, double phi) {
  if (!(r >= 0.0)) throw InvalidArgument("squeezing factor r must be nonnegative");
  const double c2 = std::pow(std::cos(phi / 2.0), 2);
  const double s2 = std::pow(std::sin(phi / 2.0), 2);
  const double a_minus = std::exp(-2.0 * r) * c2 + std::exp(2.0 * r) * s2;
  const double a_plus = std::exp(2.0 * r) * c2 + std::exp(-2.0 * r) * s2;
  const double b = -std::sinh(2.0 * r) * std::sin(phi);

  Eigen::Matrix2d alpha;
  alpha << a_minus + 1.0, b, b, a_plus + 1.0;
  Eigen::Matrix2d gamma;
  gamma << a_minus - 1.0, b, b, a_plus - 1.0;
  alpha /= 2.0;
  gamma /= 2.0;

  Eigen::Matrix4d sigma;
  sigma << alpha, gamma, gamma.transpose(), alpha;
  return sigma;
}

std::string to_json(const GaussianState& state) {
  nlohmann::ordered_json j;
  j["convention"] = "vacuum-0.25";
  j["modes"] = state.num_modes();
  j["mean"] = std::vector<double>(state.mean().data(), state.mean().data() + state.mean().size());
  std::vector<double> cov;
  for (Eigen::Index r = 0; r < state.cov().rows(); ++r)
    for (Eigen::Index c = 0; c < state.cov().cols(); ++c) cov.push_back(state.cov()(r, c));
  j["cov"] = cov;
  return j.dump(2);
}

GaussianState gaussian_state_from_json(std::string_view text) {
  try {
    const auto j = nlohmann::json::parse(text);
    if (j.at("convention").get<std::string>() != "vacuum-0.25") {
      throw InvalidArgument("unsupported covariance convention");
    }
    const auto mean = j.at("mean").get<std::vector<double>>();
    const auto cov = j.at("cov").get<std::vector<double>>();
    const auto n = static_cast<Eigen::Index>(mean.size());
    if (static_cast<Eigen::Index>(cov.size()) != n * n) throw InvalidArgument("covariance size does not match mean");
    Eigen::VectorXd m = Eigen::Map<const Eigen::VectorXd>(mean.data(), n);
    Eigen::MatrixXd c = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
        cov.data(), n, n);
    return GaussianState(m, c);
  } catch (const nlohmann::json::exception& e) {
    throw InvalidArgument(std::string("malformed state JSON: ") + e.what());
  }
}

}  // namespace dsq
