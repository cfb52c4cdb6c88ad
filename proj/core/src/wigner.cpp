#include <cmath>
#include <numbers>

#include <Eigen/Eigenvalues>

#include "dsq/errors.hpp"
#include "dsq/gaussian_state.hpp"

namespace dsq {
namespace {

constexpr double kDegenerateEigenvalue = 1e-12;

struct SingleModeGaussian {
  Eigen::Vector2d mean;
  Eigen::Matrix2d inverse;
  double norm;
};

SingleModeGaussian prepare(const GaussianState& state) {
  if (state.num_modes() != 1) throw InvalidArgument("Wigner evaluation needs a single-mode state");
  const Eigen::Matrix2d cov = state.cov();
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> solver(cov, Eigen::EigenvaluesOnly);
  if (solver.eigenvalues()(0) < kDegenerateEigenvalue) {
    throw DegenerateState("covariance is singular; Wigner function is not a density");
  }
  return {state.mean(), cov.inverse(), 1.0 / (2.0 * std::numbers::pi * std::sqrt(cov.determinant()))};
}

double evaluate(const SingleModeGaussian& g, double q, double p) {
  const Eigen::Vector2d x = Eigen::Vector2d(q, p) - g.mean;
  return g.norm * std::exp(-0.5 * x.dot(g.inverse * x));
}

}  // namespace

double WignerGrid::q_at(std::size_t j) const {
  return q_min + (q_max - q_min) * static_cast<double>(j) / static_cast<double>(resolution() - 1);
}

double WignerGrid::p_at(std::size_t i) const {
  return p_min + (p_max - p_min) * static_cast<double>(i) / static_cast<double>(resolution() - 1);
}

double WignerGrid::integral() const {
  const auto steps = static_cast<double>(resolution() - 1);
  return values.sum() * ((q_max - q_min) / steps) * ((p_max - p_min) / steps);
}

double wigner_value(const GaussianState& state, double q, double p) {
  return evaluate(prepare(state), q, p);
}

WignerGrid wigner_grid(const GaussianState& state, double q_min, double q_max, double p_min, double p_max,
                       std::size_t resolution) {
  if (resolution < 2) throw InvalidArgument("Wigner grid resolution must be at least 2");
  if (!(q_max > q_min) || !(p_max > p_min)) throw InvalidArgument("Wigner grid range is empty");
  const auto g = prepare(state);
  WignerGrid grid{q_min, q_max, p_min, p_max, Eigen::MatrixXd(resolution, resolution)};
  for (std::size_t i = 0; i < resolution; ++i) {
    for (std::size_t j = 0; j < resolution; ++j) {
      grid.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          evaluate(g, grid.q_at(j), grid.p_at(i));
    }
  }
  return grid;
}

ContourEllipse contour_ellipse(const GaussianState& state) {
  const auto g = prepare(state);
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> solver(state.cov());
  const Eigen::Vector2d major = solver.eigenvectors().col(1);
  // W drops by 1/e where (x - mu)^T Sigma^{-1} (x - mu) = 2.
  double angle = std::atan2(major(0), major(1));
  if (angle < 0.0) angle += std::numbers::pi;
  if (angle >= std::numbers::pi) angle -= std::numbers::pi;
  return {g.mean(0), g.mean(1), std::sqrt(2.0 * solver.eigenvalues()(1)), std::sqrt(2.0 * solver.eigenvalues()(0)),
          angle};
}

}  // namespace dsq
