#include "dsq/calibration.hpp"

#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <random>
#include <sstream>

#include "json.hpp"

#include "dsq/detection.hpp"
#include "dsq/devices.hpp"
#include "dsq/errors.hpp"

namespace dsq {
namespace {

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

double weight_sigma(const SweepPoint& p) {
  return p.n_samples > 1 ? p.variance * std::sqrt(2.0 / static_cast<double>(p.n_samples - 1)) : p.variance;
}

}  // namespace

double planck_occupation(double temperature_k, double frequency_hz) {
  if (!(frequency_hz > 0.0) || !std::isfinite(frequency_hz)) throw InvalidArgument("frequency must be positive");
  if (!(temperature_k > 0.0) || !std::isfinite(temperature_k)) throw InvalidArgument("temperature must be positive");
  return 1.0 / std::expm1(kPlanckConstant * frequency_hz / (kBoltzmannConstant * temperature_k));
}

double sweep_variance_model(double gain, double noise_photons, double temperature_k, double frequency_hz) {
  return gain * kVacuumVariance * (2.0 * planck_occupation(temperature_k, frequency_hz) + 1.0 + 2.0 * noise_photons);
}

void TemperatureSweep::validate() const {
  if (!(frequency_hz > 0.0) || !std::isfinite(frequency_hz)) throw InvalidArgument("frequency must be positive");
  if (points.size() < 3) throw InvalidArgument("a temperature sweep needs at least three points");
  for (const auto& p : points) {
    if (!(p.temperature_k > 0.0) || !std::isfinite(p.temperature_k)) {
      throw InvalidArgument("sweep temperatures must be positive");
    }
    if (!(p.variance > 0.0) || !std::isfinite(p.variance)) throw InvalidArgument("sweep variances must be positive");
    if (p.n_samples == 1) throw InvalidArgument("a sample variance needs at least two samples");
  }
}

std::vector<double> default_calibration_temperatures() {
  std::vector<double> t;
  for (int i = 0; i < 10; ++i) t.push_back(0.040 + i * (0.800 - 0.040) / 9.0);
  return t;
}

TemperatureSweep simulate_sweep(double gain, double noise_photons, std::span<const double> temperatures_k,
                                double frequency_hz, std::uint64_t n_samples, std::uint64_t seed) {
  if (!(gain > 0.0) || !std::isfinite(gain)) throw InvalidArgument("gain must be positive");
  if (!(noise_photons >= 0.0) || !std::isfinite(noise_photons)) {
    throw InvalidArgument("added noise must be non-negative");
  }
  if (temperatures_k.size() < 3) throw InvalidArgument("a temperature sweep needs at least three points");
  if (n_samples == 1) throw InvalidArgument("a sample variance needs at least two samples");
  TemperatureSweep sweep;
  sweep.frequency_hz = frequency_hz;
  for (std::size_t i = 0; i < temperatures_k.size(); ++i) {
    const double truth = sweep_variance_model(gain, noise_photons, temperatures_k[i], frequency_hz);
    double variance = truth;
    if (n_samples > 0) {
      std::mt19937_64 rng(derive_seed(seed, i));
      const double dof = static_cast<double>(n_samples - 1);
      std::chi_squared_distribution<double> chi2(dof);
      variance = truth * chi2(rng) / dof;
    }
    sweep.points.push_back({temperatures_k[i], variance, n_samples});
  }
  sweep.validate();
  return sweep;
}

CalibrationResult fit_gain_noise(const TemperatureSweep& sweep) {
  sweep.validate();
  const auto n = static_cast<Eigen::Index>(sweep.points.size());
  Eigen::VectorXd x(n), y(n), sigma(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& p = sweep.points[static_cast<std::size_t>(i)];
    x(i) = 2.0 * planck_occupation(p.temperature_k, sweep.frequency_hz) + 1.0;
    y(i) = p.variance;
    sigma(i) = weight_sigma(p);
  }
  if ((x.maxCoeff() - x.minCoeff()) / x.minCoeff() < 0.1) {
    throw FitError("thermal occupation spread is too small to separate gain from added noise");
  }

  // Model y = G/4 (x + 2N). Start from the two extreme points.
  Eigen::Index lo = 0, hi = 0;
  x.minCoeff(&lo);
  x.maxCoeff(&hi);
  const double slope = (y(hi) - y(lo)) / (x(hi) - x(lo));
  Eigen::Vector2d theta(std::max(4.0 * slope, 1e-300), 0.0);
  theta(1) = std::max(0.0, (y(lo) / slope - x(lo)) / 2.0);

  const auto residuals = [&](const Eigen::Vector2d& t) -> Eigen::VectorXd {
    return ((y.array() - 0.25 * t(0) * (x.array() + 2.0 * t(1))) / sigma.array()).matrix();
  };
  const auto jacobian = [&](const Eigen::Vector2d& t) {
    Eigen::MatrixXd j(n, 2);
    j.col(0) = (0.25 * (x.array() + 2.0 * t(1)) / sigma.array()).matrix();
    j.col(1) = (0.5 * t(0) / sigma.array()).matrix();
    return j;
  };

  double lambda = 1e-3;
  Eigen::VectorXd r = residuals(theta);
  double cost = r.squaredNorm();
  int iter = 0;
  for (; iter < 200; ++iter) {
    const Eigen::MatrixXd j = jacobian(theta);
    const Eigen::Matrix2d jtj = j.transpose() * j;
    const Eigen::Vector2d g = j.transpose() * r;
    bool accepted = false;
    Eigen::Vector2d step = Eigen::Vector2d::Zero();
    while (lambda < 1e12) {
      Eigen::Matrix2d a = jtj;
      a.diagonal() += lambda * jtj.diagonal();
      step = a.ldlt().solve(g);
      const Eigen::Vector2d trial = theta + step;
      const Eigen::VectorXd rt = residuals(trial);
      const double ct = rt.squaredNorm();
      if (trial(0) > 0.0 && ct <= cost) {
        theta = trial;
        r = rt;
        const double previous = cost;
        cost = ct;
        lambda = std::max(lambda / 10.0, 1e-12);
        accepted = true;
        if (previous - ct <= 1e-15 * std::max(previous, 1e-300)) lambda = 1e12;
        break;
      }
      lambda *= 10.0;
    }
    const bool small_step = std::abs(step(0)) <= 1e-13 * std::abs(theta(0)) &&
                            std::abs(step(1)) <= 1e-13 * std::max(1.0, std::abs(theta(1)));
    if (!accepted || small_step || lambda >= 1e12) break;
  }
  if (!std::isfinite(theta(0)) || !std::isfinite(theta(1))) throw FitError("calibration fit diverged");

  const Eigen::MatrixXd j = jacobian(theta);
  const Eigen::Matrix2d jtj = j.transpose() * j;
  const Eigen::Vector2d d = jtj.diagonal().cwiseSqrt().cwiseInverse();
  const Eigen::Matrix2d normalized = d.asDiagonal() * jtj * d.asDiagonal();
  Eigen::JacobiSVD<Eigen::Matrix2d> svd(normalized);
  const auto& sv = svd.singularValues();
  if (!(sv(1) > 1e-12 * sv(0))) throw FitError("calibration fit is ill-conditioned");

  CalibrationResult out;
  out.total_gain = theta(0);
  out.noise_photons = theta(1);
  out.covariance = jtj.inverse();
  const bool has_weights = sweep.points.front().n_samples > 1;
  const double dof = static_cast<double>(n - 2);
  if (!has_weights && dof > 0) out.covariance *= cost / dof;
  out.fit_residual = std::sqrt(cost / static_cast<double>(n));
  out.iterations = iter;
  return out;
}

void write_sweep_csv(std::ostream& out, const TemperatureSweep& sweep) {
  out << "# frequency_hz=" << format_double(sweep.frequency_hz) << "\n";
  out << "temperature_K,variance,n_samples\n";
  for (const auto& p : sweep.points) {
    out << format_double(p.temperature_k) << ',' << format_double(p.variance) << ',' << p.n_samples << '\n';
  }
}

TemperatureSweep read_sweep_csv(std::istream& in) {
  TemperatureSweep sweep;
  std::string line;
  bool saw_columns = false;
  bool saw_frequency = false;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (line.front() == '#') {
      const std::string key = "# frequency_hz=";
      if (line.rfind(key, 0) == 0) {
        sweep.frequency_hz = std::stod(line.substr(key.size()));
        saw_frequency = true;
      }
      continue;
    }
    if (!saw_columns) {
      if (line != "temperature_K,variance,n_samples") throw InvalidArgument("unexpected sweep CSV column header");
      saw_columns = true;
      continue;
    }
    std::stringstream fields(line);
    std::string t, v, n;
    if (!std::getline(fields, t, ',') || !std::getline(fields, v, ',') || !std::getline(fields, n)) {
      throw InvalidArgument("sweep CSV row needs three fields");
    }
    try {
      sweep.points.push_back({std::stod(t), std::stod(v), std::stoull(n)});
    } catch (const std::logic_error&) {
      throw InvalidArgument("malformed sweep CSV row '" + line + "'");
    }
  }
  if (!saw_frequency) throw InvalidArgument("sweep CSV lacks the frequency header");
  sweep.validate();
  return sweep;
}

std::string to_json(const CalibrationResult& result) {
  nlohmann::ordered_json j;
  j["total_gain"] = result.total_gain;
  j["noise_photons"] = result.noise_photons;
  j["covariance"] = {{result.covariance(0, 0), result.covariance(0, 1)},
                     {result.covariance(1, 0), result.covariance(1, 1)}};
  j["fit_residual"] = result.fit_residual;
  j["iterations"] = result.iterations;
  return j.dump(2);
}

CalibrationResult calibration_from_json(std::string_view text) {
  try {
    const auto j = nlohmann::json::parse(text);
    CalibrationResult out;
    out.total_gain = j.at("total_gain").get<double>();
    out.noise_photons = j.at("noise_photons").get<double>();
    const auto& c = j.at("covariance");
    for (int r = 0; r < 2; ++r)
      for (int col = 0; col < 2; ++col) out.covariance(r, col) = c.at(r).at(col).get<double>();
    out.fit_residual = j.value("fit_residual", 0.0);
    out.iterations = j.value("iterations", 0);
    return out;
  } catch (const nlohmann::json::exception& e) {
    throw InvalidArgument(std::string("malformed calibration JSON: ") + e.what());
  }
}

}  // namespace dsq
