#include "dsq/moments.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numeric>

#include "dsq/errors.hpp"
#include "json.hpp"

namespace dsq {
namespace {

using ordered_json = nlohmann::ordered_json;

std::vector<RawExponent> build_raw_exponents() {
  std::vector<RawExponent> out;
  for (int order = 0; order <= kMaxMomentOrder; ++order) {
    for (int n = order; n >= 0; --n) {
      for (int m = order - n; m >= 0; --m) {
        for (int k = order - n - m; k >= 0; --k) {
          out.push_back({n, m, k, order - n - m - k});
        }
      }
    }
  }
  return out;
}

const std::vector<RawExponent>& all_raw_exponents() {
  static const std::vector<RawExponent> table = build_raw_exponents();
  return table;
}

std::array<int, 625> build_raw_lookup() {
  std::array<int, 625> lookup{};
  lookup.fill(-1);
  const auto& table = all_raw_exponents();
  for (std::size_t i = 0; i < table.size(); ++i) {
    const auto& e = table[i];
    lookup[static_cast<std::size_t>(((e[0] * 5 + e[1]) * 5 + e[2]) * 5 + e[3])] = static_cast<int>(i);
  }
  return lookup;
}

void check_order(int max_order) {
  if (max_order < 1 || max_order > kMaxMomentOrder) {
    throw InvalidArgument("moment order must lie in [1, " + std::to_string(kMaxMomentOrder) + "]");
  }
}

// i^k for integer k >= 0.
std::complex<double> i_power(int k) {
  static constexpr std::array<std::complex<double>, 4> kCycle{
      std::complex<double>{1, 0}, {0, 1}, {-1, 0}, {0, -1}};
  return kCycle[static_cast<std::size_t>(k % 4)];
}

// Calls fn(raw_exponent, coefficient) for every monomial of
// (I1 - i Q1)^n1 (I1 + i Q1)^m1 (I2 - i Q2)^n2 (I2 + i Q2)^m2.
template <typename Fn>
void expand_path_monomial(int n1, int m1, int n2, int m2, Fn&& fn) {
  for (int s1 = 0; s1 <= n1; ++s1) {
    for (int t1 = 0; t1 <= m1; ++t1) {
      for (int s2 = 0; s2 <= n2; ++s2) {
        for (int t2 = 0; t2 <= m2; ++t2) {
          const double weight = binomial(n1, s1) * binomial(m1, t1) * binomial(n2, s2) * binomial(m2, t2);
          // (-i)^s = i^{3s}
          const auto phase = i_power(3 * (s1 + s2)) * i_power(t1 + t2);
          fn(RawExponent{n1 - s1 + m1 - t1, n2 - s2 + m2 - t2, s1 + t1, s2 + t2}, weight * phase);
        }
      }
    }
  }
}

std::complex<double> isserlis(std::vector<int>& indices, const std::vector<std::complex<double>>& means,
                              const Eigen::MatrixXcd& pair) {
  if (indices.empty()) return 1.0;
  const int first = indices.back();
  indices.pop_back();
  std::complex<double> total = means[static_cast<std::size_t>(first)] * isserlis(indices, means, pair);
  for (std::size_t j = 0; j < indices.size(); ++j) {
    const int partner = indices[j];
    indices.erase(indices.begin() + static_cast<std::ptrdiff_t>(j));
    total += pair(first, partner) * isserlis(indices, means, pair);
    indices.insert(indices.begin() + static_cast<std::ptrdiff_t>(j), partner);
  }
  indices.push_back(first);
  return total;
}

}  // namespace

double binomial(int n, int k) {
  if (k < 0 || k > n) return 0.0;
  double out = 1.0;
  for (int i = 1; i <= k; ++i) out = out * static_cast<double>(n - k + i) / static_cast<double>(i);
  return std::round(out);
}

int total_order(const std::array<int, 4>& exponent) {
  return exponent[0] + exponent[1] + exponent[2] + exponent[3];
}

std::size_t raw_moment_count(int max_order) {
  return static_cast<std::size_t>(binomial(max_order + 4, 4));
}

std::span<const RawExponent> raw_exponents(int max_order) {
  check_order(max_order);
  return std::span<const RawExponent>(all_raw_exponents()).first(raw_moment_count(max_order));
}

std::size_t raw_index(const RawExponent& e) {
  static const std::array<int, 625> lookup = build_raw_lookup();
  for (int v : e) {
    if (v < 0 || v > kMaxMomentOrder) throw InvalidArgument("raw exponent out of range");
  }
  const int idx = lookup[static_cast<std::size_t>(((e[0] * 5 + e[1]) * 5 + e[2]) * 5 + e[3])];
  if (idx < 0) throw InvalidArgument("raw exponent exceeds the maximum moment order");
  return static_cast<std::size_t>(idx);
}

std::vector<ModeExponent> mode_exponents(int num_modes, int max_order) {
  if (num_modes != 1 && num_modes != 2) throw InvalidArgument("moment sets support one or two modes");
  std::vector<ModeExponent> out;
  for (int order = 0; order <= max_order; ++order) {
    for (const auto& e : all_raw_exponents()) {
      if (total_order(e) != order) continue;
      if (num_modes == 1 && (e[2] != 0 || e[3] != 0)) continue;
      out.push_back(e);
    }
  }
  return out;
}

std::string exponent_key(std::span<const int> exponent) {
  std::string key;
  for (std::size_t i = 0; i < exponent.size(); ++i) {
    if (i != 0) key += ',';
    key += std::to_string(exponent[i]);
  }
  return key;
}

std::vector<int> parse_exponent_key(std::string_view key) {
  std::vector<int> out;
  std::size_t pos = 0;
  while (pos <= key.size()) {
    const std::size_t next = std::min(key.find(',', pos), key.size());
    int value = 0;
    const auto* begin = key.data() + pos;
    const auto* end = key.data() + next;
    const auto [ptr, ec] = std::from_chars(begin, end, value);
    if (ec != std::errc{} || ptr != end || begin == end) {
      throw InvalidArgument("malformed exponent key '" + std::string(key) + "'");
    }
    out.push_back(value);
    pos = next + 1;
  }
  return out;
}

// RawMomentSet ---------------------------------------------------------------

RawMomentSet::RawMomentSet(int max_order, std::uint64_t count, std::vector<double> means,
                           std::vector<double> standard_errors)
    : max_order_(max_order), count_(count), means_(std::move(means)), errors_(std::move(standard_errors)) {
  check_order(max_order);
  const std::size_t n = raw_moment_count(max_order);
  if (means_.size() != n || errors_.size() != n) {
    throw InvalidArgument("raw moment vectors do not match the moment order");
  }
  const auto finite = [](double v) { return std::isfinite(v); };
  if (!std::all_of(means_.begin(), means_.end(), finite) || !std::all_of(errors_.begin(), errors_.end(), finite)) {
    throw InvalidArgument("raw moments must be finite");
  }
  if (std::abs(means_[0] - 1.0) > 1e-12) throw InvalidArgument("zeroth raw moment must equal 1");
}

RawMomentSet RawMomentSet::exact(int max_order, std::vector<double> values) {
  std::vector<double> zeros(values.size(), 0.0);
  return RawMomentSet(max_order, 0, std::move(values), std::move(zeros));
}

double RawMomentSet::mean(const RawExponent& exponent) const {
  const std::size_t idx = raw_index(exponent);
  if (idx >= means_.size()) throw InvalidArgument("raw moment order exceeds the set's coverage");
  return means_[idx];
}

double RawMomentSet::standard_error(const RawExponent& exponent) const {
  const std::size_t idx = raw_index(exponent);
  if (idx >= errors_.size()) throw InvalidArgument("raw moment order exceeds the set's coverage");
  return errors_[idx];
}

std::complex<double> RawMomentSet::path_moment(int n1, int m1, int n2, int m2) const {
  std::complex<double> total = 0.0;
  expand_path_monomial(n1, m1, n2, m2, [&](const RawExponent& e, std::complex<double> c) { total += c * mean(e); });
  return total;
}

double RawMomentSet::path_moment_error(int n1, int m1, int n2, int m2) const {
  double total = 0.0;
  expand_path_monomial(n1, m1, n2, m2,
                       [&](const RawExponent& e, std::complex<double> c) { total += std::abs(c) * standard_error(e); });
  return total;
}

RawMomentSet RawMomentSet::merge(const RawMomentSet& a, const RawMomentSet& b) {
  if (a.is_exact() || b.is_exact()) throw InvalidArgument("exact moment sets cannot be merged");
  if (a.max_order_ != b.max_order_) throw InvalidArgument("cannot merge moment sets of different order");
  const auto na = static_cast<double>(a.count_);
  const auto nb = static_cast<double>(b.count_);
  const double n = na + nb;
  std::vector<double> means(a.means_.size());
  std::vector<double> errors(a.means_.size());
  for (std::size_t i = 0; i < means.size(); ++i) {
    means[i] = (na * a.means_[i] + nb * b.means_[i]) / n;
    const double sq_a = na * a.means_[i] * a.means_[i] + a.errors_[i] * a.errors_[i] * na * (na - 1.0);
    const double sq_b = nb * b.means_[i] * b.means_[i] + b.errors_[i] * b.errors_[i] * nb * (nb - 1.0);
    const double var = n > 1.0 ? std::max(0.0, (sq_a + sq_b - n * means[i] * means[i]) / (n - 1.0)) : 0.0;
    errors[i] = std::sqrt(var / n);
  }
  return RawMomentSet(a.max_order_, a.count_ + b.count_, std::move(means), std::move(errors));
}

std::string to_json(const RawMomentSet& moments) {
  ordered_json doc;
  doc["max_order"] = moments.max_order();
  doc["count"] = moments.count();
  ordered_json means = ordered_json::object();
  ordered_json errors = ordered_json::object();
  const auto exps = raw_exponents(moments.max_order());
  for (std::size_t i = 0; i < exps.size(); ++i) {
    const std::string key = exponent_key(exps[i]);
    means[key] = moments.means()[i];
    errors[key] = moments.standard_errors()[i];
  }
  doc["moments"] = std::move(means);
  doc["stderr"] = std::move(errors);
  return doc.dump(2);
}

RawMomentSet raw_moments_from_json(std::string_view text) {
  try {
    const auto doc = nlohmann::json::parse(text);
    const int max_order = doc.at("max_order").get<int>();
    const auto exps = raw_exponents(max_order);
    std::vector<double> means(exps.size());
    std::vector<double> errors(exps.size());
    for (std::size_t i = 0; i < exps.size(); ++i) {
      const std::string key = exponent_key(exps[i]);
      means[i] = doc.at("moments").at(key).get<double>();
      errors[i] = doc.at("stderr").at(key).get<double>();
    }
    return RawMomentSet(max_order, doc.at("count").get<std::uint64_t>(), std::move(means), std::move(errors));
  } catch (const nlohmann::json::exception& e) {
    throw InvalidArgument(std::string("malformed raw moment JSON: ") + e.what());
  }
}

// MomentAccumulator ----------------------------------------------------------

MomentAccumulator::MomentAccumulator(int max_order)
    : max_order_(max_order), sums_(raw_moment_count(max_order)), squares_(raw_moment_count(max_order)) {
  check_order(max_order);
}

void MomentAccumulator::add(double i1, double q1, double i2, double q2) {
  std::array<std::array<double, kMaxMomentOrder + 1>, 4> powers{};
  const std::array<double, 4> vars{i1, i2, q1, q2};
  for (std::size_t v = 0; v < 4; ++v) {
    powers[v][0] = 1.0;
    for (int k = 1; k <= max_order_; ++k) powers[v][static_cast<std::size_t>(k)] = powers[v][k - 1] * vars[v];
  }
  const auto exps = raw_exponents(max_order_);
  for (std::size_t i = 0; i < exps.size(); ++i) {
    const auto& e = exps[i];
    const double x = powers[0][static_cast<std::size_t>(e[0])] * powers[1][static_cast<std::size_t>(e[1])] *
                     powers[2][static_cast<std::size_t>(e[2])] * powers[3][static_cast<std::size_t>(e[3])];
    sums_[i].add(x);
    squares_[i].add(x * x);
  }
  ++count_;
}

void MomentAccumulator::merge(const MomentAccumulator& other) {
  if (other.max_order_ != max_order_) throw InvalidArgument("cannot merge accumulators of different order");
  for (std::size_t i = 0; i < sums_.size(); ++i) {
    sums_[i].merge(other.sums_[i]);
    squares_[i].merge(other.squares_[i]);
  }
  count_ += other.count_;
}

RawMomentSet MomentAccumulator::finalize() const {
  if (count_ == 0) throw InvalidArgument("cannot finalize an empty moment accumulator");
  const auto n = static_cast<double>(count_);
  std::vector<double> means(sums_.size());
  std::vector<double> errors(sums_.size());
  for (std::size_t i = 0; i < sums_.size(); ++i) {
    means[i] = sums_[i].value() / n;
    const double var = count_ > 1 ? std::max(0.0, (squares_[i].value() - n * means[i] * means[i]) / (n - 1.0)) : 0.0;
    errors[i] = std::sqrt(var / n);
  }
  means[0] = 1.0;
  return RawMomentSet(max_order_, count_, std::move(means), std::move(errors));
}

// SignalMomentSet ------------------------------------------------------------

SignalMomentSet::SignalMomentSet(int num_modes, int max_order) : num_modes_(num_modes), max_order_(max_order) {
  if (num_modes != 1 && num_modes != 2) throw InvalidArgument("moment sets support one or two modes");
  check_order(max_order);
  values_[ModeExponent{0, 0, 0, 0}] = 1.0;
}

void SignalMomentSet::check_exponent(const ModeExponent& e) const {
  for (int v : e) {
    if (v < 0) throw InvalidArgument("negative moment exponent");
  }
  if (num_modes_ == 1 && (e[2] != 0 || e[3] != 0)) throw InvalidArgument("second-mode exponent on a single-mode set");
  if (total_order(e) > max_order_) throw InvalidArgument("moment exponent exceeds the set's order");
}

bool SignalMomentSet::contains(const ModeExponent& exponent) const { return values_.contains(exponent); }

std::complex<double> SignalMomentSet::get(const ModeExponent& exponent) const {
  check_exponent(exponent);
  const auto it = values_.find(exponent);
  if (it == values_.end()) throw MalformedMoments("missing moment " + exponent_key(exponent));
  return it->second;
}

void SignalMomentSet::set(const ModeExponent& exponent, std::complex<double> value) {
  check_exponent(exponent);
  if (!std::isfinite(value.real()) || !std::isfinite(value.imag())) {
    throw InvalidArgument("moment values must be finite");
  }
  values_[exponent] = value;
}

double SignalMomentSet::hermiticity_defect() const {
  double worst = 0.0;
  for (const auto& [e, v] : values_) {
    const auto it = values_.find(ModeExponent{e[1], e[0], e[3], e[2]});
    if (it != values_.end()) worst = std::max(worst, std::abs(v - std::conj(it->second)));
  }
  return worst;
}

void SignalMomentSet::symmetrize() {
  for (auto& [e, v] : values_) {
    const ModeExponent dagger{e[1], e[0], e[3], e[2]};
    if (dagger < e) continue;
    const auto it = values_.find(dagger);
    if (it == values_.end()) continue;
    const auto avg = 0.5 * (v + std::conj(it->second));
    v = avg;
    it->second = std::conj(avg);
  }
}

bool SignalMomentSet::is_complete() const {
  const auto all = mode_exponents(num_modes_, max_order_);
  return std::all_of(all.begin(), all.end(), [this](const ModeExponent& e) { return values_.contains(e); });
}

SignalMomentSet SignalMomentSet::central() const {
  const std::complex<double> alpha = values_.contains({0, 1, 0, 0}) ? values_.at({0, 1, 0, 0}) : 0.0;
  const std::complex<double> beta = values_.contains({0, 0, 0, 1}) ? values_.at({0, 0, 0, 1}) : 0.0;
  const std::array<std::complex<double>, 4> shift{-std::conj(alpha), -alpha, -std::conj(beta), -beta};

  SignalMomentSet out(num_modes_, max_order_);
  for (const auto& [e, v] : values_) {
    std::complex<double> total = 0.0;
    bool complete = true;
    for (int i0 = 0; i0 <= e[0] && complete; ++i0) {
      for (int i1 = 0; i1 <= e[1] && complete; ++i1) {
        for (int i2 = 0; i2 <= e[2] && complete; ++i2) {
          for (int i3 = 0; i3 <= e[3] && complete; ++i3) {
            const auto it = values_.find(ModeExponent{i0, i1, i2, i3});
            if (it == values_.end()) {
              complete = false;
              break;
            }
            total += binomial(e[0], i0) * binomial(e[1], i1) * binomial(e[2], i2) * binomial(e[3], i3) *
                     std::pow(shift[0], e[0] - i0) * std::pow(shift[1], e[1] - i1) * std::pow(shift[2], e[2] - i2) *
                     std::pow(shift[3], e[3] - i3) * it->second;
          }
        }
      }
    }
    if (complete) out.values_[e] = total;
  }
  out.values_[ModeExponent{0, 0, 0, 0}] = 1.0;
  return out;
}

std::string to_json(const SignalMomentSet& moments) {
  ordered_json doc;
  doc["num_modes"] = moments.num_modes();
  doc["max_order"] = moments.max_order();
  ordered_json values = ordered_json::object();
  for (const auto& e : mode_exponents(moments.num_modes(), moments.max_order())) {
    if (!moments.contains(e)) continue;
    const auto v = moments.get(e);
    const std::span<const int> key(e.data(), moments.num_modes() == 1 ? 2 : 4);
    values[exponent_key(key)] = {v.real(), v.imag()};
  }
  doc["moments"] = std::move(values);
  return doc.dump(2);
}

SignalMomentSet signal_moments_from_json(std::string_view text) {
  try {
    const auto doc = nlohmann::json::parse(text);
    SignalMomentSet out(doc.at("num_modes").get<int>(), doc.at("max_order").get<int>());
    for (const auto& [key, value] : doc.at("moments").items()) {
      const auto parts = parse_exponent_key(key);
      if (parts.size() != static_cast<std::size_t>(2 * out.num_modes())) {
        throw InvalidArgument("moment key '" + key + "' does not match the mode count");
      }
      ModeExponent e{parts[0], parts[1], 0, 0};
      if (parts.size() == 4) e = {parts[0], parts[1], parts[2], parts[3]};
      out.set(e, {value.at(0).get<double>(), value.at(1).get<double>()});
    }
    return out;
  } catch (const nlohmann::json::exception& e) {
    throw InvalidArgument(std::string("malformed signal moment JSON: ") + e.what());
  }
}

std::complex<double> gaussian_product_moment(std::span<const Eigen::VectorXcd> functionals,
                                             const Eigen::VectorXd& mean, const Eigen::MatrixXd& cov) {
  const auto k = static_cast<Eigen::Index>(functionals.size());
  std::vector<std::complex<double>> means(functionals.size());
  Eigen::MatrixXcd pair(k, k);
  const Eigen::MatrixXcd cov_c = cov.cast<std::complex<double>>();
  for (Eigen::Index i = 0; i < k; ++i) {
    const auto& fi = functionals[static_cast<std::size_t>(i)];
    if (fi.size() != mean.size()) throw InvalidArgument("functional dimension does not match the distribution");
    means[static_cast<std::size_t>(i)] = fi.cwiseProduct(mean.cast<std::complex<double>>()).sum();
    for (Eigen::Index j = 0; j < k; ++j) {
      pair(i, j) = (fi.transpose() * cov_c * functionals[static_cast<std::size_t>(j)])(0, 0);
    }
  }
  std::vector<int> indices(functionals.size());
  std::iota(indices.begin(), indices.end(), 0);
  return isserlis(indices, means, pair);
}

}  // namespace dsq
