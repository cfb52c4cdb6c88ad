#pragma once

#include <array>
#include <complex>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace dsq {

inline constexpr int kMaxMomentOrder = 4;

/// Exponents (n, m, k, l) of the quadrature moment <I1^n I2^m Q1^k Q2^l>.
using RawExponent = std::array<int, 4>;

/// Exponents (n1, m1, n2, m2) of the normally ordered moment
/// <a^dag^n1 a^m1 b^dag^n2 b^m2>. Single-mode sets use n2 = m2 = 0.
using ModeExponent = std::array<int, 4>;

int total_order(const std::array<int, 4>& exponent);

/// Number of raw exponents with total order <= max_order.
std::size_t raw_moment_count(int max_order);

/// All raw exponents up to max_order, lowest order first.
std::span<const RawExponent> raw_exponents(int max_order);

/// Position of `exponent` in raw_exponents(kMaxMomentOrder).
std::size_t raw_index(const RawExponent& exponent);

/// All mode exponents for `num_modes` in {1, 2} up to max_order, lowest order first.
std::vector<ModeExponent> mode_exponents(int num_modes, int max_order);

/// "2,0,1,1"-style key. Single-mode exponents print two entries.
std::string exponent_key(std::span<const int> exponent);
std::vector<int> parse_exponent_key(std::string_view key);

/// Neumaier-compensated running sum.
class CompensatedSum {
 public:
  void add(double x) noexcept {
    const double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x)) {
      comp_ += (sum_ - t) + x;
    } else {
      comp_ += (x - t) + sum_;
    }
    sum_ = t;
  }
  void merge(const CompensatedSum& other) noexcept {
    add(other.sum_);
    add(other.comp_);
  }
  double value() const noexcept { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

/// Sample means of all quadrature monomials up to max_order together with
/// their standard errors. A set with count() == 0 holds exact values.
class RawMomentSet {
 public:
  RawMomentSet(int max_order, std::uint64_t count, std::vector<double> means, std::vector<double> standard_errors);

  /// Exact (noise-free) values; standard errors are zero.
  static RawMomentSet exact(int max_order, std::vector<double> values);

  int max_order() const noexcept { return max_order_; }
  std::uint64_t count() const noexcept { return count_; }
  bool is_exact() const noexcept { return count_ == 0; }

  double mean(const RawExponent& exponent) const;
  double standard_error(const RawExponent& exponent) const;
  std::span<const double> means() const noexcept { return means_; }
  std::span<const double> standard_errors() const noexcept { return errors_; }

  /// <(S1^*)^n1 S1^m1 (S2^*)^n2 S2^m2> with S_j = I_j + i Q_j.
  std::complex<double> path_moment(int n1, int m1, int n2, int m2) const;
  /// Upper bound on the standard error of path_moment (errors added linearly).
  double path_moment_error(int n1, int m1, int n2, int m2) const;

  /// Pooled set; associative up to rounding. Exact sets cannot be merged.
  static RawMomentSet merge(const RawMomentSet& a, const RawMomentSet& b);

 private:
  int max_order_;
  std::uint64_t count_;
  std::vector<double> means_;
  std::vector<double> errors_;
};

std::string to_json(const RawMomentSet& moments);
RawMomentSet raw_moments_from_json(std::string_view text);

/// Single-pass accumulator behind RawMomentSet. Merging is exact for the
/// compensated sums up to rounding of the final additions.
class MomentAccumulator {
 public:
  explicit MomentAccumulator(int max_order = kMaxMomentOrder);

  void add(double i1, double q1, double i2, double q2);
  void merge(const MomentAccumulator& other);

  int max_order() const noexcept { return max_order_; }
  std::uint64_t count() const noexcept { return count_; }
  RawMomentSet finalize() const;

 private:
  int max_order_;
  std::uint64_t count_ = 0;
  std::vector<CompensatedSum> sums_;
  std::vector<CompensatedSum> squares_;
};

/// Normally ordered moments of one or two bosonic modes.
class SignalMomentSet {
 public:
  SignalMomentSet(int num_modes, int max_order);

  int num_modes() const noexcept { return num_modes_; }
  int max_order() const noexcept { return max_order_; }

  bool contains(const ModeExponent& exponent) const;
  std::complex<double> get(const ModeExponent& exponent) const;
  std::complex<double> get(int n, int m) const { return get(ModeExponent{n, m, 0, 0}); }
  void set(const ModeExponent& exponent, std::complex<double> value);
  void set(int n, int m, std::complex<double> value) { set(ModeExponent{n, m, 0, 0}, value); }

  const std::map<ModeExponent, std::complex<double>>& entries() const noexcept { return values_; }

  /// max |<x> - conj(<x^dag>)| over all entries present in both forms.
  double hermiticity_defect() const;
  /// Replaces each pair by the average of <x> and conj(<x^dag>).
  void symmetrize();
  /// True when every exponent up to max_order is present.
  bool is_complete() const;

  /// Moments of the mean-shifted operators a - <a>, b - <b>.
  SignalMomentSet central() const;

 private:
  void check_exponent(const ModeExponent& exponent) const;

  int num_modes_;
  int max_order_;
  std::map<ModeExponent, std::complex<double>> values_;
};

std::string to_json(const SignalMomentSet& moments);
SignalMomentSet signal_moments_from_json(std::string_view text);

/// E[prod_i f_i^T x] for x ~ N(mean, cov) and complex linear functionals
/// f_i, by Isserlis' theorem with nonzero mean. The pairing is bilinear
/// (no conjugation), so products of z and conj(z) are written out as
/// separate functionals.
std::complex<double> gaussian_product_moment(std::span<const Eigen::VectorXcd> functionals,
                                             const Eigen::VectorXd& mean, const Eigen::MatrixXd& cov);

double binomial(int n, int k);

}  // namespace dsq
