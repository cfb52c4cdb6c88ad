#include "dsq/physicality.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <numeric>
#include <optional>

#include "dsq/errors.hpp"

namespace dsq {
namespace {

using cd = std::complex<double>;
using Word = std::vector<Letter>;

void expand(Word word, double coeff, std::map<ModeExponent, double>& out) {
  for (std::size_t i = 0; i + 1 < word.size(); ++i) {
    if (!word[i].creation && word[i + 1].creation) {
      const bool same_mode = word[i].mode == word[i + 1].mode;
      if (same_mode) {
        Word contracted;
        contracted.insert(contracted.end(), word.begin(), word.begin() + static_cast<std::ptrdiff_t>(i));
        contracted.insert(contracted.end(), word.begin() + static_cast<std::ptrdiff_t>(i + 2), word.end());
        expand(std::move(contracted), coeff, out);
      }
      std::swap(word[i], word[i + 1]);
      expand(std::move(word), coeff, out);
      return;
    }
  }
  ModeExponent e{0, 0, 0, 0};
  for (const auto& l : word) ++e[2 * l.mode + (l.creation ? 0 : 1)];
  out[e] += coeff;
}

Word adjoint(const Word& w) {
  Word out(w.rbegin(), w.rend());
  for (auto& l : out) l.creation = !l.creation;
  return out;
}

std::vector<Word> heisenberg_basis(int modes) {
  const Letter a{0, false}, ad{0, true}, b{1, false}, bd{1, true};
  if (modes == 1) return {{}, {a}, {ad}, {a, a}, {ad, a}, {ad, ad}};
  return {{},      {a},      {ad},      {b},      {bd},     {a, a},   {ad, a},  {ad, ad},
          {b, b},  {bd, b},  {bd, bd},  {a, b},   {ad, b},  {a, bd},  {ad, bd}};
}

struct MatrixSummary {
  double min_eigenvalue;
  double min_eigenvalue_order2;
  double hermiticity_defect;
  double scale;
};

MatrixSummary summarize(const SignalMomentSet& moments) {
  if (moments.max_order() < 4 || !moments.is_complete()) {
    throw InvalidArgument("Heisenberg check needs a complete moment set up to order 4");
  }
  const SignalMomentSet c = moments.central();
  const auto basis = heisenberg_basis(moments.num_modes());
  const auto n = static_cast<Eigen::Index>(basis.size());
  Eigen::MatrixXcd m(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      Word w = adjoint(basis[static_cast<std::size_t>(i)]);
      const auto& right = basis[static_cast<std::size_t>(j)];
      w.insert(w.end(), right.begin(), right.end());
      cd value = 0.0;
      for (const auto& [e, coeff] : normal_order(w)) value += coeff * c.get(e);
      m(i, j) = value;
    }
  }
  MatrixSummary out{};
  out.scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  out.hermiticity_defect = (m - m.adjoint()).cwiseAbs().maxCoeff();
  const Eigen::MatrixXcd h = 0.5 * (m + m.adjoint());
  out.min_eigenvalue = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd>(h, Eigen::EigenvaluesOnly).eigenvalues()(0);
  const Eigen::Index k = 1 + 2 * moments.num_modes();
  out.min_eigenvalue_order2 =
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd>(h.topLeftCorner(k, k), Eigen::EigenvaluesOnly).eigenvalues()(0);
  return out;
}

HeisenbergReport to_report(const MatrixSummary& s, double allowance) {
  HeisenbergReport r;
  r.min_eigenvalue = s.min_eigenvalue;
  r.min_eigenvalue_order2 = s.min_eigenvalue_order2;
  r.hermitian = s.hermiticity_defect <= 1e-9 * s.scale;
  if (!r.hermitian) {
    r.reason = "moment matrix is not Hermitian";
  } else if (s.min_eigenvalue_order2 < -allowance) {
    r.reason = "second-order moment matrix has a negative eigenvalue";
  } else if (s.min_eigenvalue < -allowance) {
    r.reason = "fourth-order moment matrix has a negative eigenvalue";
  }
  r.pass = r.reason.empty();
  return r;
}

// Central moment of commuting variables from a lookup of raw moments.
cd central_moment(const std::array<int, 4>& e, const std::array<cd, 4>& mu,
                  const std::function<cd(const std::array<int, 4>&)>& raw) {
  cd sum = 0.0;
  for (int k0 = 0; k0 <= e[0]; ++k0)
    for (int k1 = 0; k1 <= e[1]; ++k1)
      for (int k2 = 0; k2 <= e[2]; ++k2)
        for (int k3 = 0; k3 <= e[3]; ++k3) {
          const std::array<int, 4> k{k0, k1, k2, k3};
          cd term = raw(k);
          for (std::size_t v = 0; v < 4; ++v) {
            term *= binomial(e[v], k[v]) * std::pow(-mu[v], e[v] - k[v]);
          }
          sum += term;
        }
  return sum;
}

// Set partitions of {0, ..., n-1} as block labels, blocks numbered in order of first use.
void partitions(int n, std::vector<int>& labels, int used, std::vector<std::vector<int>>& out) {
  const auto pos = static_cast<int>(labels.size());
  if (pos == n) {
    out.push_back(labels);
    return;
  }
  for (int b = 0; b <= used; ++b) {
    labels.push_back(b);
    partitions(n, labels, std::max(used, b + 1), out);
    labels.pop_back();
  }
}

const std::vector<std::vector<int>>& partitions_of(int n) {
  static const auto table = [] {
    std::array<std::vector<std::vector<int>>, 5> t;
    for (int k = 1; k <= 4; ++k) {
      std::vector<int> labels;
      partitions(k, labels, 0, t[static_cast<std::size_t>(k)]);
    }
    return t;
  }();
  return table.at(static_cast<std::size_t>(n));
}

// Joint cumulant from central moments (singleton blocks vanish).
cd cumulant(const std::array<int, 4>& e, const std::function<cd(const std::array<int, 4>&)>& central) {
  std::vector<int> vars;
  for (int v = 0; v < 4; ++v)
    for (int k = 0; k < e[static_cast<std::size_t>(v)]; ++k) vars.push_back(v);
  const int n = static_cast<int>(vars.size());
  cd sum = 0.0;
  for (const auto& labels : partitions_of(n)) {
    const int blocks = *std::max_element(labels.begin(), labels.end()) + 1;
    std::vector<std::array<int, 4>> block_exp(static_cast<std::size_t>(blocks), std::array<int, 4>{});
    for (int i = 0; i < n; ++i) ++block_exp[static_cast<std::size_t>(labels[i])][static_cast<std::size_t>(vars[i])];
    bool singleton = false;
    for (const auto& b : block_exp) singleton = singleton || total_order(b) == 1;
    if (singleton) continue;
    cd product = 1.0;
    for (const auto& b : block_exp) product *= central(b);
    const double weight = (blocks % 2 == 1 ? 1.0 : -1.0) * std::tgamma(blocks);
    sum += weight * product;
  }
  return sum;
}

std::vector<std::array<int, 4>> cumulant_exponents(int num_vars) {
  std::vector<std::array<int, 4>> out;
  for (int k = 3; k <= 4; ++k) {
    for (const auto& e : mode_exponents(2, k)) {
      if (total_order(e) != k) continue;
      bool ok = true;
      for (int v = num_vars; v < 4; ++v) ok = ok && e[static_cast<std::size_t>(v)] == 0;
      if (ok) out.push_back(e);
    }
  }
  return out;
}

std::vector<cd> signal_cumulants(const SignalMomentSet& moments, const std::vector<std::array<int, 4>>& exps) {
  const SignalMomentSet c = moments.central();
  const auto central = [&](const std::array<int, 4>& e) { return c.get(e); };
  std::vector<cd> out;
  out.reserve(exps.size());
  for (const auto& e : exps) out.push_back(cumulant(e, central));
  return out;
}

std::vector<cd> raw_cumulants(const RawMomentSet& moments, const std::vector<std::array<int, 4>>& exps) {
  std::array<cd, 4> mu{};
  for (std::size_t v = 0; v < 4; ++v) {
    RawExponent unit{0, 0, 0, 0};
    unit[v] = 1;
    mu[v] = moments.mean(unit);
  }
  const std::function<cd(const std::array<int, 4>&)> raw = [&](const std::array<int, 4>& e) -> cd {
    return moments.mean(e);
  };
  const auto central = [&](const std::array<int, 4>& e) { return central_moment(e, mu, raw); };
  std::vector<cd> out;
  out.reserve(exps.size());
  for (const auto& e : exps) out.push_back(cumulant(e, central));
  return out;
}

GaussianityReport assemble(const std::vector<std::array<int, 4>>& exps, const std::vector<cd>& full,
                           const std::vector<std::vector<cd>>& replicates, double scale,
                           const GaussianityOptions& options) {
  GaussianityReport report;
  report.pass = true;
  const double allowance = options.exact_tolerance * std::max(1.0, scale);
  for (std::size_t i = 0; i < exps.size(); ++i) {
    Cumulant c;
    c.exponent = exps[i];
    c.value = full[i];
    if (!replicates.empty()) {
      std::vector<cd> values;
      values.reserve(replicates.size());
      for (const auto& r : replicates) values.push_back(r[i]);
      c.standard_error = jackknife_error(values);
    }
    const double bound = options.k_sigma * c.standard_error + allowance;
    const double ratio = std::abs(c.value) / bound;
    report.worst_ratio = std::max(report.worst_ratio, ratio);
    if (!(std::abs(c.value) <= bound)) report.pass = false;
    report.cumulants.push_back(c);
  }
  return report;
}

double max_magnitude(const SignalMomentSet& s) {
  double m = 0.0;
  for (const auto& [e, v] : s.entries()) m = std::max(m, std::abs(v));
  return m;
}

void check_options(const GaussianityOptions& options) {
  if (!(options.k_sigma > 0.0) || !(options.exact_tolerance >= 0.0)) {
    throw InvalidArgument("Gaussianity thresholds must be positive");
  }
}

}  // namespace

std::vector<std::pair<ModeExponent, double>> normal_order(std::span<const Letter> word) {
  std::map<ModeExponent, double> terms;
  expand(Word(word.begin(), word.end()), 1.0, terms);
  return {terms.begin(), terms.end()};
}

HeisenbergReport heisenberg_check(const SignalMomentSet& moments, double tolerance) {
  if (!(tolerance >= 0.0)) throw InvalidArgument("tolerance must be non-negative");
  const auto s = summarize(moments);
  return to_report(s, tolerance * s.scale);
}

HeisenbergReport heisenberg_check(const SignalMomentSet& moments, std::span<const SignalMomentSet> replicates,
                                  double k_sigma) {
  if (replicates.size() < 2) throw InvalidArgument("jackknife needs at least two replicates");
  if (!(k_sigma >= 0.0)) throw InvalidArgument("k_sigma must be non-negative");
  const auto s = summarize(moments);
  std::vector<double> mins;
  mins.reserve(replicates.size());
  for (const auto& r : replicates) mins.push_back(summarize(r).min_eigenvalue);
  const double se = jackknife_error(mins);
  auto report = to_report(s, k_sigma * se + 1e-9 * s.scale);
  report.min_eigenvalue_error = se;
  return report;
}

GaussianityReport gaussianity_check(const SignalMomentSet& moments, const GaussianityOptions& options) {
  return gaussianity_check(moments, std::span<const SignalMomentSet>{}, options);
}

GaussianityReport gaussianity_check(const SignalMomentSet& moments, std::span<const SignalMomentSet> replicates,
                                    const GaussianityOptions& options) {
  check_options(options);
  if (moments.max_order() < 4 || !moments.is_complete()) {
    throw InvalidArgument("Gaussianity check needs a complete moment set up to order 4");
  }
  if (replicates.size() == 1) throw InvalidArgument("jackknife needs at least two replicates");
  const auto exps = cumulant_exponents(2 * moments.num_modes());
  std::vector<std::vector<cd>> reps;
  for (const auto& r : replicates) reps.push_back(signal_cumulants(r, exps));
  return assemble(exps, signal_cumulants(moments, exps), reps, max_magnitude(moments), options);
}

GaussianityReport gaussianity_check(std::span<const RawMomentSet> blocks, const GaussianityOptions& options) {
  check_options(options);
  if (blocks.size() < 2) throw InvalidArgument("Gaussianity check needs at least two blocks");
  for (const auto& b : blocks) {
    if (b.max_order() < 4) throw InvalidArgument("Gaussianity check needs moments up to order 4");
  }
  const auto exps = cumulant_exponents(4);
  const auto replicates = leave_one_out(blocks);
  RawMomentSet full = blocks[0];
  for (std::size_t i = 1; i < blocks.size(); ++i) full = RawMomentSet::merge(full, blocks[i]);
  std::vector<std::vector<cd>> reps;
  for (const auto& r : replicates) reps.push_back(raw_cumulants(r, exps));
  double scale = 0.0;
  for (double v : full.means()) scale = std::max(scale, std::abs(v));
  return assemble(exps, raw_cumulants(full, exps), reps, scale, options);
}

GaussianityReport gaussianity_check(const QuadratureBatch& batch, const GaussianityOptions& options) {
  std::vector<RawMomentSet> blocks;
  for (const auto& acc : accumulate_moment_blocks(batch, options.n_blocks)) blocks.push_back(acc.finalize());
  return gaussianity_check(blocks, options);
}

double jackknife_error(std::span<const double> replicates) {
  const auto n = static_cast<double>(replicates.size());
  if (replicates.size() < 2) throw InvalidArgument("jackknife needs at least two replicates");
  const double mean = std::accumulate(replicates.begin(), replicates.end(), 0.0) / n;
  double ss = 0.0;
  for (double r : replicates) ss += (r - mean) * (r - mean);
  return std::sqrt((n - 1.0) / n * ss);
}

double jackknife_error(std::span<const std::complex<double>> replicates) {
  const auto n = static_cast<double>(replicates.size());
  if (replicates.size() < 2) throw InvalidArgument("jackknife needs at least two replicates");
  const cd mean = std::accumulate(replicates.begin(), replicates.end(), cd(0.0)) / n;
  double ss = 0.0;
  for (const cd& r : replicates) ss += std::norm(r - mean);
  return std::sqrt((n - 1.0) / n * ss);
}

std::vector<RawMomentSet> leave_one_out(std::span<const RawMomentSet> blocks) {
  if (blocks.size() < 2) throw InvalidArgument("leave-one-out needs at least two blocks");
  std::vector<RawMomentSet> out;
  out.reserve(blocks.size());
  for (std::size_t skip = 0; skip < blocks.size(); ++skip) {
    std::optional<RawMomentSet> pooled;
    for (std::size_t i = 0; i < blocks.size(); ++i) {
      if (i == skip) continue;
      pooled = pooled ? RawMomentSet::merge(*pooled, blocks[i]) : blocks[i];
    }
    out.push_back(*pooled);
  }
  return out;
}

}  // namespace dsq
