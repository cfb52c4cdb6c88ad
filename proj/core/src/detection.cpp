#include "dsq/detection.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <istream>
#include <map>
#include <ostream>
#include <random>
#include <sstream>
#include <string>

#include "dsq/errors.hpp"
#include "parallel.hpp"

namespace dsq {
namespace {

struct Sampler {
  Eigen::Vector4d mean;
  Eigen::Matrix4d factor;
};

Sampler make_sampler(const GaussianState& input, const DetectionChain& chain) {
  const auto dist = detection_distribution(input, chain);
  Eigen::LLT<Eigen::Matrix4d> llt(dist.cov);
  if (llt.info() != Eigen::Success) throw DegenerateState("detection covariance is not positive definite");
  return {dist.mean, llt.matrixL()};
}

template <typename Sink>
void draw_chunk(const Sampler& sampler, std::uint64_t seed, std::uint64_t chunk, std::uint64_t first,
                std::uint64_t last, Sink&& sink) {
  std::mt19937_64 rng(derive_seed(seed, chunk));
  std::normal_distribution<double> normal;
  for (std::uint64_t s = first; s < last; ++s) {
    const Eigen::Vector4d z(normal(rng), normal(rng), normal(rng), normal(rng));
    const Eigen::Vector4d x = sampler.mean + sampler.factor * z;
    sink(x(0), x(1), x(2), x(3));
  }
}

std::uint64_t chunk_count(std::uint64_t n_samples) {
  return (n_samples + kSamplesPerChunk - 1) / kSamplesPerChunk;
}

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

double parse_double(const std::string& text) {
  try {
    std::size_t used = 0;
    const double v = std::stod(text, &used);
    if (used != text.size()) throw InvalidArgument("trailing characters in number '" + text + "'");
    return v;
  } catch (const std::logic_error&) {
    throw InvalidArgument("malformed number '" + text + "'");
  }
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

DetectionDistribution detection_distribution(const GaussianState& input, const DetectionChain& chain) {
  chain.validate();
  const GaussianState split = hybrid_ring_split(input);
  const Eigen::Vector4d scale(std::sqrt(chain.gain_1), std::sqrt(chain.gain_1), std::sqrt(chain.gain_2),
                              std::sqrt(chain.gain_2));
  Eigen::Matrix4d noise = Eigen::Matrix4d::Zero();
  noise.topLeftCorner<2, 2>() = (2.0 * chain.noise_photons_1 + 1.0) * kVacuumVariance * Eigen::Matrix2d::Identity();
  noise.bottomRightCorner<2, 2>() = (2.0 * chain.noise_photons_2 + 1.0) * kVacuumVariance * Eigen::Matrix2d::Identity();
  DetectionDistribution out;
  out.mean = scale.cwiseProduct(split.mean());
  out.cov = scale.asDiagonal() * (split.cov() + noise) * scale.asDiagonal();
  return out;
}

QuadratureBatch simulate_detection(const GaussianState& input, const DetectionChain& chain, std::uint64_t n_samples,
                                   std::uint64_t seed) {
  if (n_samples == 0) throw InvalidArgument("sample count must be positive");
  const Sampler sampler = make_sampler(input, chain);
  QuadratureBatch batch;
  batch.seed = seed;
  batch.chain = chain;
  batch.samples.resize(n_samples);
  detail::parallel_for(chunk_count(n_samples), [&](std::size_t chunk) {
    const std::uint64_t first = chunk * kSamplesPerChunk;
    const std::uint64_t last = std::min<std::uint64_t>(first + kSamplesPerChunk, n_samples);
    std::uint64_t s = first;
    draw_chunk(sampler, seed, chunk, first, last,
               [&](double i1, double q1, double i2, double q2) { batch.samples[s++] = {i1, q1, i2, q2}; });
  });
  return batch;
}

std::vector<MomentAccumulator> simulate_moment_blocks(const GaussianState& input, const DetectionChain& chain,
                                                      std::uint64_t n_samples, std::uint64_t seed,
                                                      std::size_t n_blocks, int max_order) {
  if (n_samples == 0) throw InvalidArgument("sample count must be positive");
  if (n_blocks == 0) throw InvalidArgument("block count must be positive");
  const Sampler sampler = make_sampler(input, chain);
  const std::uint64_t chunks = chunk_count(n_samples);
  const std::size_t blocks = static_cast<std::size_t>(std::min<std::uint64_t>(n_blocks, chunks));
  std::vector<MomentAccumulator> out(blocks, MomentAccumulator(max_order));
  detail::parallel_for(blocks, [&](std::size_t b) {
    const std::uint64_t chunk_begin = b * chunks / blocks;
    const std::uint64_t chunk_end = (b + 1) * chunks / blocks;
    auto& acc = out[b];
    for (std::uint64_t c = chunk_begin; c < chunk_end; ++c) {
      const std::uint64_t first = c * kSamplesPerChunk;
      const std::uint64_t last = std::min<std::uint64_t>(first + kSamplesPerChunk, n_samples);
      draw_chunk(sampler, seed, c, first, last,
                 [&](double i1, double q1, double i2, double q2) { acc.add(i1, q1, i2, q2); });
    }
  });
  return out;
}

RawMomentSet accumulate_moments(const QuadratureBatch& batch, int max_order) {
  if (batch.samples.empty()) throw InvalidArgument("cannot accumulate moments of an empty batch");
  MomentAccumulator acc(max_order);
  for (const auto& s : batch.samples) acc.add(s.i1, s.q1, s.i2, s.q2);
  return acc.finalize();
}

std::vector<MomentAccumulator> accumulate_moment_blocks(const QuadratureBatch& batch, std::size_t n_blocks,
                                                        int max_order) {
  if (batch.samples.empty()) throw InvalidArgument("cannot accumulate moments of an empty batch");
  if (n_blocks == 0 || n_blocks > batch.samples.size()) throw InvalidArgument("invalid block count");
  std::vector<MomentAccumulator> out(n_blocks, MomentAccumulator(max_order));
  const std::size_t n = batch.samples.size();
  for (std::size_t b = 0; b < n_blocks; ++b) {
    for (std::size_t s = b * n / n_blocks; s < (b + 1) * n / n_blocks; ++s) {
      const auto& r = batch.samples[s];
      out[b].add(r.i1, r.q1, r.i2, r.q2);
    }
  }
  return out;
}

RawMomentSet expected_raw_moments(const GaussianState& input, const DetectionChain& chain, int max_order) {
  const auto dist = detection_distribution(input, chain);
  // Raw exponent order (I1, I2, Q1, Q2) against sample order (I1, Q1, I2, Q2).
  constexpr std::array<Eigen::Index, 4> kSlot{0, 2, 1, 3};
  const auto exps = raw_exponents(max_order);
  std::vector<double> values(exps.size());
  for (std::size_t i = 0; i < exps.size(); ++i) {
    std::vector<Eigen::VectorXcd> functionals;
    for (std::size_t v = 0; v < 4; ++v) {
      Eigen::VectorXcd unit = Eigen::VectorXcd::Zero(4);
      unit(kSlot[v]) = 1.0;
      for (int k = 0; k < exps[i][v]; ++k) functionals.push_back(unit);
    }
    values[i] = gaussian_product_moment(functionals, dist.mean, dist.cov).real();
  }
  values[0] = 1.0;
  return RawMomentSet::exact(max_order, std::move(values));
}

void write_batch_csv(std::ostream& out, const QuadratureBatch& batch) {
  out << "# dsq quadrature batch v1\n";
  out << "# seed=" << batch.seed << "\n";
  out << "# count=" << batch.count() << "\n";
  out << "# gain_1=" << format_double(batch.chain.gain_1) << "\n";
  out << "# gain_2=" << format_double(batch.chain.gain_2) << "\n";
  out << "# noise_photons_1=" << format_double(batch.chain.noise_photons_1) << "\n";
  out << "# noise_photons_2=" << format_double(batch.chain.noise_photons_2) << "\n";
  out << "# gain_error=" << format_double(batch.chain.gain_error) << "\n";
  out << "I1,Q1,I2,Q2\n";
  for (const auto& s : batch.samples) {
    out << format_double(s.i1) << ',' << format_double(s.q1) << ',' << format_double(s.i2) << ','
        << format_double(s.q2) << '\n';
  }
}

QuadratureBatch read_batch_csv(std::istream& in) {
  std::map<std::string, std::string> header;
  std::string line;
  bool saw_columns = false;
  QuadratureBatch batch;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (line.front() == '#') {
      const auto eq = line.find('=');
      if (eq != std::string::npos) header[line.substr(2, eq - 2)] = line.substr(eq + 1);
      continue;
    }
    if (!saw_columns) {
      if (line != "I1,Q1,I2,Q2") throw InvalidArgument("unexpected batch CSV column header");
      saw_columns = true;
      continue;
    }
    std::array<double, 4> v{};
    std::stringstream fields(line);
    std::string field;
    for (std::size_t k = 0; k < 4; ++k) {
      if (!std::getline(fields, field, ',')) throw InvalidArgument("batch CSV row has fewer than 4 fields");
      v[k] = parse_double(field);
      if (!std::isfinite(v[k])) throw InvalidArgument("batch CSV contains non-finite values");
    }
    batch.samples.push_back({v[0], v[1], v[2], v[3]});
  }
  const auto need = [&](const char* key) -> const std::string& {
    const auto it = header.find(key);
    if (it == header.end()) throw InvalidArgument(std::string("batch CSV header lacks ") + key);
    return it->second;
  };
  batch.seed = std::stoull(need("seed"));
  batch.chain.gain_1 = parse_double(need("gain_1"));
  batch.chain.gain_2 = parse_double(need("gain_2"));
  batch.chain.noise_photons_1 = parse_double(need("noise_photons_1"));
  batch.chain.noise_photons_2 = parse_double(need("noise_photons_2"));
  batch.chain.gain_error = parse_double(need("gain_error"));
  if (std::stoull(need("count")) != batch.samples.size()) {
    throw InvalidArgument("batch CSV count does not match the number of rows");
  }
  return batch;
}

}  // namespace dsq
