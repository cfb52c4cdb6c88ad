#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

#include <Eigen/Dense>

#include "dsq/devices.hpp"
#include "dsq/gaussian_state.hpp"
#include "dsq/moments.hpp"

namespace dsq {

/// One digitised shot of both detection paths.
struct QuadratureRecord {
  double i1 = 0.0;
  double q1 = 0.0;
  double i2 = 0.0;
  double q2 = 0.0;
};

struct QuadratureBatch {
  std::vector<QuadratureRecord> samples;
  std::uint64_t seed = 0;
  DetectionChain chain;

  std::size_t count() const noexcept { return samples.size(); }
};

/// Samples are drawn in fixed-size chunks, each with its own generator
/// seeded from (seed, chunk index). Batch contents therefore depend only on
/// the seed and the sample count.
inline constexpr std::size_t kSamplesPerChunk = 256;

/// Joint Gaussian law of (I1, Q1, I2, Q2) for a signal entering the hybrid
/// ring. Path j records S_j = sqrt(g_j) (c_j + h_j^dag) with c_j the ring
/// outputs and h_j a thermal noise mode of the configured occupation.
struct DetectionDistribution {
  Eigen::Vector4d mean;
  Eigen::Matrix4d cov;
};

DetectionDistribution detection_distribution(const GaussianState& input, const DetectionChain& chain);

QuadratureBatch simulate_detection(const GaussianState& input, const DetectionChain& chain, std::uint64_t n_samples,
                                   std::uint64_t seed);

/// Same samples as simulate_detection, accumulated directly into
/// `n_blocks` contiguous, chunk-aligned blocks without storing them.
/// Fewer blocks are returned if there are fewer chunks than requested.
std::vector<MomentAccumulator> simulate_moment_blocks(const GaussianState& input, const DetectionChain& chain,
                                                      std::uint64_t n_samples, std::uint64_t seed,
                                                      std::size_t n_blocks, int max_order = kMaxMomentOrder);

RawMomentSet accumulate_moments(const QuadratureBatch& batch, int max_order = kMaxMomentOrder);

/// Per-block accumulators over contiguous sample ranges of a stored batch.
std::vector<MomentAccumulator> accumulate_moment_blocks(const QuadratureBatch& batch, std::size_t n_blocks,
                                                        int max_order = kMaxMomentOrder);

/// Noise-free raw moments of the detection model (infinite sample limit).
RawMomentSet expected_raw_moments(const GaussianState& input, const DetectionChain& chain,
                                  int max_order = kMaxMomentOrder);

/// SplitMix64 mixing of a base seed with a stream identifier.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

/// CSV with '#' header lines carrying seed, count and chain parameters.
void write_batch_csv(std::ostream& out, const QuadratureBatch& batch);
QuadratureBatch read_batch_csv(std::istream& in);

}  // namespace dsq
