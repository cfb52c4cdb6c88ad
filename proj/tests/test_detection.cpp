#include <cmath>
#include <numbers>
#include <sstream>

#include <gtest/gtest.h>

#include "dsq/detection.hpp"
#include "dsq/errors.hpp"

using namespace dsq;

namespace {

const GaussianState& squeezed_input() {
  static const GaussianState st =
      displace(jpa_emit(JpaParams::representative()), 0, DisplacementParams(2.0, std::numbers::pi / 4.0));
  return st;
}

}  // namespace

TEST(Detection, NoiselessVacuumIsHeterodyneLimited) {
  // Each quadrature carries the vacuum of the ring output plus the vacuum
  // of the amplifier mode: 0.25 + 0.25.
  const auto dist = detection_distribution(vacuum(1), DetectionChain{});
  EXPECT_LE((dist.cov - 0.5 * Eigen::Matrix4d::Identity()).cwiseAbs().maxCoeff(), 1e-15);

  const RawMomentSet m = accumulate_moments(simulate_detection(vacuum(1), DetectionChain{}, 1'000'000, 1));
  for (const RawExponent e : {RawExponent{2, 0, 0, 0}, RawExponent{0, 0, 2, 0}}) {
    EXPECT_NEAR(m.mean(e), 0.5, 3.0 * m.standard_error(e));
  }
  EXPECT_NEAR(m.mean({1, 0, 1, 0}), 0.0, 3.0 * m.standard_error({1, 0, 1, 0}));
}

TEST(Detection, AddedNoiseVarianceBookkeeping) {
  const DetectionChain chain{2.0, 3.0, 10.0, 4.0, 0.0};
  const auto dist = detection_distribution(vacuum(1), chain);
  EXPECT_NEAR(dist.cov(0, 0), 2.0 * 0.25 * (2 * 10 + 1 + 1), 1e-12);
  EXPECT_NEAR(dist.cov(2, 2), 3.0 * 0.25 * (2 * 4 + 1 + 1), 1e-12);
  EXPECT_NEAR(dist.cov(0, 2), 0.0, 1e-15);

  const RawMomentSet m = accumulate_moments(simulate_detection(vacuum(1), chain, 200'000, 4));
  EXPECT_NEAR(m.mean({2, 0, 0, 0}), 11.0, 3.0 * m.standard_error({2, 0, 0, 0}));
  EXPECT_NEAR(m.mean({0, 2, 0, 0}), 7.5, 3.0 * m.standard_error({0, 2, 0, 0}));
}

TEST(Detection, SignalCorrelationsSurviveTheSplit) {
  // Ring outputs of a squeezed input are correlated; the noise is not.
  const DetectionChain chain{1.0, 1.0, 5.0, 5.0, 0.0};
  const auto dist = detection_distribution(squeezed_input(), chain);
  const GaussianState split = hybrid_ring_split(squeezed_input());
  EXPECT_NEAR(dist.cov(0, 2), split.cov()(0, 2), 1e-14);
  EXPECT_NEAR(dist.mean(0), split.mean()(0), 1e-14);
}

TEST(Detection, SameSeedSameBatch) {
  const DetectionChain chain{1.0, 1.0, 2.0, 2.0, 0.0};
  const auto a = simulate_detection(squeezed_input(), chain, 1000, 77);
  const auto b = simulate_detection(squeezed_input(), chain, 1000, 77);
  const auto c = simulate_detection(squeezed_input(), chain, 1000, 78);
  ASSERT_EQ(a.count(), 1000u);
  for (std::size_t i = 0; i < a.count(); ++i) {
    EXPECT_EQ(a.samples[i].i1, b.samples[i].i1);
    EXPECT_EQ(a.samples[i].q2, b.samples[i].q2);
  }
  EXPECT_NE(a.samples[0].i1, c.samples[0].i1);
  EXPECT_EQ(a.seed, 77u);
}

TEST(Detection, PrefixStability) {
  // Samples depend on (seed, chunk) only, so a longer batch extends a shorter one.
  const DetectionChain chain;
  const auto shorter = simulate_detection(vacuum(1), chain, 600, 5);
  const auto longer = simulate_detection(vacuum(1), chain, 1500, 5);
  for (std::size_t i = 0; i < shorter.count(); ++i) EXPECT_EQ(shorter.samples[i].q1, longer.samples[i].q1);
}

TEST(Detection, StreamedBlocksMatchStoredBatch) {
  const DetectionChain chain{1.5, 0.5, 3.0, 1.0, 0.0};
  const std::uint64_t n = 50'000;
  const RawMomentSet direct = accumulate_moments(simulate_detection(squeezed_input(), chain, n, 12));
  for (std::size_t blocks : {1u, 7u, 16u}) {
    auto accs = simulate_moment_blocks(squeezed_input(), chain, n, 12, blocks);
    ASSERT_EQ(accs.size(), blocks);
    for (std::size_t b = 1; b < accs.size(); ++b) accs[0].merge(accs[b]);
    const RawMomentSet pooled = accs[0].finalize();
    EXPECT_EQ(pooled.count(), n);
    for (std::size_t i = 0; i < direct.means().size(); ++i) {
      EXPECT_NEAR(pooled.means()[i], direct.means()[i], 1e-12 * std::max(1.0, std::abs(direct.means()[i])));
    }
  }
  // More blocks than chunks collapses to one block per chunk.
  EXPECT_EQ(simulate_moment_blocks(vacuum(1), chain, 300, 1, 16).size(), 2u);
}

TEST(Detection, ExpectedMomentsAgreeWithSampling) {
  const DetectionChain chain{1.0, 2.0, 3.0, 1.0, 0.0};
  const RawMomentSet exact = expected_raw_moments(squeezed_input(), chain);
  EXPECT_TRUE(exact.is_exact());
  auto accs = simulate_moment_blocks(squeezed_input(), chain, 400'000, 21, 4);
  for (std::size_t b = 1; b < accs.size(); ++b) accs[0].merge(accs[b]);
  const RawMomentSet sampled = accs[0].finalize();
  int outliers = 0;
  for (const auto& e : raw_exponents(4)) {
    if (total_order(e) == 0) continue;
    const double z = (sampled.mean(e) - exact.mean(e)) / sampled.standard_error(e);
    if (std::abs(z) > 4.5) ++outliers;
  }
  EXPECT_EQ(outliers, 0);
}

TEST(Detection, RejectsEmptyRequests) {
  EXPECT_THROW(simulate_detection(vacuum(1), DetectionChain{}, 0, 1), InvalidArgument);
  EXPECT_THROW(simulate_moment_blocks(vacuum(1), DetectionChain{}, 10, 1, 0), InvalidArgument);
  EXPECT_THROW(accumulate_moments(QuadratureBatch{}), InvalidArgument);
  EXPECT_THROW(simulate_detection(vacuum(2), DetectionChain{}, 10, 1), InvalidArgument);
}

TEST(Detection, BatchCsvRoundTrip) {
  const DetectionChain chain{1.25, 0.75, 2.0, 3.0, 0.01};
  const auto batch = simulate_detection(squeezed_input(), chain, 300, 99);
  std::stringstream text;
  write_batch_csv(text, batch);
  const auto back = read_batch_csv(text);
  ASSERT_EQ(back.count(), batch.count());
  EXPECT_EQ(back.seed, 99u);
  EXPECT_EQ(back.chain.gain_1, 1.25);
  EXPECT_EQ(back.chain.gain_error, 0.01);
  for (std::size_t i = 0; i < batch.count(); ++i) {
    EXPECT_EQ(back.samples[i].i1, batch.samples[i].i1);
    EXPECT_EQ(back.samples[i].q2, batch.samples[i].q2);
  }
}

TEST(Detection, BatchCsvRejectsDamage) {
  const auto batch = simulate_detection(vacuum(1), DetectionChain{}, 3, 1);
  std::stringstream text;
  write_batch_csv(text, batch);
  std::string s = text.str();
  std::stringstream truncated(s.substr(0, s.rfind('\n', s.size() - 2) + 1));
  EXPECT_THROW(read_batch_csv(truncated), InvalidArgument);
  std::stringstream garbage(s + "1,2,x,4\n");
  EXPECT_THROW(read_batch_csv(garbage), InvalidArgument);
  std::stringstream headerless("I1,Q1,I2,Q2\n1,2,3,4\n");
  EXPECT_THROW(read_batch_csv(headerless), InvalidArgument);
}

TEST(Detection, DerivedSeedsAreDistinct) {
  EXPECT_NE(derive_seed(1, 0), derive_seed(1, 1));
  EXPECT_NE(derive_seed(1, 0), derive_seed(2, 0));
  EXPECT_EQ(derive_seed(3, 4), derive_seed(3, 4));
}
