#include <benchmark/benchmark.h>

#include "dsq/detection.hpp"
#include "dsq/physicality.hpp"
#include "dsq/reconstruction.hpp"

using namespace dsq;

namespace {

const DetectionChain kChain{1.0, 1.0, 10.0, 10.0, 0.0};

void BM_SimulateMomentBlocks(benchmark::State& state) {
  const GaussianState in = jpa_emit(JpaParams::representative());
  const auto n = static_cast<std::uint64_t>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(simulate_moment_blocks(in, kChain, n, 1, 16));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_SimulateMomentBlocks)->Arg(1 << 16)->Arg(1 << 20)->Unit(benchmark::kMillisecond);

void BM_AccumulateMoments(benchmark::State& state) {
  const QuadratureBatch batch =
      simulate_detection(jpa_emit(JpaParams::representative()), kChain, static_cast<std::uint64_t>(state.range(0)), 2);
  for (auto _ : state) benchmark::DoNotOptimize(accumulate_moments(batch));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_AccumulateMoments)->Arg(1 << 16)->Unit(benchmark::kMillisecond);

void BM_Dpm(benchmark::State& state) {
  const RawMomentSet m = expected_raw_moments(jpa_emit(JpaParams::representative()), kChain);
  for (auto _ : state) benchmark::DoNotOptimize(dpm_reconstruct(m, kChain));
}
BENCHMARK(BM_Dpm);

void BM_Rsm(benchmark::State& state) {
  const RawMomentSet m = expected_raw_moments(jpa_emit(JpaParams::representative()), kChain);
  const RawMomentSet ref = expected_raw_moments(vacuum(1), kChain);
  for (auto _ : state) benchmark::DoNotOptimize(rsm_reconstruct(m, ref, kChain));
}
BENCHMARK(BM_Rsm);

void BM_Negativity(benchmark::State& state) {
  const GaussianState split = hybrid_ring_split(jpa_emit(JpaParams::representative()));
  for (auto _ : state) benchmark::DoNotOptimize(negativity(split));
}
BENCHMARK(BM_Negativity);

void BM_HeisenbergCheck(benchmark::State& state) {
  const SignalMomentSet m = normal_ordered_moments(hybrid_ring_split(jpa_emit(JpaParams::representative())));
  for (auto _ : state) benchmark::DoNotOptimize(heisenberg_check(m));
}
BENCHMARK(BM_HeisenbergCheck);

}  // namespace

BENCHMARK_MAIN();
