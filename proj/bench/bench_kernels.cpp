// Serial reference against the OpenMP kernels on trajectory-sized batches.

#include <benchmark/benchmark.h>

#include <random>

#include "obsv/kernels.hpp"

using namespace obsv;

namespace {

PmsmParams ipmsm() { return {0.01, 0.02, 0.1, 0.5, 4, 1e-3, 0.0}; }

std::vector<PmsmSampleInput> pmsm_batch(std::size_t n) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> cur(-20, 20), rate(-2000, 2000), w(-500, 500);
  std::vector<PmsmSampleInput> v(n);
  for (auto& s : v) s = {{cur(rng), cur(rng), rate(rng), rate(rng)}, w(rng)};
  return v;
}

void BM_PmsmSerial(benchmark::State& state) {
  const auto in = pmsm_batch(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(evaluate_pmsm_serial(in, ipmsm(), 1e-6));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_PmsmParallel(benchmark::State& state) {
  const auto in = pmsm_batch(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(evaluate_pmsm_parallel(in, ipmsm(), 1e-6));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_OracleSerial(benchmark::State& state) {
  const auto pts = random_oracle_points(static_cast<std::size_t>(state.range(0)), 3);
  for (auto _ : state) benchmark::DoNotOptimize(compare_oracle_serial(pts));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_OracleParallel(benchmark::State& state) {
  const auto pts = random_oracle_points(static_cast<std::size_t>(state.range(0)), 3);
  for (auto _ : state) benchmark::DoNotOptimize(compare_oracle_parallel(pts));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

}  // namespace

BENCHMARK(BM_PmsmSerial)->Arg(5001)->Arg(100001);
BENCHMARK(BM_PmsmParallel)->Arg(5001)->Arg(100001);
BENCHMARK(BM_OracleSerial)->Arg(200);
BENCHMARK(BM_OracleParallel)->Arg(200);

BENCHMARK_MAIN();
