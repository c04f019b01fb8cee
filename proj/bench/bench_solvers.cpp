#include <benchmark/benchmark.h>

#include "offload/aco.hpp"
#include "offload/cost_sim.hpp"
#include "offload/pareto.hpp"

using namespace offload;

namespace {

DualPlacementGraph weighted(int n_methods) {
  Rng rng = ant_stream(42, 0, static_cast<std::uint64_t>(n_methods));
  DualPlacementGraph d = transform(random_callgraph(rng, n_methods, 0.1));
  assign_random_weights(d, rng);
  return d;
}

AcoParams params() {
  AcoParams p;
  p.n_ants = 32;
  p.n_iterations = 100;
  return p;
}

void BM_AcoSerial(benchmark::State& state) {
  const auto d = weighted(static_cast<int>(state.range(0)));
  const auto p = params();
  for (auto _ : state) benchmark::DoNotOptimize(solve_serial(d, p));
}

void BM_AcoParallel(benchmark::State& state) {
  const auto d = weighted(static_cast<int>(state.range(0)));
  const auto p = params();
  const int threads = static_cast<int>(state.range(1));
  for (auto _ : state) benchmark::DoNotOptimize(solve(d, p, nullptr, threads));
}

void BM_FrontEnumerate(benchmark::State& state) {
  const auto d = weighted(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(pareto_front(d));
}

void BM_FrontLabels(benchmark::State& state) {
  const auto d = weighted(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(pareto_front_labels(d));
}

}  // namespace

BENCHMARK(BM_AcoSerial)->Arg(10)->Arg(20)->Arg(40)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_AcoParallel)
    ->ArgsProduct({{10, 20, 40}, {2, 4, 8}})
    ->Unit(benchmark::kMillisecond)
    ->UseRealTime();
BENCHMARK(BM_FrontEnumerate)->DenseRange(6, 14, 4)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_FrontLabels)->DenseRange(6, 14, 4)->Unit(benchmark::kMicrosecond);

BENCHMARK_MAIN();
