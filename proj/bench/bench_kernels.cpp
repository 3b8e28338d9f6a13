// Serial reference vs OpenMP kernels. Thread count is the benchmark argument
// for the parallel variants; wall time is reported since worker threads are
// invisible to the main-thread CPU clock.

#include <benchmark/benchmark.h>

#include "adamlab/experiments.hpp"
#include "adamlab/parallel.hpp"
#include "adamlab/vectorfield.hpp"

using namespace adamlab;

namespace {

EnsembleConfig ensemble_config() {
  EnsembleConfig c;
  c.sop = QuadraticSOP{two_point_mean_zero(-1.0, 0.1)};
  c.kind = OptimizerKind::adam(AdamHyperparams(0.9, 0.9, 1e-8));
  c.n_steps = 20'000;
  c.replications = 32;
  return c;
}

const QuadraticSOP kSop{two_point_mean_zero(-1.0, 0.1)};
const AdamHyperparams kHp(0.9, 0.9, 1e-8);
constexpr std::size_t kVfReps = 20'000;

void BM_EnsembleSerial(benchmark::State& state) {
  const EnsembleConfig c = ensemble_config();
  for (auto _ : state) benchmark::DoNotOptimize(serial::run_ensemble(c));
  state.SetItemsProcessed(state.iterations() * c.n_steps * c.replications);
}

void BM_EnsembleParallel(benchmark::State& state) {
  set_thread_count(static_cast<int>(state.range(0)));
  const EnsembleConfig c = ensemble_config();
  for (auto _ : state) benchmark::DoNotOptimize(run_ensemble(c));
  state.SetItemsProcessed(state.iterations() * c.n_steps * c.replications);
  set_thread_count(0);
}

void BM_VectorFieldSerial(benchmark::State& state) {
  const double th[1] = {0.03};
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        serial::estimate_vf(kSop, th, kHp, 1, TruncationPolicy{}, kVfReps, 1));
  }
  state.SetItemsProcessed(state.iterations() * kVfReps);
}

void BM_VectorFieldParallel(benchmark::State& state) {
  set_thread_count(static_cast<int>(state.range(0)));
  const double th[1] = {0.03};
  for (auto _ : state) {
    benchmark::DoNotOptimize(estimate_vf(kSop, th, kHp, 1, TruncationPolicy{}, kVfReps, 1));
  }
  state.SetItemsProcessed(state.iterations() * kVfReps);
  set_thread_count(0);
}

// Re-evaluation on frozen paths, the inner loop of the zero search.
void BM_PathSetEvaluate(benchmark::State& state) {
  set_thread_count(static_cast<int>(state.range(0)));
  const VFPathSet paths(kSop.data, 1, kHp, TruncationPolicy{}, kVfReps, 1);
  const double th[1] = {0.03};
  for (auto _ : state) {
    benchmark::DoNotOptimize(paths.evaluate(th, VFEstimator::conditioned));
  }
  state.SetItemsProcessed(state.iterations() * kVfReps);
  set_thread_count(0);
}

}  // namespace

BENCHMARK(BM_EnsembleSerial)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_EnsembleParallel)->Arg(1)->Arg(2)->Arg(4)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_VectorFieldSerial)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_VectorFieldParallel)->Arg(1)->Arg(2)->Arg(4)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_PathSetEvaluate)->Arg(1)->Arg(2)->Arg(4)->Unit(benchmark::kMillisecond)->UseRealTime();

BENCHMARK_MAIN();
