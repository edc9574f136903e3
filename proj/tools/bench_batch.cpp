// Serial vs OpenMP seed sweeps of the free-tracking scenario.

#include <benchmark/benchmark.h>
#include <omp.h>

#include "teleop/batch.hpp"

using namespace teleop::harness;

namespace {

std::vector<ScenarioConfig> sweep(std::size_t n) {
  auto base = make_scenario(ScenarioId::FreeTracking, ControllerKind::IAC);
  base.duration = 5.0;
  return seed_sweep(base, 1, n);
}

void BM_BatchSerial(benchmark::State& state) {
  const auto configs = sweep(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(run_batch_serial(configs));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_BatchParallel(benchmark::State& state) {
  const auto configs = sweep(static_cast<std::size_t>(state.range(0)));
  const int threads = static_cast<int>(state.range(1));
  for (auto _ : state) benchmark::DoNotOptimize(run_batch_parallel(configs, threads));
  state.SetItemsProcessed(state.iterations() * state.range(0));
  state.counters["threads"] = threads;
}

void BM_SingleTick(benchmark::State& state) {
  auto cfg = make_scenario(ScenarioId::Fig2, ControllerKind::IAC);
  cfg.estimator = state.range(0) ? EstimatorKind::Observer : EstimatorKind::Direct;
  Engine e(cfg);
  e.set_recording(false);
  for (auto _ : state) {
    if (e.done()) e.reset();
    benchmark::DoNotOptimize(e.tick());
  }
  state.SetLabel(state.range(0) ? "observer" : "direct");
}

}  // namespace

BENCHMARK(BM_BatchSerial)->Arg(8)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_BatchParallel)
    ->ArgsProduct({{8}, {1, 2, 4, omp_get_max_threads()}})
    ->Unit(benchmark::kMillisecond);
BENCHMARK(BM_SingleTick)->Arg(0)->Arg(1);

BENCHMARK_MAIN();
