// Serial reference loop vs the OpenMP cell loop on the same experiment.

#include <benchmark/benchmark.h>

#include "ssid/harness.hpp"

namespace {

const ssid::Experiment& experiment() {
  static const ssid::Experiment ex = [] {
    auto cfg = ssid::config_for_preset("scalar");
    cfg.n_grid = {1000, 4000, 16000};
    cfg.trials = 16;
    cfg.master_seed = 1;
    return ssid::prepare_experiment(cfg);
  }();
  return ex;
}

void BM_CellsSerial(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(ssid::run_cells_serial(experiment()));
  state.SetItemsProcessed(state.iterations() * experiment().cfg.trials * experiment().grid.size());
}

void BM_CellsParallel(benchmark::State& state) {
  const int jobs = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(ssid::run_cells(experiment(), jobs));
  state.SetItemsProcessed(state.iterations() * experiment().cfg.trials * experiment().grid.size());
}

void BM_Trial(benchmark::State& state) {
  const auto N = state.range(0);
  auto cfg = ssid::config_for_preset("scalar");
  cfg.n_grid = {N};
  const auto ex = ssid::prepare_experiment(cfg);
  int t = 0;
  for (auto _ : state) benchmark::DoNotOptimize(ssid::run_trial(ex, 0, t++));
}

}  // namespace

BENCHMARK(BM_CellsSerial)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_CellsParallel)->Arg(1)->Arg(2)->Arg(4)->Arg(8)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_Trial)->Arg(1000)->Arg(16000)->Unit(benchmark::kMicrosecond);

BENCHMARK_MAIN();
