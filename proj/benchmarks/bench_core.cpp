// Copyright 2026 The ckkstune Authors
// SPDX-License-Identifier: Apache-2.0

#include <benchmark/benchmark.h>

#include <random>

#include "ckkstune/bootstrap_scheduler.hpp"
#include "ckkstune/clear_simulator.hpp"
#include "ckkstune/cost_model.hpp"
#include "ckkstune/io.hpp"
#include "ckkstune/orchestrator.hpp"
#include "ckkstune/static_analyzer.hpp"

namespace ckkstune {
namespace {

ModelGraph fixture(const char* name) {
  return model_from_json(read_json(std::filesystem::path(CKKSTUNE_FIXTURES_DIR) / "models" / (std::string(name) + ".json")));
}

void BM_Schedule(benchmark::State& state) {
  const auto g = fixture("lenet");
  const FheConfig cfg{make_global(16, static_cast<int>(state.range(0)), 30, Embedding::Square), {}};
  const auto costs = layer_depth_costs(g, cfg);
  for (auto _ : state) benchmark::DoNotOptimize(schedule(g, cfg, costs));
}
BENCHMARK(BM_Schedule)->Arg(9)->Arg(12)->Arg(18);

void BM_Analyze(benchmark::State& state) {
  const auto g = fixture("lenet");
  const FheConfig cfg{make_global(16, 9, 30, Embedding::Square), {}};
  for (auto _ : state) benchmark::DoNotOptimize(analyze(g, cfg));
}
BENCHMARK(BM_Analyze);

void BM_SimulateLeNet(benchmark::State& state) {
  const auto g = fixture("lenet");
  const FheConfig cfg{make_global(16, 9, 30, Embedding::Square), {}};
  const auto report = analyze(g, cfg);
  const auto batch = make_calibration_batch(g.input_shape, kDefaultCalibrationSeed, static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(simulate(g, cfg, &*report.plan, batch, {}));
}
BENCHMARK(BM_SimulateLeNet)->Arg(1)->Arg(8)->Unit(benchmark::kMillisecond);

void BM_Calibrate(benchmark::State& state) {
  std::mt19937_64 rng(1);
  std::uniform_int_distribution<int> cnt(1, 400);
  const CostCoefficients truth{2e-3, 5e-3, 0.8, 2e-4};
  std::vector<Observation> obs;
  for (int i = 0; i < state.range(0); ++i) {
    PrimitiveCounts c{cnt(rng), cnt(rng), cnt(rng) % 3, static_cast<double>(cnt(rng))};
    obs.push_back({c, layer_cost(c, truth)});
  }
  for (auto _ : state) benchmark::DoNotOptimize(calibrate(obs));
}
BENCHMARK(BM_Calibrate)->Arg(16)->Arg(256);

void BM_OptimizeMlp(benchmark::State& state) {
  const auto g = fixture("mlp");
  const auto dir = std::filesystem::path(CKKSTUNE_FIXTURES_DIR) / "runs";
  const auto run = run_config_from_json(read_json(dir / "mlp_mock.json"), dir);
  for (auto _ : state) {
    auto backend = make_backend(run.backend);
    Orchestrator orch(g, run, backend.get());
    benchmark::DoNotOptimize(orch.optimize());
  }
}
BENCHMARK(BM_OptimizeMlp)->Unit(benchmark::kMillisecond);

}  // namespace
}  // namespace ckkstune

BENCHMARK_MAIN();
