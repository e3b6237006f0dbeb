#include <benchmark/benchmark.h>

#include "keyboard/beta_math.hpp"
#include "keyboard/combo_trial.hpp"
#include "keyboard/decision_cache.hpp"
#include "keyboard/isotonic.hpp"
#include "keyboard/keyboard.hpp"
#include "keyboard/scenario.hpp"
#include "keyboard/simulation.hpp"

using namespace keyboard;

static void BM_IncompleteBeta(benchmark::State& state) {
  const double n = static_cast<double>(state.range(0));
  double x = 0.05;
  for (auto _ : state) {
    benchmark::DoNotOptimize(regularized_incomplete_beta(x, 0.3 * n + 1.0, 0.7 * n + 1.0));
    x = x < 0.9 ? x + 0.1 : 0.05;
  }
}
BENCHMARK(BM_IncompleteBeta)->Arg(10)->Arg(100)->Arg(1000);

static void BM_Decide(benchmark::State& state) {
  const auto keys = build_keys(0.3, 0.05, 0.05);
  int y = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(decide({30, y}, keys));
    y = (y + 1) % 31;
  }
}
BENCHMARK(BM_Decide);

static void BM_DecisionTable(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(build_decision_table(0.3, 0.05, 0.05, static_cast<int>(state.range(0))));
}
BENCHMARK(BM_DecisionTable)->Arg(16)->Arg(60);

static void BM_CachedDecision(benchmark::State& state) {
  const DecisionCache cache(0.3, 0.05, 0.05, 0.95, 60);
  int y = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(cache.decision({60, y}));
    y = (y + 1) % 61;
  }
}
BENCHMARK(BM_CachedDecision);

static void BM_GenerateScenario(benchmark::State& state) {
  Rng rng(1);
  const int rows = static_cast<int>(state.range(0));
  const int cols = static_cast<int>(state.range(1));
  for (auto _ : state) benchmark::DoNotOptimize(generate_scenario(rows, cols, 0.3, rng));
}
BENCHMARK(BM_GenerateScenario)->Args({2, 4})->Args({4, 4});

static void BM_GenerateWithMtdCount(benchmark::State& state) {
  GeneratorConfig cfg;
  cfg.rows = 3;
  cfg.cols = 5;
  cfg.phi = 0.2;
  cfg.eps1 = cfg.eps2 = 0.03;
  cfg.target_mtd_count = 2;
  Rng rng(2);
  for (auto _ : state) benchmark::DoNotOptimize(generate_with_mtd_count(cfg, rng));
}
BENCHMARK(BM_GenerateWithMtdCount);

static void BM_MatrixIsotonic(benchmark::State& state) {
  const int rows = static_cast<int>(state.range(0));
  const int cols = static_cast<int>(state.range(1));
  Rng rng(3);
  WeightedMatrix m{Grid<double>(rows, cols), Grid<double>(rows, cols), Grid<std::uint8_t>(rows, cols, 1)};
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) {
      m.values(r, c) = rng.uniform01();
      m.weights(r, c) = rng.uniform(0.5, 10.0);
    }
  for (auto _ : state) benchmark::DoNotOptimize(matrix_isotonic(m));
}
BENCHMARK(BM_MatrixIsotonic)->Args({2, 4})->Args({4, 4});

static void BM_SimulateTrial(benchmark::State& state) {
  TrialConfig cfg;
  cfg.rows = 3;
  cfg.cols = 5;
  cfg.phi = 0.3;
  cfg.max_n = 60;
  const TrialDesign design(cfg);
  Rng rng(4);
  const ToxScenario sc = generate_scenario(3, 5, 0.3, rng);
  std::uint64_t seed = 0;
  for (auto _ : state) benchmark::DoNotOptimize(simulate_trial(design, sc, ++seed));
}
BENCHMARK(BM_SimulateTrial);
BENCHMARK_MAIN();
