// Parallel kernels against their single-threaded references.

#include <benchmark/benchmark.h>

#include "vdi/kernels.hpp"
#include "vdi/sweep.hpp"

using namespace vdi;

namespace {

const Vec3 kTool(0.05, -0.75, 0.2);
const kernels::GridSpec kSpec{0.02, 0.1};

void BM_GridSearch(benchmark::State& state) {
  const OptimizerConfig c;
  for (auto _ : state) benchmark::DoNotOptimize(kernels::grid_search(c, kTool, kSpec));
}

void BM_GridSearchSerial(benchmark::State& state) {
  const OptimizerConfig c;
  for (auto _ : state) benchmark::DoNotOptimize(kernels::grid_search_serial(c, kTool, kSpec));
}

Scenario sweep_scene() {
  Scenario s = *builtin_scenario("fig5a_angled");
  s.duration = 6.0;
  return s;
}

std::vector<WeightPoint> sweep_points(const Scenario& s) {
  WeightGrid g;
  g.w2 = {0.0, 50.0, 100.0};
  g.d = {0.25, 0.3, 0.35};
  return g.expand(s.optimizer);
}

void BM_Sweep(benchmark::State& state) {
  const Scenario s = sweep_scene();
  const auto pts = sweep_points(s);
  for (auto _ : state) benchmark::DoNotOptimize(sweep(s, pts));
}

void BM_SweepSerial(benchmark::State& state) {
  const Scenario s = sweep_scene();
  const auto pts = sweep_points(s);
  for (auto _ : state) benchmark::DoNotOptimize(sweep_serial(s, pts));
}

}  // namespace

BENCHMARK(BM_GridSearch)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_GridSearchSerial)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_Sweep)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_SweepSerial)->Unit(benchmark::kMillisecond)->UseRealTime();

BENCHMARK_MAIN();
