#include <benchmark/benchmark.h>

#include <random>

#include "mrta/nav.hpp"

using namespace mrta;

namespace {

// Robots packed densely enough that most have neighbours inside d_min.
nav::FleetSnapshot packed_fleet(int n) {
  std::mt19937_64 rng(1);
  const double side = 1.5 * std::sqrt(static_cast<double>(n));
  std::uniform_real_distribution<double> u(0.0, side);
  nav::FleetSnapshot f;
  for (int i = 0; i < n; ++i) f.push_back({i, Vec2(u(rng), u(rng)), Vec2::Zero()});
  return f;
}

void BM_ApfSerial(benchmark::State& state) {
  const auto f = packed_fleet(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(nav::apf_forces_serial(f, 2.0, 2000.0));
  state.SetComplexityN(state.range(0));
}

void BM_ApfParallel(benchmark::State& state) {
  const auto f = packed_fleet(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(nav::apf_forces(f, 2.0, 2000.0, 0));
  state.SetComplexityN(state.range(0));
}

void BM_Care(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(nav::solve_care(nav::Mat4::Identity(), nav::Mat2::Identity()));
}

}  // namespace

BENCHMARK(BM_ApfSerial)->RangeMultiplier(4)->Range(16, 4096)->Complexity(benchmark::oNSquared);
BENCHMARK(BM_ApfParallel)->RangeMultiplier(4)->Range(16, 4096)->Complexity(benchmark::oNSquared);
BENCHMARK(BM_Care);

BENCHMARK_MAIN();
