#include <benchmark/benchmark.h>

#include "crs/policies.hpp"
#include "crs/problems.hpp"

using namespace crs;

namespace {

AllocationState warm_state(const ProblemSpec& spec, int n0, std::uint64_t seed) {
  AllocationState state(spec.num_designs(), spec.num_contexts());
  RngStream rng(seed);
  for (int i = 0; i < spec.num_designs(); ++i) {
    for (int j = 0; j < spec.num_contexts(); ++j) {
      for (int r = 0; r < n0; ++r) state.add(i, j, sample(spec, i, j, rng));
    }
  }
  return state;
}

void BM_RngNormalDraws(benchmark::State& state) {
  RngStream rng(7);
  for (auto _ : state) {
    benchmark::DoNotOptimize(rng.normal(0.0, 1.0));
  }
}
BENCHMARK(BM_RngNormalDraws);

void BM_CrsDecision(benchmark::State& state) {
  const auto spec = problems::make_benchmark_problem(
      problems::benchmark_preset(problems::BenchmarkFunction::rastrigin));
  const auto warm = warm_state(spec, 20, 3);
  for (auto _ : state) {
    benchmark::DoNotOptimize(policies::crs_next(warm).design);
  }
}
BENCHMARK(BM_CrsDecision);

void BM_EqualOcbaDecision(benchmark::State& state) {
  const auto spec = problems::make_benchmark_problem(
      problems::benchmark_preset(problems::BenchmarkFunction::rastrigin));
  const auto warm = warm_state(spec, 20, 3);
  for (auto _ : state) {
    benchmark::DoNotOptimize(policies::equal_ocba_next(warm).design);
  }
}
BENCHMARK(BM_EqualOcbaDecision);

void BM_RunPolicyCrs(benchmark::State& state) {
  const auto spec = problems::make_benchmark_problem(
      problems::benchmark_preset(problems::BenchmarkFunction::sphere));
  policies::RunConfig run{.n0 = 10, .delta_n = 10,
                          .budget = state.range(0), .checkpoints = {}};
  std::uint64_t seed = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        policies::run_policy(spec, policies::PolicyKind::crs, run, seed++).final_counts);
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_RunPolicyCrs)->Arg(2000)->Arg(10000)->Unit(benchmark::kMillisecond);

void BM_ProductionLineSample(benchmark::State& state) {
  const auto line = problems::production_line_preset();
  RngStream rng(5);
  for (auto _ : state) {
    benchmark::DoNotOptimize(problems::simulate_production_line(line, 21, 2, rng));
  }
}
BENCHMARK(BM_ProductionLineSample)->Unit(benchmark::kMicrosecond);

}  // namespace

BENCHMARK_MAIN();
