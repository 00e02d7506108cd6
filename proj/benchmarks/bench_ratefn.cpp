#include <benchmark/benchmark.h>

#include "crs/ratefn.hpp"

using namespace crs;

namespace {

ProblemSpec five_by_three() {
  Matrix means(5, 3, 0.0), variances(5, 3, 1.0);
  const double base[5] = {0.0, 0.4, 0.9, 1.5, 2.2};
  for (int j = 0; j < 3; ++j) {
    for (int i = 0; i < 5; ++i) {
      means((i + j) % 5, j) = base[i] + 0.1 * j;
      variances((i + j) % 5, j) = 0.5 + 0.4 * ((i + j) % 4);
    }
  }
  Grid<DistributionModel> source(5, 3);
  for (int i = 0; i < 5; ++i) {
    for (int j = 0; j < 3; ++j) {
      source(i, j) = DistributionModel::normal(means(i, j), variances(i, j));
    }
  }
  std::vector<std::vector<double>> contexts = {{0.0}, {1.0}, {2.0}};
  std::vector<std::vector<double>> designs;
  for (int i = 0; i < 5; ++i) designs.push_back({static_cast<double>(i)});
  return ProblemSpec(ContextSet::with_uniform_probabilities(contexts), DesignSet(designs),
                     std::move(source), GroundTruth::from_means(means));
}

void BM_PairRateNormalClosedForm(benchmark::State& state) {
  const auto b = DistributionModel::normal(0.0, 1.0);
  const auto c = DistributionModel::normal(0.8, 1.7);
  for (auto _ : state) {
    benchmark::DoNotOptimize(ratefn::pair_rate(b, c, 0.3, 0.2).value);
  }
}
BENCHMARK(BM_PairRateNormalClosedForm);

void BM_PairRateBernoulliClosedForm(benchmark::State& state) {
  const auto b = DistributionModel::bernoulli(0.2);
  const auto c = DistributionModel::bernoulli(0.6);
  for (auto _ : state) {
    benchmark::DoNotOptimize(ratefn::pair_rate(b, c, 0.3, 0.2).value);
  }
}
BENCHMARK(BM_PairRateBernoulliClosedForm);

void BM_GenericPairRate(benchmark::State& state) {
  const auto b = DistributionModel::normal(0.0, 1.0);
  const auto c = DistributionModel::exponential(1.3);
  for (auto _ : state) {
    benchmark::DoNotOptimize(ratefn::generic_pair_rate(b, c, 0.3, 0.2).value);
  }
}
BENCHMARK(BM_GenericPairRate);

void BM_KktResidual(benchmark::State& state) {
  const auto spec = five_by_three();
  const auto fractions = AllocationFractions::uniform(5, 3);
  for (auto _ : state) {
    benchmark::DoNotOptimize(ratefn::kkt_residual(spec, fractions).max_abs());
  }
}
BENCHMARK(BM_KktResidual);

void BM_SolveOptimalFractions(benchmark::State& state) {
  const auto spec = five_by_three();
  for (auto _ : state) {
    benchmark::DoNotOptimize(ratefn::solve_optimal_fractions(spec, 1e-6).at(0, 0));
  }
}
BENCHMARK(BM_SolveOptimalFractions)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
