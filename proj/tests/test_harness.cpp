#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "crs/harness.hpp"
#include "crs/problems.hpp"
#include "crs/ratefn.hpp"

using namespace crs;
using namespace crs::harness;

namespace {

ProblemSpec small_problem() {
  Grid<DistributionModel> source(2, 2);
  Matrix means(2, 2, 0.0);
  means(1, 0) = 1.0;
  means(0, 1) = 1.0;
  source(0, 0) = DistributionModel::normal(0.0, 1.0);
  source(1, 0) = DistributionModel::normal(1.0, 1.0);
  source(0, 1) = DistributionModel::normal(1.0, 1.0);
  source(1, 1) = DistributionModel::normal(0.0, 1.0);
  return ProblemSpec(ContextSet::with_uniform_probabilities({{0.0}, {1.0}}),
                     DesignSet({{0.0}, {1.0}}), std::move(source),
                     GroundTruth::from_means(means));
}

std::filesystem::path temp_file(const std::string& name, const std::string& contents) {
  const auto path = std::filesystem::temp_directory_path() / name;
  std::ofstream file(path, std::ios::binary);
  file << contents;
  return path;
}

}  // namespace

TEST_CASE("default checkpoints are geometric and cover both ends") {
  const auto points = default_checkpoints(40, 30000);
  CHECK(points.size() <= 20);
  CHECK(points.size() >= 15);
  CHECK(points.front() == 40);
  CHECK(points.back() == 30000);
  for (std::size_t t = 1; t < points.size(); ++t) CHECK(points[t] > points[t - 1]);

  const auto tight = default_checkpoints(10, 12);
  CHECK(tight.front() == 10);
  CHECK(tight.back() == 12);
}

TEST_CASE("largest-remainder rounding hits the budget exactly") {
  RngStream rng(12);
  for (int round = 0; round < 50; ++round) {
    const int k = 2 + static_cast<int>(rng.next_u64() % 4);
    const int m = 1 + static_cast<int>(rng.next_u64() % 3);
    Matrix alpha(k, m, 0.0);
    double sum = 0.0;
    for (double& a : alpha.data()) {
      a = 0.05 + rng.uniform();
      sum += a;
    }
    for (double& a : alpha.data()) a /= sum;
    double partial = 0.0;
    for (std::size_t t = 0; t + 1 < alpha.data().size(); ++t) partial += alpha.data()[t];
    alpha.data().back() = 1.0 - partial;

    const long long n = 10 + static_cast<long long>(rng.next_u64() % 10000);
    const auto counts = round_allocation(AllocationFractions(alpha), n);
    long long total = 0;
    for (long long c : counts.data()) {
      CHECK(c >= 0);
      total += c;
    }
    CHECK(total == n);
  }

  SUBCASE("equal fractions differ by at most one") {
    const auto counts = round_allocation(AllocationFractions::uniform(3, 2), 100);
    long long lo = 100, hi = 0;
    for (long long c : counts.data()) {
      lo = std::min(lo, c);
      hi = std::max(hi, c);
    }
    CHECK(hi - lo <= 1);
  }
}

TEST_CASE("run_experiment validates before simulating") {
  ExperimentConfig config{small_problem()};
  config.policy = policies::PolicyKind::crs;
  config.budget = 10;  // below n0*k*m
  config.n0 = 20;
  CHECK_THROWS_AS(run_experiment(config), ConfigError);

  config.budget = 1000;
  config.macro_reps = 0;
  CHECK_THROWS_AS(run_experiment(config), ConfigError);
  config.macro_reps = 1;

  config.n0 = 1;  // variance-based policy needs two per cell
  CHECK_THROWS_AS(run_experiment(config), ConfigError);
  config.n0 = 5;

  config.context_probabilities = std::vector<double>{0.4, 0.7};
  CHECK_THROWS_AS(run_experiment(config), ConfigError);
  config.context_probabilities.reset();

  config.checkpoints = {5, 1000};
  CHECK_THROWS_AS(run_experiment(config), ConfigError);
  config.checkpoints.clear();

  const auto series = run_experiment(config);
  CHECK(series.macro_reps == 1);
  for (double v : series.pfs_e) CHECK((v == 0.0 || v == 1.0));  // single Bernoulli sample
}

TEST_CASE("experiments are deterministic and thread-count independent") {
  ExperimentConfig config{small_problem()};
  config.policy = policies::PolicyKind::crs;
  config.n0 = 5;
  config.budget = 600;
  config.macro_reps = 60;
  config.base_seed = 31;
  config.threads = 1;

  const auto a = run_experiment(config);
  const auto b = run_experiment(config);
  CHECK(to_csv(a) == to_csv(b));

  config.threads = 8;
  const auto c = run_experiment(config);
  CHECK(to_csv(a) == to_csv(c));

  SUBCASE("changing the seed changes traces") {
    // Noisy enough that false selections actually occur.
    Grid<DistributionModel> source(2, 1);
    source(0, 0) = DistributionModel::normal(0.0, 9.0);
    source(1, 0) = DistributionModel::normal(1.0, 9.0);
    Matrix means(2, 1, 0.0);
    means(1, 0) = 1.0;
    ExperimentConfig noisy{ProblemSpec(ContextSet::with_uniform_probabilities({{0.0}}),
                                       DesignSet({{0.0}, {1.0}}), std::move(source),
                                       GroundTruth::from_means(means))};
    noisy.policy = policies::PolicyKind::equal;
    noisy.n0 = 5;
    noisy.budget = 100;
    noisy.macro_reps = 60;
    noisy.base_seed = 31;
    const auto d = run_experiment(noisy);
    noisy.base_seed = 32;
    const auto e = run_experiment(noisy);
    CHECK(to_csv(d) != to_csv(e));
  }
}

TEST_CASE("csv round-trips exactly") {
  ExperimentConfig config{small_problem()};
  config.policy = policies::PolicyKind::equal;
  config.n0 = 4;
  config.budget = 500;
  config.macro_reps = 40;
  config.base_seed = 7;

  const auto series = run_experiment(config);
  const std::string text = to_csv(series);
  const auto parsed = parse_csv(text);
  CHECK(parsed.checkpoints == series.checkpoints);
  CHECK(parsed.pfs_e == series.pfs_e);
  CHECK(parsed.pfs_m == series.pfs_m);
  CHECK(parsed.pfs_a == series.pfs_a);
  CHECK(parsed.se_e == series.se_e);
  CHECK(parsed.macro_reps == series.macro_reps);
  CHECK(to_csv(parsed) == text);

  CHECK_THROWS_AS(parse_csv("nonsense\n1,2\n"), Error);
  CHECK_THROWS_AS(parse_csv(""), Error);
}

TEST_CASE("fixed allocation mode") {
  ExperimentConfig config{small_problem()};
  config.policy = AllocationFractions::uniform(2, 2);
  config.budget = 400;
  config.macro_reps = 50;
  config.base_seed = 3;
  config.checkpoints = {16, 64, 400};

  const auto series = run_fixed_allocation(config);
  CHECK(series.checkpoints == std::vector<long long>{16, 64, 400});
  for (std::size_t t = 0; t < series.checkpoints.size(); ++t) {
    CHECK(series.pfs_e[t] <= series.pfs_m[t]);
    CHECK(series.pfs_m[t] <= series.pfs_a[t]);
  }
  // Learning: the final checkpoint cannot be worse than the first.
  CHECK(series.pfs_e.back() <= series.pfs_e.front());

  SUBCASE("starving fractions at the smallest checkpoint is a config error") {
    Matrix alpha(2, 2, 0.0);
    alpha(0, 0) = 0.97;
    alpha(1, 0) = 0.01;
    alpha(0, 1) = 0.01;
    alpha(1, 1) = 0.01;
    config.policy = AllocationFractions(alpha);
    config.checkpoints = {20, 400};
    CHECK_THROWS_AS(run_fixed_allocation(config), ConfigError);
  }

  SUBCASE("sequential runner rejects fixed fractions mismatch") {
    config.policy = AllocationFractions::uniform(3, 2);
    CHECK_THROWS_AS(run_fixed_allocation(config), ConfigError);
  }
}

TEST_CASE("config files load strictly") {
  const auto config_path = temp_file("crs_test_config.json", R"({
    "problem": {"preset": "sphere"},
    "policy": "crs",
    "n0": 10,
    "budget": 5000,
    "macro_reps": 3,
    "base_seed": 11,
    "threads": 2
  })");
  const auto config = load_config(config_path.string());
  CHECK(config.problem_name == "sphere");
  CHECK(config.problem.num_designs() == 11);
  CHECK(config.n0 == 10);
  CHECK(config.budget == 5000);
  CHECK(std::get<policies::PolicyKind>(config.policy) == policies::PolicyKind::crs);

  SUBCASE("unknown keys are rejected") {
    const auto bad = temp_file("crs_test_bad.json", R"({
      "problem": {"preset": "sphere"},
      "budget": 100,
      "unknown_knob": 3
    })");
    CHECK_THROWS_AS(load_config(bad.string()), ConfigError);
  }

  SUBCASE("inline analytic problems parse") {
    const auto inline_path = temp_file("crs_test_inline.json", R"({
      "problem": {
        "contexts": [0.0, 1.0],
        "designs": [0.0, 1.0, 2.0],
        "models": [
          [{"family": "normal", "mean": 0.0, "variance": 1.0},
           {"family": "normal", "mean": 1.0, "variance": 1.0}],
          [{"family": "normal", "mean": 1.0, "variance": 2.0},
           {"family": "normal", "mean": 0.0, "variance": 2.0}],
          [{"family": "normal", "mean": 2.0, "variance": 1.0},
           {"family": "normal", "mean": 2.0, "variance": 1.0}]
        ]
      },
      "policy": "equal",
      "budget": 600,
      "macro_reps": 2
    })");
    const auto inline_config = load_config(inline_path.string());
    CHECK(inline_config.problem.num_designs() == 3);
    CHECK(inline_config.problem.num_contexts() == 2);
    CHECK(inline_config.problem.ground_truth().best_design(0) == 0);
    CHECK(inline_config.problem.ground_truth().best_design(1) == 1);
    const auto series = run_experiment(inline_config);
    CHECK(series.macro_reps == 2);
  }

  SUBCASE("fixed fractions policy parses") {
    const auto fixed_path = temp_file("crs_test_fixed.json", R"({
      "problem": {
        "contexts": [0.0],
        "designs": [0.0, 1.0],
        "models": [
          [{"family": "normal", "mean": 0.0, "variance": 1.0}],
          [{"family": "normal", "mean": 1.0, "variance": 1.0}]
        ]
      },
      "policy": {"fixed_fractions": [[0.5], [0.5]]},
      "budget": 200,
      "checkpoints": [8, 40, 200],
      "macro_reps": 5
    })");
    const auto fixed_config = load_config(fixed_path.string());
    CHECK(fixed_config.is_fixed_allocation());
    const auto series = run_experiment(fixed_config);  // dispatches to fixed mode
    CHECK(series.checkpoints.size() == 3);
  }

  SUBCASE("fractions files load against problem dimensions") {
    const auto fractions_path =
        temp_file("crs_test_alpha.json", R"({"alpha": [[0.3], [0.7]]})");
    const auto fractions = load_fractions_file(fractions_path.string(), 2, 1);
    CHECK(fractions.at(0, 0) == 0.3);
    CHECK_THROWS_AS(load_fractions_file(fractions_path.string(), 3, 1), ConfigError);
  }
}

TEST_CASE("analytic quantities are untouched by experiment seeds") {
  auto spec = small_problem();
  const auto uniform = AllocationFractions::uniform(2, 2);
  const double before = ratefn::overall_rate(spec, uniform).value;

  ExperimentConfig config{small_problem()};
  config.policy = policies::PolicyKind::equal;
  config.n0 = 2;
  config.budget = 100;
  config.base_seed = 1234;
  run_experiment(config);
  config.base_seed = 4321;
  run_experiment(config);

  CHECK(ratefn::overall_rate(spec, uniform).value == before);
}
