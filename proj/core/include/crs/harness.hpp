#pragma once

#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "crs/measures.hpp"
#include "crs/policies.hpp"
#include "crs/types.hpp"

namespace crs::harness {

// A fixed (non-sequential) allocation: every checkpoint budget is split
// across cells by largest-remainder rounding of these fractions.
using FixedFractions = AllocationFractions;

struct ExperimentConfig {
  explicit ExperimentConfig(ProblemSpec problem_spec) : problem(std::move(problem_spec)) {}

  ProblemSpec problem;
  std::string problem_name;  // informational
  std::variant<policies::PolicyKind, FixedFractions> policy = policies::PolicyKind::equal;
  int n0 = 20;
  int delta_n = 1;
  long long budget = 0;
  std::vector<long long> checkpoints;  // empty -> geometric default
  long long macro_reps = 1;
  std::uint64_t base_seed = 0;
  std::optional<std::vector<double>> context_probabilities;  // override
  std::string output_path;  // empty -> no CSV written
  int threads = 1;
  long long oracle_reps = 40000;  // ground-truth reps for black-box sources

  bool is_fixed_allocation() const {
    return std::holds_alternative<FixedFractions>(policy);
  }
};

// About 20 geometrically spaced integer budgets covering [lo, hi].
std::vector<long long> default_checkpoints(long long lo, long long hi, int count = 20);

// Largest-remainder rounding of n * alpha to integers summing exactly to n.
CountGrid round_allocation(const AllocationFractions& fractions, long long n);

// Validates the config (ConfigError naming the offending field), resolves
// ground truth (declared, analytic, or simulation oracle), runs macro_reps
// seeded replications (base_seed + index), aggregates, and writes the CSV
// when an output path is set. Deterministic for a fixed config, regardless
// of thread count.
measures::PfsSeries run_experiment(const ExperimentConfig& config);

// Fixed-allocation mode: at each checkpoint n the cells receive
// round_allocation(fractions, n) fresh draws (checkpoints are independent
// columns, not a growing sample path).
measures::PfsSeries run_fixed_allocation(const ExperimentConfig& config);

std::string to_csv(const measures::PfsSeries& series);
void write_csv(const measures::PfsSeries& series, const std::string& path);
measures::PfsSeries parse_csv(const std::string& text);
measures::PfsSeries read_csv(const std::string& path);

// JSON loaders shared by the CLI. Strict: unknown keys are errors.
ExperimentConfig load_config(const std::string& path);
ProblemSpec load_problem_file(const std::string& path);
AllocationFractions load_fractions_file(const std::string& path, int num_designs,
                                        int num_contexts);

}  // namespace crs::harness
