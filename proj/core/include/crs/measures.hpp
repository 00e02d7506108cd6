#pragma once

#include <cstdint>
#include <vector>

#include "crs/types.hpp"

namespace crs::measures {

// Everything one seeded macro-replication leaves behind: the estimated-best
// design per context at each budget checkpoint, plus the final cell counts.
struct MacroRepTrace {
  std::vector<long long> checkpoints;        // strictly increasing budgets
  std::vector<std::vector<int>> selected;    // [checkpoint][context] -> design
  CountGrid final_counts;
  std::uint64_t seed = 0;
};

// Empirical false-selection estimates across a set of macro-replications.
// At every checkpoint pfs_e <= pfs_m <= pfs_a by construction.
struct PfsSeries {
  std::vector<long long> checkpoints;
  std::vector<double> pfs_e;
  std::vector<double> pfs_m;
  std::vector<double> pfs_a;
  std::vector<double> se_e;  // normal-approximation standard errors
  std::vector<double> se_m;
  std::vector<double> se_a;
  long long macro_reps = 0;
};

struct OracleGroundTruth {
  GroundTruth truth;
  double min_gap = 0.0;  // smallest best-vs-challenger estimated gap
};

// Exhaustive-simulation ground truth for black-box (or any) sources: the
// cell means over reps_per_cell draws, best design by argmin. Ties raise
// GroundTruthError; min_gap lets callers judge whether reps_per_cell was
// large enough to trust the result.
OracleGroundTruth oracle_ground_truth(const ProblemSpec& spec, long long reps_per_cell,
                                      std::uint64_t seed);

// Aggregates traces into the three false-selection series. All traces must
// share identical checkpoints.
PfsSeries estimate_pfs(const std::vector<MacroRepTrace>& traces, const GroundTruth& truth,
                       const std::vector<double>& context_probabilities);

struct SlopeFit {
  double slope = 0.0;  // per replication; estimates the negated decay rate
  double intercept = 0.0;
  double r_squared = 0.0;
};

// Ordinary least squares of log(pfs) against n over [window_begin,
// window_end). Every windowed value must lie strictly in (0, 1); saturated
// estimates must be excluded by the caller (SaturationError otherwise).
SlopeFit fit_log_slope(const std::vector<long long>& checkpoints, const std::vector<double>& pfs,
                       std::size_t window_begin, std::size_t window_end);

// Residuals of the allocation-optimality conditions evaluated with the TRUE
// normal-model parameters at an empirical allocation: per-context balance
// gaps plus the spread (max - min) of the pairwise comparison statistic.
struct OptimalityGaps {
  std::vector<double> balance_gap;
  double v_spread = 0.0;
};

OptimalityGaps optimality_gaps(const AllocationFractions& fractions, const ProblemSpec& spec);
OptimalityGaps optimality_gaps(const AllocationState& state, const ProblemSpec& spec);

}  // namespace crs::measures
