#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "crs/measures.hpp"
#include "crs/types.hpp"

namespace crs::policies {

enum class PolicyKind { equal, ptv, equal_ocba, crs };

PolicyKind parse_policy(std::string_view name);  // ConfigError on unknown name
std::string to_string(PolicyKind kind);

struct Diagnostics {
  double u_best = 0.0;    // balance statistic of the chosen context's best design
  double u_non = 0.0;     // balance statistic of its challengers
  double v_min = 0.0;     // smallest pairwise comparison statistic
  bool chose_best = false;
};

// One allocation decision: the (design, context) pair to simulate next.
struct PolicyDecision {
  int design = -1;
  int context = -1;
  std::optional<Diagnostics> diagnostics;
};

// Plug-in statistics of the sequential allocation rule, computed from the
// current sample means, sample variances and empirical fractions. Requires
// every cell to hold at least two replications.
struct CrsStatistics {
  std::vector<double> u_best;       // per context
  std::vector<double> u_non;        // per context
  Matrix v;                         // NaN at each context's estimated best
  std::vector<int> estimated_best;  // per context, ties to the lowest index
};

CrsStatistics crs_statistics(const AllocationState& state);

// The sequential rate-optimal rule: pick the (context, challenger) pair with
// the smallest comparison statistic; give the replication to the estimated
// best design there when its balance statistic lags, else to the challenger.
PolicyDecision crs_next(const AllocationState& state);

// Round-robin on the least-sampled cell.
PolicyDecision equal_next(const AllocationState& state);

// Sampling proportional to the cell's sample variance.
PolicyDecision ptv_next(const AllocationState& state);

// Per-context OCBA targets with the budget split equally across contexts.
PolicyDecision equal_ocba_next(const AllocationState& state);

PolicyDecision next_decision(PolicyKind kind, const AllocationState& state);

struct RunConfig {
  int n0 = 20;
  int delta_n = 1;
  long long budget = 0;
  std::vector<long long> checkpoints;  // sorted, within [n0*k*m, budget]
};

// Runs one macro-replication: n0 replications per cell, then sequential
// decisions of delta_n replications each until the budget is exhausted,
// recording the estimated-best map whenever a checkpoint is crossed.
// Deterministic function of (spec, policy, config, seed).
measures::MacroRepTrace run_policy(const ProblemSpec& spec, PolicyKind kind,
                                   const RunConfig& config, std::uint64_t seed);

}  // namespace crs::policies
