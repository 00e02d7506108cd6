#include "crs/policies.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace crs::policies {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr double kInf = std::numeric_limits<double>::infinity();

void require_initialized(const AllocationState& state) {
  if (state.min_count() < 2) {
    throw InsufficientInitializationError(
        "policy statistics need at least two replications per cell");
  }
}

std::vector<int> estimated_best_per_context(const AllocationState& state) {
  std::vector<int> best(state.num_contexts(), 0);
  for (int j = 0; j < state.num_contexts(); ++j) {
    int arg = 0;
    for (int i = 1; i < state.num_designs(); ++i) {
      if (state.mean(i, j) < state.mean(arg, j)) arg = i;
    }
    best[j] = arg;
  }
  return best;
}

// Max-deficit greedy step toward a global target fraction matrix: the pair
// whose target most exceeds its empirical fraction, ties to smallest (j, i).
PolicyDecision max_deficit_decision(const AllocationState& state, const Matrix& target) {
  const double total = static_cast<double>(state.total());
  PolicyDecision decision;
  double best_deficit = -kInf;
  for (int j = 0; j < state.num_contexts(); ++j) {
    for (int i = 0; i < state.num_designs(); ++i) {
      const double actual = static_cast<double>(state.count(i, j)) / total;
      const double deficit = target.at(i, j) - actual;
      if (deficit > best_deficit) {
        best_deficit = deficit;
        decision.design = i;
        decision.context = j;
      }
    }
  }
  return decision;
}

}  // namespace

PolicyKind parse_policy(std::string_view name) {
  if (name == "equal") return PolicyKind::equal;
  if (name == "ptv") return PolicyKind::ptv;
  if (name == "equal_ocba") return PolicyKind::equal_ocba;
  if (name == "crs") return PolicyKind::crs;
  throw ConfigError("policy: unknown policy '" + std::string(name) +
                    "' (expected equal | ptv | equal_ocba | crs)");
}

std::string to_string(PolicyKind kind) {
  switch (kind) {
    case PolicyKind::equal: return "equal";
    case PolicyKind::ptv: return "ptv";
    case PolicyKind::equal_ocba: return "equal_ocba";
    case PolicyKind::crs: return "crs";
  }
  return "unknown";
}

CrsStatistics crs_statistics(const AllocationState& state) {
  require_initialized(state);
  const int k = state.num_designs();
  const int m = state.num_contexts();
  const double total = static_cast<double>(state.total());

  CrsStatistics stats;
  stats.estimated_best = estimated_best_per_context(state);
  stats.u_best.resize(m, 0.0);
  stats.u_non.resize(m, 0.0);
  stats.v = Matrix(k, m, kNaN);

  for (int j = 0; j < m; ++j) {
    const int best = stats.estimated_best[j];
    const double alpha_b = static_cast<double>(state.count(best, j)) / total;
    const double var_b = state.variance(best, j);
    // Zero sample variance (possible for discrete sources) makes the balance
    // statistic infinite: that side already looks perfectly estimated.
    stats.u_best[j] = var_b > 0.0 ? alpha_b * alpha_b / var_b : kInf;

    double u_non = 0.0;
    for (int i = 0; i < k; ++i) {
      if (i == best) continue;
      const double alpha_i = static_cast<double>(state.count(i, j)) / total;
      const double var_i = state.variance(i, j);
      u_non += var_i > 0.0 ? alpha_i * alpha_i / var_i : kInf;

      const double delta = state.mean(i, j) - state.mean(best, j);
      const double denom = (var_b > 0.0 ? var_b / alpha_b : 0.0) +
                           (var_i > 0.0 ? var_i / alpha_i : 0.0);
      if (denom > 0.0) {
        stats.v(i, j) = delta * delta / denom;
      } else {
        stats.v(i, j) = delta == 0.0 ? 0.0 : kInf;
      }
    }
    stats.u_non[j] = u_non;
  }
  return stats;
}

PolicyDecision crs_next(const AllocationState& state) {
  const CrsStatistics stats = crs_statistics(state);

  // Smallest comparison statistic over all challenger cells, ties (j, i).
  int arg_i = -1, arg_j = -1;
  double v_min = kInf;
  for (int j = 0; j < state.num_contexts(); ++j) {
    for (int i = 0; i < state.num_designs(); ++i) {
      if (i == stats.estimated_best[j]) continue;
      const double v = stats.v.at(i, j);
      if (v < v_min) {
        v_min = v;
        arg_i = i;
        arg_j = j;
      }
    }
  }
  if (arg_j < 0) {
    // Every challenger cell is at +infinity; fall back to the first context.
    arg_j = 0;
    arg_i = stats.estimated_best[0] == 0 ? 1 : 0;
    v_min = stats.v.at(arg_i, arg_j);
  }

  const bool chose_best = stats.u_best[arg_j] < stats.u_non[arg_j];
  PolicyDecision decision;
  decision.context = arg_j;
  decision.design = chose_best ? stats.estimated_best[arg_j] : arg_i;
  decision.diagnostics =
      Diagnostics{stats.u_best[arg_j], stats.u_non[arg_j], v_min, chose_best};
  return decision;
}

PolicyDecision equal_next(const AllocationState& state) {
  PolicyDecision decision;
  long long lowest = std::numeric_limits<long long>::max();
  for (int j = 0; j < state.num_contexts(); ++j) {
    for (int i = 0; i < state.num_designs(); ++i) {
      if (state.count(i, j) < lowest) {
        lowest = state.count(i, j);
        decision.design = i;
        decision.context = j;
      }
    }
  }
  return decision;
}

PolicyDecision ptv_next(const AllocationState& state) {
  require_initialized(state);
  Matrix target(state.num_designs(), state.num_contexts(), 0.0);
  double sum = 0.0;
  for (int j = 0; j < state.num_contexts(); ++j) {
    for (int i = 0; i < state.num_designs(); ++i) {
      target(i, j) = state.variance(i, j);
      sum += target(i, j);
    }
  }
  if (sum > 0.0) {
    for (double& t : target.data()) t /= sum;
  } else {
    // All-deterministic cells: proportional-to-variance degenerates to equal.
    return equal_next(state);
  }
  return max_deficit_decision(state, target);
}

PolicyDecision equal_ocba_next(const AllocationState& state) {
  require_initialized(state);
  const int k = state.num_designs();
  const int m = state.num_contexts();
  const std::vector<int> best = estimated_best_per_context(state);

  Matrix target(k, m, 0.0);
  for (int j = 0; j < m; ++j) {
    const int b = best[j];
    std::vector<double> weight(k, 0.0);

    // Challenger weights sigma^2 / gap^2; a zero estimated gap would ask for
    // an unbounded share, so it is clipped to the largest finite challenger
    // weight in the context (most budget to the closest competitor).
    double largest_finite = 0.0;
    bool any_finite = false;
    for (int i = 0; i < k; ++i) {
      if (i == b) continue;
      const double gap = state.mean(i, j) - state.mean(b, j);
      if (gap > 0.0) {
        weight[i] = state.variance(i, j) / (gap * gap);
        largest_finite = std::max(largest_finite, weight[i]);
        any_finite = true;
      } else {
        weight[i] = kInf;
      }
    }
    for (int i = 0; i < k; ++i) {
      if (i != b && std::isinf(weight[i])) {
        weight[i] = any_finite ? largest_finite : 1.0;
      }
    }

    // Best-design share: sigma_b * sqrt(sum (n_i / sigma_i)^2); each term
    // reduces to sigma_i / gap_i^2 under the challenger weights, which also
    // covers zero-variance challengers without a 0/0.
    double sum_sq = 0.0;
    for (int i = 0; i < k; ++i) {
      if (i == b) continue;
      const double var_i = state.variance(i, j);
      double term;
      if (var_i > 0.0) {
        term = weight[i] / std::sqrt(var_i);
      } else {
        term = 0.0;
      }
      sum_sq += term * term;
    }
    weight[b] = std::sqrt(state.variance(b, j)) * std::sqrt(sum_sq);

    double context_sum = 0.0;
    for (int i = 0; i < k; ++i) context_sum += weight[i];
    if (context_sum > 0.0) {
      for (int i = 0; i < k; ++i) {
        target(i, j) = weight[i] / context_sum / static_cast<double>(m);
      }
    } else {
      for (int i = 0; i < k; ++i) {
        target(i, j) = 1.0 / static_cast<double>(k * m);
      }
    }
  }
  return max_deficit_decision(state, target);
}

PolicyDecision next_decision(PolicyKind kind, const AllocationState& state) {
  switch (kind) {
    case PolicyKind::equal: return equal_next(state);
    case PolicyKind::ptv: return ptv_next(state);
    case PolicyKind::equal_ocba: return equal_ocba_next(state);
    case PolicyKind::crs: return crs_next(state);
  }
  throw ConfigError("policy: unknown policy kind");
}

measures::MacroRepTrace run_policy(const ProblemSpec& spec, PolicyKind kind,
                                   const RunConfig& config, std::uint64_t seed) {
  const int k = spec.num_designs();
  const int m = spec.num_contexts();
  const long long init_budget =
      static_cast<long long>(config.n0) * static_cast<long long>(k) * static_cast<long long>(m);
  if (config.n0 < 1) throw ConfigError("n0: must be at least 1");
  if (config.delta_n < 1) throw ConfigError("delta_n: must be at least 1");
  if (config.budget < init_budget) {
    throw ConfigError("budget: too small for n0 replications per cell");
  }
  for (std::size_t t = 0; t < config.checkpoints.size(); ++t) {
    if (config.checkpoints[t] < init_budget || config.checkpoints[t] > config.budget) {
      throw ConfigError("checkpoints: must lie within [n0*k*m, budget]");
    }
    if (t > 0 && config.checkpoints[t] <= config.checkpoints[t - 1]) {
      throw ConfigError("checkpoints: must be strictly increasing");
    }
  }

  // One stream per cell, keyed by (seed, cell); values are then independent
  // of the order in which cells are visited.
  std::vector<RngStream> streams;
  streams.reserve(static_cast<std::size_t>(k) * m);
  for (int i = 0; i < k; ++i) {
    for (int j = 0; j < m; ++j) {
      streams.emplace_back(derive_stream_key(
          seed, static_cast<std::uint64_t>(i) * 1000003ULL + static_cast<std::uint64_t>(j)));
    }
  }
  const auto stream_at = [&](int i, int j) -> RngStream& {
    return streams[static_cast<std::size_t>(i) * m + static_cast<std::size_t>(j)];
  };

  AllocationState state(k, m);
  measures::MacroRepTrace trace;
  trace.checkpoints = config.checkpoints;
  trace.seed = seed;
  std::size_t next_checkpoint = 0;

  const auto record_crossed_checkpoints = [&]() {
    while (next_checkpoint < trace.checkpoints.size() &&
           state.total() >= trace.checkpoints[next_checkpoint]) {
      trace.selected.push_back(estimated_best_per_context(state));
      ++next_checkpoint;
    }
  };

  for (int i = 0; i < k; ++i) {
    for (int j = 0; j < m; ++j) {
      for (int r = 0; r < config.n0; ++r) {
        state.add(i, j, sample(spec, i, j, stream_at(i, j)));
      }
    }
  }
  record_crossed_checkpoints();

  while (state.total() < config.budget) {
    const PolicyDecision decision = next_decision(kind, state);
    for (int r = 0; r < config.delta_n; ++r) {
      state.add(decision.design, decision.context,
                sample(spec, decision.design, decision.context,
                       stream_at(decision.design, decision.context)));
    }
    record_crossed_checkpoints();
  }

  trace.final_counts = state.counts();
  return trace;
}

}  // namespace crs::policies
