#include "crs/measures.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace crs::measures {

OracleGroundTruth oracle_ground_truth(const ProblemSpec& spec, long long reps_per_cell,
                                      std::uint64_t seed) {
  if (reps_per_cell < 2) {
    throw std::invalid_argument("oracle_ground_truth: reps_per_cell must be at least 2");
  }
  const int k = spec.num_designs();
  const int m = spec.num_contexts();
  Matrix means(k, m, 0.0);
  for (int i = 0; i < k; ++i) {
    for (int j = 0; j < m; ++j) {
      RngStream rng(derive_stream_key(seed, static_cast<std::uint64_t>(i) * 1000003ULL +
                                                static_cast<std::uint64_t>(j)));
      double mean = 0.0;
      for (long long r = 0; r < reps_per_cell; ++r) {
        mean += (sample(spec, i, j, rng) - mean) / static_cast<double>(r + 1);
      }
      means(i, j) = mean;
    }
  }

  GroundTruth truth = GroundTruth::from_means(means);
  double min_gap = std::numeric_limits<double>::infinity();
  for (int j = 0; j < m; ++j) {
    const int best = truth.best_design(j);
    for (int i = 0; i < k; ++i) {
      if (i == best) continue;
      min_gap = std::min(min_gap, means.at(i, j) - means.at(best, j));
    }
  }
  return OracleGroundTruth{std::move(truth), min_gap};
}

PfsSeries estimate_pfs(const std::vector<MacroRepTrace>& traces, const GroundTruth& truth,
                       const std::vector<double>& context_probabilities) {
  if (traces.empty()) {
    throw AggregationError("estimate_pfs: at least one macro-replication required");
  }
  const std::vector<long long>& checkpoints = traces.front().checkpoints;
  for (const auto& trace : traces) {
    if (trace.checkpoints != checkpoints) {
      throw AggregationError("estimate_pfs: traces have mismatched checkpoints");
    }
  }
  const int m = truth.num_contexts();
  if (context_probabilities.size() != static_cast<std::size_t>(m)) {
    throw AggregationError("estimate_pfs: one context probability per context required");
  }

  const long long reps = static_cast<long long>(traces.size());
  PfsSeries series;
  series.checkpoints = checkpoints;
  series.macro_reps = reps;
  const auto standard_error = [&](double p) {
    return std::sqrt(p * (1.0 - p) / static_cast<double>(reps));
  };

  for (std::size_t c = 0; c < checkpoints.size(); ++c) {
    std::vector<long long> wrong(m, 0);
    long long any_wrong = 0;
    for (const auto& trace : traces) {
      const std::vector<int>& selected = trace.selected.at(c);
      bool mistake = false;
      for (int j = 0; j < m; ++j) {
        if (selected.at(j) != truth.best_design(j)) {
          ++wrong[j];
          mistake = true;
        }
      }
      if (mistake) ++any_wrong;
    }

    double pfs_e = 0.0;
    double worst = 0.0;
    for (int j = 0; j < m; ++j) {
      const double pfs_j = static_cast<double>(wrong[j]) / static_cast<double>(reps);
      pfs_e += context_probabilities[j] * pfs_j;
      worst = std::max(worst, pfs_j);
    }
    const double pfs_a = static_cast<double>(any_wrong) / static_cast<double>(reps);

    series.pfs_e.push_back(pfs_e);
    series.pfs_m.push_back(worst);
    series.pfs_a.push_back(pfs_a);
    series.se_e.push_back(standard_error(pfs_e));
    series.se_m.push_back(standard_error(worst));
    series.se_a.push_back(standard_error(pfs_a));
  }
  return series;
}

SlopeFit fit_log_slope(const std::vector<long long>& checkpoints, const std::vector<double>& pfs,
                       std::size_t window_begin, std::size_t window_end) {
  if (checkpoints.size() != pfs.size()) {
    throw std::invalid_argument("fit_log_slope: checkpoint/value size mismatch");
  }
  if (window_end > pfs.size() || window_begin >= window_end) {
    throw std::invalid_argument("fit_log_slope: empty or out-of-range window");
  }
  if (window_end - window_begin < 2) {
    throw std::invalid_argument("fit_log_slope: window needs at least two points");
  }

  double sum_x = 0.0, sum_y = 0.0;
  const double count = static_cast<double>(window_end - window_begin);
  for (std::size_t t = window_begin; t < window_end; ++t) {
    if (!(pfs[t] > 0.0 && pfs[t] < 1.0)) {
      throw SaturationError(
          "fit_log_slope: saturated PFS estimate in window; shrink the window or "
          "run more macro-replications");
    }
    sum_x += static_cast<double>(checkpoints[t]);
    sum_y += std::log(pfs[t]);
  }
  const double mean_x = sum_x / count;
  const double mean_y = sum_y / count;

  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t t = window_begin; t < window_end; ++t) {
    const double dx = static_cast<double>(checkpoints[t]) - mean_x;
    const double dy = std::log(pfs[t]) - mean_y;
    sxx += dx * dx;
    sxy += dx * dy;
    syy += dy * dy;
  }
  if (sxx == 0.0) {
    throw std::invalid_argument("fit_log_slope: window has no budget spread");
  }

  SlopeFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = mean_y - fit.slope * mean_x;
  if (syy == 0.0) {
    fit.r_squared = 1.0;  // constant series is fit perfectly by slope zero
  } else {
    const double ss_res = syy - fit.slope * sxy;
    fit.r_squared = 1.0 - ss_res / syy;
  }
  return fit;
}

OptimalityGaps optimality_gaps(const AllocationFractions& fractions, const ProblemSpec& spec) {
  const GroundTruth& truth = spec.ground_truth();
  const int k = spec.num_designs();
  const int m = spec.num_contexts();
  if (fractions.num_designs() != k || fractions.num_contexts() != m) {
    throw std::invalid_argument("optimality_gaps: fraction dimensions must match the problem");
  }
  for (int i = 0; i < k; ++i) {
    for (int j = 0; j < m; ++j) {
      if (spec.model(i, j).family() != Family::normal) {
        throw Error("optimality_gaps requires analytic normal models");
      }
      if (!(fractions.at(i, j) > 0.0)) {
        throw DegenerateAllocationError("optimality_gaps requires strictly positive fractions");
      }
    }
  }

  OptimalityGaps gaps;
  gaps.balance_gap.resize(m, 0.0);
  double v_min = std::numeric_limits<double>::infinity();
  double v_max = -std::numeric_limits<double>::infinity();
  for (int j = 0; j < m; ++j) {
    const int best = truth.best_design(j);
    const double ab = fractions.at(best, j);
    const double var_b = spec.model(best, j).variance();
    double non_best = 0.0;
    for (int i = 0; i < k; ++i) {
      if (i == best) continue;
      const double ai = fractions.at(i, j);
      const double var_i = spec.model(i, j).variance();
      non_best += ai * ai / var_i;
      const double delta = truth.true_mean(i, j) - truth.true_mean(best, j);
      const double v = delta * delta / (var_b / ab + var_i / ai);
      v_min = std::min(v_min, v);
      v_max = std::max(v_max, v);
    }
    gaps.balance_gap[j] = ab * ab / var_b - non_best;
  }
  gaps.v_spread = v_max - v_min;
  return gaps;
}

OptimalityGaps optimality_gaps(const AllocationState& state, const ProblemSpec& spec) {
  return optimality_gaps(state.fractions(), spec);
}

}  // namespace crs::measures
