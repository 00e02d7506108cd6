#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "crs/ratefn.hpp"

namespace crs::ratefn {

namespace {

struct ChallengerCell {
  int design;
  int context;
};

double pair_value(const ProblemSpec& spec, int best, int i, int j, double ab, double ai) {
  return pair_rate(spec.model(best, j), spec.model(i, j), ab, ai).value;
}

// Largest attainable pair rate for a challenger cell when the challenger
// fraction grows without bound: the crossing point collapses onto the
// challenger mean, leaving beta * I_best(mean_i).
double pair_value_cap(const ProblemSpec& spec, int best, int i, int j, double beta) {
  return beta * rate_I(spec.model(best, j), spec.model(i, j).mean());
}

// Challenger fraction that makes the pair rate equal g, holding the best
// fraction fixed. Closed form for normal pairs, bisection otherwise
// (the rate is strictly increasing in the challenger fraction).
double challenger_for_rate(const ProblemSpec& spec, int best, int i, int j, double beta,
                           double g) {
  const DistributionModel& mb = spec.model(best, j);
  const DistributionModel& mi = spec.model(i, j);
  if (mb.family() == Family::normal && mi.family() == Family::normal) {
    const double delta = mi.mean() - mb.mean();
    const double denom = delta * delta / (2.0 * g) - mb.variance() / beta;
    return mi.variance() / denom;
  }
  double lo = 0.0;
  double hi = 1.0;
  for (int expand = 0; expand < 80 && pair_value(spec, best, i, j, beta, hi) < g; ++expand) {
    hi *= 2.0;
  }
  for (int iter = 0; iter < 120 && hi - lo > 1e-15 * hi; ++iter) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= 0.0) break;
    if (pair_value(spec, best, i, j, beta, mid) < g) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

// Best-design fraction satisfying the per-context balance condition given
// the challenger fractions. Closed form when the whole context is normal;
// otherwise a bisection on the (decreasing) rate-ratio sum.
double balanced_best_fraction(const ProblemSpec& spec, int best, int j,
                              const std::vector<double>& challenger_alpha,
                              const std::vector<int>& challenger_design) {
  bool all_normal = spec.model(best, j).family() == Family::normal;
  for (int i : challenger_design) {
    all_normal = all_normal && spec.model(i, j).family() == Family::normal;
  }
  if (all_normal) {
    double sum = 0.0;
    for (std::size_t t = 0; t < challenger_design.size(); ++t) {
      const double ai = challenger_alpha[t];
      sum += ai * ai / spec.model(challenger_design[t], j).variance();
    }
    return std::sqrt(spec.model(best, j).variance() * sum);
  }

  const auto ratio_sum = [&](double beta) {
    double sum = 0.0;
    for (std::size_t t = 0; t < challenger_design.size(); ++t) {
      const int i = challenger_design[t];
      const double gamma =
          crossing_gamma(spec.model(best, j), spec.model(i, j), beta, challenger_alpha[t]);
      sum += rate_I(spec.model(best, j), gamma) / rate_I(spec.model(i, j), gamma);
    }
    return sum;
  };

  double lo = 1e-12;
  double hi = 1.0;
  for (int expand = 0; expand < 80 && ratio_sum(hi) > 1.0; ++expand) hi *= 2.0;
  for (int iter = 0; iter < 120 && hi - lo > 1e-15 * hi; ++iter) {
    const double mid = 0.5 * (lo + hi);
    if (ratio_sum(mid) > 1.0) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

Matrix normalized(Matrix alpha) {
  double sum = 0.0;
  for (double a : alpha.data()) sum += a;
  for (double& a : alpha.data()) a /= sum;
  double partial = 0.0;
  for (std::size_t t = 0; t + 1 < alpha.data().size(); ++t) partial += alpha.data()[t];
  alpha.data().back() = 1.0 - partial;
  return alpha;
}

}  // namespace

AllocationFractions solve_optimal_fractions(const ProblemSpec& spec, const SolveOptions& options) {
  const GroundTruth& truth = spec.ground_truth();
  if (!spec.all_analytic()) {
    throw Error("solve_optimal_fractions requires analytic models");
  }
  const int k = spec.num_designs();
  const int m = spec.num_contexts();

  std::vector<ChallengerCell> cells;
  for (int j = 0; j < m; ++j) {
    for (int i = 0; i < k; ++i) {
      if (i != truth.best_design(j)) cells.push_back({i, j});
    }
  }

  Matrix alpha = AllocationFractions::uniform(k, m).matrix();
  double residual = std::numeric_limits<double>::infinity();

  for (int iter = 0; iter < options.max_iterations; ++iter) {
    residual = kkt_residual(spec, AllocationFractions(alpha)).max_abs();
    if (residual < options.tolerance) {
      return AllocationFractions(normalized(std::move(alpha)));
    }

    // Step 1: common rate g such that, with the best fractions held fixed,
    // the challenger fractions exhaust their budget share. Every pair rate
    // is increasing in g, so the budget pins g by bisection.
    double challenger_budget = 1.0;
    for (int j = 0; j < m; ++j) challenger_budget -= alpha(truth.best_design(j), j);

    double g_hi = std::numeric_limits<double>::infinity();
    for (const auto& cell : cells) {
      const int best = truth.best_design(cell.context);
      g_hi = std::min(g_hi, pair_value_cap(spec, best, cell.design, cell.context,
                                           alpha(best, cell.context)));
    }
    g_hi *= 1.0 - 1e-12;

    const auto challenger_sum = [&](double g) {
      double sum = 0.0;
      for (const auto& cell : cells) {
        const int best = truth.best_design(cell.context);
        sum += challenger_for_rate(spec, best, cell.design, cell.context,
                                   alpha(best, cell.context), g);
      }
      return sum;
    };

    double g_lo = 0.0;
    for (int it = 0; it < 200 && g_hi - g_lo > 1e-16 * g_hi; ++it) {
      const double mid = 0.5 * (g_lo + g_hi);
      if (challenger_sum(mid) < challenger_budget) {
        g_lo = mid;
      } else {
        g_hi = mid;
      }
    }
    const double g = 0.5 * (g_lo + g_hi);

    Matrix candidate(k, m, 0.0);
    for (const auto& cell : cells) {
      const int best = truth.best_design(cell.context);
      candidate(cell.design, cell.context) = challenger_for_rate(
          spec, best, cell.design, cell.context, alpha(best, cell.context), g);
    }

    // Step 2: rebalance each context's best-design fraction against the
    // freshly equalized challengers.
    for (int j = 0; j < m; ++j) {
      const int best = truth.best_design(j);
      std::vector<double> challenger_alpha;
      std::vector<int> challenger_design;
      for (int i = 0; i < k; ++i) {
        if (i == best) continue;
        challenger_alpha.push_back(candidate(i, j));
        challenger_design.push_back(i);
      }
      candidate(best, j) = balanced_best_fraction(spec, best, j, challenger_alpha,
                                                  challenger_design);
    }

    candidate = normalized(std::move(candidate));
    for (int i = 0; i < k; ++i) {
      for (int j = 0; j < m; ++j) {
        alpha(i, j) = (1.0 - options.damping) * alpha(i, j) + options.damping * candidate(i, j);
      }
    }
    alpha = normalized(std::move(alpha));
  }

  throw SolveError("solve_optimal_fractions: iteration cap reached", residual);
}

AllocationFractions solve_optimal_fractions(const ProblemSpec& spec, double tolerance) {
  SolveOptions options;
  options.tolerance = tolerance;
  return solve_optimal_fractions(spec, options);
}

}  // namespace crs::ratefn
