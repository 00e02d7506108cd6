#pragma once

#include <vector>

#include "crs/types.hpp"

namespace crs::ratefn {

// Which route produced a pairwise rate: a family closed form, or the
// numeric variational fallback (used for mixed-family pairs).
enum class RateFamily { normal, exponential, bernoulli, numeric };

std::string to_string(RateFamily family);

// Pairwise large-deviations rate of the mis-ordering event for a
// (best, challenger) pair, together with the crossing point where the
// allocation-weighted rate derivatives balance.
struct PairRate {
  double value = 0.0;  // >= 0; zero exactly when the two means coincide
  double gamma = 0.0;  // lies between the two means
  RateFamily family = RateFamily::numeric;
};

// Legendre-Fenchel rate function I(gamma) of a single analytic source.
// Zero exactly at the model mean; exponential requires gamma > 0 and
// Bernoulli requires gamma in (0, 1).
double rate_I(const DistributionModel& model, double gamma);

// d/dgamma of rate_I; strictly increasing, zero at the model mean.
double rate_I_derivative(const DistributionModel& model, double gamma);

// Unique root of alpha_b I_b'(gamma) + alpha_c I_c'(gamma) = 0 between the
// two means. Same-family pairs use the closed forms; mixed pairs fall back
// to the bisection used by generic_pair_rate.
double crossing_gamma(const DistributionModel& model_b, const DistributionModel& model_c,
                      double alpha_b, double alpha_c);

// alpha_b I_b(gamma) + alpha_c I_c(gamma) at the crossing point. Same-family
// pairs evaluate the family closed form; mixed pairs route to
// generic_pair_rate. Both fractions must be strictly positive.
PairRate pair_rate(const DistributionModel& model_b, const DistributionModel& model_c,
                   double alpha_b, double alpha_c);

// Numeric infimum of the weighted rate over gamma between the two means,
// by bisection on the monotone derivative (interval shrunk below 1e-12).
// Independent of the closed forms; also the route for mixed families.
PairRate generic_pair_rate(const DistributionModel& model_b, const DistributionModel& model_c,
                           double alpha_b, double alpha_c);

struct OverallRate {
  double value = 0.0;
  int design = -1;   // challenger of the slowest comparison
  int context = -1;  // context of the slowest comparison
};

// min over contexts j and challengers i != best(j) of the pairwise rate.
// A pair starved of budget (zero fraction on either side) has rate zero and
// is reported as the attaining pair. Ties resolve to the smallest (j, i).
OverallRate overall_rate(const ProblemSpec& spec, const AllocationFractions& fractions);

// Residuals of the optimality conditions: per-context balance between the
// best design and the rest, plus pairwise rate gaps within and across
// contexts. All zero (to tolerance) exactly at the rate-optimal allocation.
struct KktResidual {
  std::vector<double> balance;         // one entry per context
  std::vector<double> within_context;  // G gaps between challenger pairs, same context
  std::vector<double> across_context;  // G gaps between challenger pairs, different contexts
  double max_abs() const;
};

KktResidual kkt_residual(const ProblemSpec& spec, const AllocationFractions& fractions);

struct SolveOptions {
  double tolerance = 1e-6;  // max-abs KKT residual target
  int max_iterations = 100000;
  double damping = 0.5;
};

// Damped fixed-point iteration for the allocation satisfying the optimality
// conditions: equalize pairwise rates across all challenger cells given the
// best-design fractions, rebalance the best-design fractions, renormalize,
// repeat. Throws SolveError (carrying the last residual) at the iteration cap.
AllocationFractions solve_optimal_fractions(const ProblemSpec& spec, const SolveOptions& options = {});

AllocationFractions solve_optimal_fractions(const ProblemSpec& spec, double tolerance);

}  // namespace crs::ratefn
