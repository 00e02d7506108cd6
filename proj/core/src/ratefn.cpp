#include "crs/ratefn.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace crs::ratefn {

namespace {

constexpr double kGammaInterval = 1e-12;  // bisection stops below this width

void require_analytic(const DistributionModel& model) {
  if (!model.is_analytic()) {
    throw Error("rate functions are defined for analytic models only");
  }
}

void require_positive_fractions(double alpha_b, double alpha_c) {
  if (!(alpha_b > 0.0) || !(alpha_c > 0.0)) {
    throw DegenerateAllocationError("pair rate requires strictly positive fractions");
  }
}

// Open-domain bounds of I for each family.
void domain_of(const DistributionModel& model, double& lo, double& hi) {
  switch (model.family()) {
    case Family::normal:
      lo = -std::numeric_limits<double>::infinity();
      hi = std::numeric_limits<double>::infinity();
      return;
    case Family::exponential:
      lo = 0.0;
      hi = std::numeric_limits<double>::infinity();
      return;
    case Family::bernoulli:
      lo = 0.0;
      hi = 1.0;
      return;
    case Family::black_box: break;
  }
  throw Error("rate functions are defined for analytic models only");
}

}  // namespace

std::string to_string(RateFamily family) {
  switch (family) {
    case RateFamily::normal: return "normal";
    case RateFamily::exponential: return "exponential";
    case RateFamily::bernoulli: return "bernoulli";
    case RateFamily::numeric: return "numeric";
  }
  return "unknown";
}

double rate_I(const DistributionModel& model, double gamma) {
  require_analytic(model);
  switch (model.family()) {
    case Family::normal: {
      const auto& m = model.as_normal();
      const double d = gamma - m.mean;
      return d * d / (2.0 * m.variance);
    }
    case Family::exponential: {
      if (!(gamma > 0.0)) {
        throw std::domain_error("exponential rate function requires gamma > 0");
      }
      const double lg = model.as_exponential().rate * gamma;
      return lg - 1.0 - std::log(lg);
    }
    case Family::bernoulli: {
      if (!(gamma > 0.0 && gamma < 1.0)) {
        throw std::domain_error("bernoulli rate function requires gamma in (0, 1)");
      }
      const double q = model.as_bernoulli().success_prob;
      return gamma * std::log(gamma / q) + (1.0 - gamma) * std::log((1.0 - gamma) / (1.0 - q));
    }
    case Family::black_box: break;
  }
  throw Error("unreachable model family");
}

double rate_I_derivative(const DistributionModel& model, double gamma) {
  require_analytic(model);
  switch (model.family()) {
    case Family::normal: {
      const auto& m = model.as_normal();
      return (gamma - m.mean) / m.variance;
    }
    case Family::exponential: {
      if (!(gamma > 0.0)) {
        throw std::domain_error("exponential rate function requires gamma > 0");
      }
      return model.as_exponential().rate - 1.0 / gamma;
    }
    case Family::bernoulli: {
      if (!(gamma > 0.0 && gamma < 1.0)) {
        throw std::domain_error("bernoulli rate function requires gamma in (0, 1)");
      }
      const double q = model.as_bernoulli().success_prob;
      return std::log(gamma * (1.0 - q) / ((1.0 - gamma) * q));
    }
    case Family::black_box: break;
  }
  throw Error("unreachable model family");
}

namespace {

// Root of alpha_b I_b'(gamma) + alpha_c I_c'(gamma) between the two means.
// Endpoint derivative signs are fixed by convexity (each I is minimized at
// its own mean), so only interior points are ever evaluated; open domain
// boundaries need no special casing.
double bisect_crossing(const DistributionModel& model_b, const DistributionModel& model_c,
                       double alpha_b, double alpha_c) {
  const double mean_b = model_b.mean();
  const double mean_c = model_c.mean();
  if (mean_b == mean_c) return mean_b;

  double lo = std::min(mean_b, mean_c);
  double hi = std::max(mean_b, mean_c);
  double dom_lo_b, dom_hi_b, dom_lo_c, dom_hi_c;
  domain_of(model_b, dom_lo_b, dom_hi_b);
  domain_of(model_c, dom_lo_c, dom_hi_c);
  const double dom_lo = std::max(dom_lo_b, dom_lo_c);
  const double dom_hi = std::min(dom_hi_b, dom_hi_c);
  lo = std::max(lo, dom_lo);
  hi = std::min(hi, dom_hi);
  if (!(lo < hi)) {
    throw std::domain_error("pair rate: model domains do not overlap between the means");
  }

  for (int iter = 0; iter < 200 && hi - lo > kGammaInterval; ++iter) {
    const double mid = 0.5 * (lo + hi);
    const double d = alpha_b * rate_I_derivative(model_b, mid) +
                     alpha_c * rate_I_derivative(model_c, mid);
    if (d < 0.0) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

bool same_analytic_family(const DistributionModel& a, const DistributionModel& b) {
  return a.is_analytic() && a.family() == b.family();
}

}  // namespace

double crossing_gamma(const DistributionModel& model_b, const DistributionModel& model_c,
                      double alpha_b, double alpha_c) {
  require_analytic(model_b);
  require_analytic(model_c);
  require_positive_fractions(alpha_b, alpha_c);

  if (!same_analytic_family(model_b, model_c)) {
    return bisect_crossing(model_b, model_c, alpha_b, alpha_c);
  }
  switch (model_b.family()) {
    case Family::normal: {
      const auto& b = model_b.as_normal();
      const auto& c = model_c.as_normal();
      const double wb = alpha_b / b.variance;
      const double wc = alpha_c / c.variance;
      return (wb * b.mean + wc * c.mean) / (wb + wc);
    }
    case Family::exponential: {
      const double lb = model_b.as_exponential().rate;
      const double lc = model_c.as_exponential().rate;
      return (alpha_b + alpha_c) / (alpha_b * lb + alpha_c * lc);
    }
    case Family::bernoulli: {
      const double qb = model_b.as_bernoulli().success_prob;
      const double qc = model_c.as_bernoulli().success_prob;
      const double rho = alpha_c / (alpha_b + alpha_c);
      const double hb = qb / (1.0 - qb);
      const double hc = qc / (1.0 - qc);
      const double h = std::pow(hb, 1.0 - rho) * std::pow(hc, rho);
      return h / (1.0 + h);
    }
    case Family::black_box: break;
  }
  throw Error("unreachable model family");
}

PairRate pair_rate(const DistributionModel& model_b, const DistributionModel& model_c,
                   double alpha_b, double alpha_c) {
  require_analytic(model_b);
  require_analytic(model_c);
  require_positive_fractions(alpha_b, alpha_c);

  if (!same_analytic_family(model_b, model_c)) {
    return generic_pair_rate(model_b, model_c, alpha_b, alpha_c);
  }
  switch (model_b.family()) {
    case Family::normal: {
      const auto& b = model_b.as_normal();
      const auto& c = model_c.as_normal();
      const double delta = c.mean - b.mean;
      const double value = delta * delta / (2.0 * (b.variance / alpha_b + c.variance / alpha_c));
      return PairRate{value, crossing_gamma(model_b, model_c, alpha_b, alpha_c),
                      RateFamily::normal};
    }
    case Family::exponential: {
      const double lb = model_b.as_exponential().rate;
      const double lc = model_c.as_exponential().rate;
      const double mix = alpha_b * lb + alpha_c * lc;
      const double total = alpha_b + alpha_c;
      const double value =
          -alpha_b * std::log(lb * total / mix) - alpha_c * std::log(lc * total / mix);
      return PairRate{std::max(value, 0.0), total / mix, RateFamily::exponential};
    }
    case Family::bernoulli: {
      const double qb = model_b.as_bernoulli().success_prob;
      const double qc = model_c.as_bernoulli().success_prob;
      const double rho = alpha_c / (alpha_b + alpha_c);
      const double failures = std::pow(1.0 - qb, 1.0 - rho) * std::pow(1.0 - qc, rho);
      const double successes = std::pow(qb, 1.0 - rho) * std::pow(qc, rho);
      const double value = -(alpha_b + alpha_c) * std::log(failures + successes);
      return PairRate{std::max(value, 0.0), crossing_gamma(model_b, model_c, alpha_b, alpha_c),
                      RateFamily::bernoulli};
    }
    case Family::black_box: break;
  }
  throw Error("unreachable model family");
}

PairRate generic_pair_rate(const DistributionModel& model_b, const DistributionModel& model_c,
                           double alpha_b, double alpha_c) {
  require_analytic(model_b);
  require_analytic(model_c);
  require_positive_fractions(alpha_b, alpha_c);

  if (model_b.mean() == model_c.mean()) {
    return PairRate{0.0, model_b.mean(), RateFamily::numeric};
  }
  const double gamma = bisect_crossing(model_b, model_c, alpha_b, alpha_c);
  const double value = alpha_b * rate_I(model_b, gamma) + alpha_c * rate_I(model_c, gamma);
  return PairRate{std::max(value, 0.0), gamma, RateFamily::numeric};
}

OverallRate overall_rate(const ProblemSpec& spec, const AllocationFractions& fractions) {
  const GroundTruth& truth = spec.ground_truth();
  if (fractions.num_designs() != spec.num_designs() ||
      fractions.num_contexts() != spec.num_contexts()) {
    throw std::invalid_argument("overall_rate: fraction dimensions must match the problem");
  }

  OverallRate result;
  result.value = std::numeric_limits<double>::infinity();
  for (int j = 0; j < spec.num_contexts(); ++j) {
    const int best = truth.best_design(j);
    for (int i = 0; i < spec.num_designs(); ++i) {
      if (i == best) continue;
      const double ab = fractions.at(best, j);
      const double ai = fractions.at(i, j);
      // A zero fraction on either side means the mis-ordering probability
      // does not decay at all: the pair contributes rate zero.
      const double value =
          (ab > 0.0 && ai > 0.0)
              ? pair_rate(spec.model(best, j), spec.model(i, j), ab, ai).value
              : 0.0;
      if (value < result.value) {
        result.value = value;
        result.design = i;
        result.context = j;
      }
    }
  }
  return result;
}

double KktResidual::max_abs() const {
  double worst = 0.0;
  for (double v : balance) worst = std::max(worst, std::abs(v));
  for (double v : within_context) worst = std::max(worst, std::abs(v));
  for (double v : across_context) worst = std::max(worst, std::abs(v));
  return worst;
}

KktResidual kkt_residual(const ProblemSpec& spec, const AllocationFractions& fractions) {
  const GroundTruth& truth = spec.ground_truth();
  const int k = spec.num_designs();
  const int m = spec.num_contexts();
  if (fractions.num_designs() != k || fractions.num_contexts() != m) {
    throw std::invalid_argument("kkt_residual: fraction dimensions must match the problem");
  }
  for (double a : fractions.matrix().data()) {
    if (!(a > 0.0)) {
      throw DegenerateAllocationError("kkt_residual requires strictly positive fractions");
    }
  }

  KktResidual residual;
  residual.balance.resize(m, 0.0);

  // G value of every challenger cell, consumed by the gap conditions below.
  std::vector<std::pair<int, int>> cells;  // (j, i)
  Matrix pair_values(k, m, 0.0);
  for (int j = 0; j < m; ++j) {
    const int best = truth.best_design(j);
    for (int i = 0; i < k; ++i) {
      if (i == best) continue;
      pair_values(i, j) = pair_rate(spec.model(best, j), spec.model(i, j),
                                    fractions.at(best, j), fractions.at(i, j))
                              .value;
      cells.emplace_back(j, i);
    }
  }

  for (int j = 0; j < m; ++j) {
    const int best = truth.best_design(j);
    bool all_normal = spec.model(best, j).family() == Family::normal;
    for (int i = 0; i < k && all_normal; ++i) {
      all_normal = spec.model(i, j).family() == Family::normal;
    }
    if (all_normal) {
      // Difference form of the balance condition for the normal family.
      const double ab = fractions.at(best, j);
      double lhs = ab * ab / spec.model(best, j).as_normal().variance;
      double rhs = 0.0;
      for (int i = 0; i < k; ++i) {
        if (i == best) continue;
        const double ai = fractions.at(i, j);
        rhs += ai * ai / spec.model(i, j).as_normal().variance;
      }
      residual.balance[j] = lhs - rhs;
    } else {
      // General form: the rate-function ratios of best vs challenger at the
      // crossing points must sum to one.
      double sum = 0.0;
      for (int i = 0; i < k; ++i) {
        if (i == best) continue;
        const double gamma = crossing_gamma(spec.model(best, j), spec.model(i, j),
                                            fractions.at(best, j), fractions.at(i, j));
        sum += rate_I(spec.model(best, j), gamma) / rate_I(spec.model(i, j), gamma);
      }
      residual.balance[j] = sum - 1.0;
    }
  }

  for (std::size_t a = 0; a < cells.size(); ++a) {
    for (std::size_t b = a + 1; b < cells.size(); ++b) {
      const double gap = pair_values(cells[a].second, cells[a].first) -
                         pair_values(cells[b].second, cells[b].first);
      if (cells[a].first == cells[b].first) {
        residual.within_context.push_back(gap);
      } else {
        residual.across_context.push_back(gap);
      }
    }
  }
  return residual;
}

}  // namespace crs::ratefn
