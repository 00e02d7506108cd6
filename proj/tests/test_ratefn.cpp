#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "crs/ratefn.hpp"
#include "oracles.hpp"

using namespace crs;
using namespace crs::ratefn;

namespace {

// Weighted-rate objective whose infimum over gamma defines the pair rate.
double weighted_rate(const DistributionModel& b, const DistributionModel& c, double ab,
                     double ac, double gamma) {
  return ab * rate_I(b, gamma) + ac * rate_I(c, gamma);
}

double oracle_pair_rate(const DistributionModel& b, const DistributionModel& c, double ab,
                        double ac) {
  double lo = std::min(b.mean(), c.mean());
  double hi = std::max(b.mean(), c.mean());
  if (lo == hi) return 0.0;
  // Keep the golden-section probes inside open domains.
  const double nudge = (hi - lo) * 1e-9;
  lo += nudge;
  hi -= nudge;
  return oracles::golden_section_min_value(
      [&](double g) { return weighted_rate(b, c, ab, ac, g); }, lo, hi);
}

ProblemSpec analytic_problem(std::vector<std::vector<DistributionModel>> rows) {
  const int k = static_cast<int>(rows.size());
  const int m = static_cast<int>(rows.front().size());
  Grid<DistributionModel> source(k, m);
  Matrix means(k, m, 0.0);
  for (int i = 0; i < k; ++i) {
    for (int j = 0; j < m; ++j) {
      source(i, j) = rows[i][j];
      means(i, j) = rows[i][j].mean();
    }
  }
  std::vector<std::vector<double>> contexts, designs;
  for (int j = 0; j < m; ++j) contexts.push_back({static_cast<double>(j)});
  for (int i = 0; i < k; ++i) designs.push_back({static_cast<double>(i)});
  return ProblemSpec(ContextSet::with_uniform_probabilities(contexts), DesignSet(designs),
                     std::move(source), GroundTruth::from_means(means));
}

AllocationFractions fractions_from(std::vector<std::vector<double>> rows) {
  const int k = static_cast<int>(rows.size());
  const int m = static_cast<int>(rows.front().size());
  Matrix alpha(k, m, 0.0);
  for (int i = 0; i < k; ++i) {
    for (int j = 0; j < m; ++j) alpha(i, j) = rows[i][j];
  }
  return AllocationFractions(std::move(alpha));
}

DistributionModel random_model(Family family, RngStream& rng) {
  switch (family) {
    case Family::normal:
      return DistributionModel::normal(-2.0 + 4.0 * rng.uniform(), 0.1 + 3.9 * rng.uniform());
    case Family::exponential:
      return DistributionModel::exponential(0.2 + 4.8 * rng.uniform());
    case Family::bernoulli:
      return DistributionModel::bernoulli(0.05 + 0.9 * rng.uniform());
    default: throw Error("unexpected family");
  }
}

}  // namespace

TEST_CASE("rate function vanishes at the mean and matches direct forms") {
  CHECK(rate_I(DistributionModel::normal(0.0, 1.0), 0.0) == 0.0);
  CHECK(rate_I(DistributionModel::exponential(1.0), 1.0) == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(rate_I(DistributionModel::bernoulli(0.3), 0.3) == doctest::Approx(0.0).epsilon(1e-15));

  // (2 - 0)^2 / (2 * 2), also the Legendre transform of the normal cgf.
  const auto normal = DistributionModel::normal(0.0, 2.0);
  CHECK(rate_I(normal, 2.0) == doctest::Approx(1.0));
  const double via_legendre = oracles::legendre_transform(
      [](double theta) { return theta * theta; }, 2.0);
  CHECK(rate_I(normal, 2.0) == doctest::Approx(via_legendre).epsilon(1e-7));

  // Exponential(2): cgf log(rate / (rate - theta)) for theta < rate.
  const auto exponential = DistributionModel::exponential(2.0);
  const double exp_legendre = oracles::legendre_transform(
      [](double theta) { return std::log(2.0 / (2.0 - theta)); }, 1.3, -60.0, 1.999);
  CHECK(rate_I(exponential, 1.3) == doctest::Approx(exp_legendre).epsilon(1e-7));
}

TEST_CASE("rate function domain errors") {
  CHECK_THROWS_AS(rate_I(DistributionModel::exponential(1.0), 0.0), std::domain_error);
  CHECK_THROWS_AS(rate_I(DistributionModel::exponential(1.0), -1.0), std::domain_error);
  CHECK_THROWS_AS(rate_I(DistributionModel::bernoulli(0.3), 0.0), std::domain_error);
  CHECK_THROWS_AS(rate_I(DistributionModel::bernoulli(0.3), 1.0), std::domain_error);
  const auto opaque = DistributionModel::black_box([](RngStream&) { return 0.0; });
  CHECK_THROWS_AS(rate_I(opaque, 0.5), Error);
}

TEST_CASE("crossing point closed forms") {
  const auto exp2 = DistributionModel::exponential(2.0);
  CHECK(crossing_gamma(exp2, exp2, 0.3, 0.6) == doctest::Approx(0.5));

  CHECK(crossing_gamma(DistributionModel::normal(0.0, 1.0), DistributionModel::normal(1.0, 1.0),
                       0.5, 0.5) == doctest::Approx(0.5));

  const auto bern = DistributionModel::bernoulli(0.3);
  CHECK(crossing_gamma(bern, bern, 0.2, 0.7) == doctest::Approx(0.3));

  CHECK_THROWS_AS(crossing_gamma(exp2, exp2, 0.0, 0.5), DegenerateAllocationError);
}

TEST_CASE("normal crossing point is the precision-weighted mean") {
  RngStream rng(11);
  for (int t = 0; t < 100; ++t) {
    const auto b = random_model(Family::normal, rng);
    const auto c = random_model(Family::normal, rng);
    const double ab = 0.05 + 0.9 * rng.uniform();
    const double ac = 0.05 + 0.9 * rng.uniform();
    const double wb = ab / b.variance();
    const double wc = ac / c.variance();
    const double expected = (wb * b.mean() + wc * c.mean()) / (wb + wc);
    CHECK(crossing_gamma(b, c, ab, ac) == doctest::Approx(expected).epsilon(1e-12));
  }
}

TEST_CASE("pair rate closed forms and the variational oracle") {
  const auto n0 = DistributionModel::normal(0.0, 1.0);
  const auto n1 = DistributionModel::normal(1.0, 1.0);
  const auto quarter = pair_rate(n0, n1, 0.25, 0.25);
  CHECK(quarter.value == doctest::Approx(0.0625).epsilon(1e-12));
  CHECK(quarter.value == doctest::Approx(oracle_pair_rate(n0, n1, 0.25, 0.25)).epsilon(1e-8));
  CHECK(quarter.family == RateFamily::normal);

  CHECK(pair_rate(n0, n0, 0.3, 0.3).value == 0.0);
  const auto bern = pair_rate(DistributionModel::bernoulli(0.2), DistributionModel::bernoulli(0.6),
                              0.3, 0.2);
  const double bern_oracle = oracle_pair_rate(DistributionModel::bernoulli(0.2),
                                              DistributionModel::bernoulli(0.6), 0.3, 0.2);
  CHECK(bern.value == doctest::Approx(bern_oracle).epsilon(1e-8));

  CHECK_THROWS_AS(pair_rate(n0, n1, 0.0, 0.5), DegenerateAllocationError);
}

TEST_CASE("closed-form and generic pair rates agree") {
  RngStream rng(17);
  for (Family family : {Family::normal, Family::exponential, Family::bernoulli}) {
    for (int t = 0; t < 200; ++t) {
      const auto b = random_model(family, rng);
      const auto c = random_model(family, rng);
      const double ab = 0.05 + 0.9 * rng.uniform();
      const double ac = 0.05 + 0.9 * rng.uniform();
      const auto closed = pair_rate(b, c, ab, ac);
      const auto generic = generic_pair_rate(b, c, ab, ac);
      CHECK(std::abs(closed.value - generic.value) < 1e-8);
      CHECK(closed.value >= 0.0);
    }
  }
}

TEST_CASE("generic pair rate handles mixed families") {
  const auto normal = DistributionModel::normal(0.4, 0.8);
  const auto exponential = DistributionModel::exponential(1.1);
  const auto mixed = pair_rate(normal, exponential, 0.3, 0.4);
  CHECK(mixed.family == RateFamily::numeric);
  CHECK(mixed.value ==
        doctest::Approx(oracle_pair_rate(normal, exponential, 0.3, 0.4)).epsilon(1e-8));
  CHECK(mixed.gamma > 0.4);
  CHECK(mixed.gamma < exponential.mean());

  // Equal means, any families: no separation, zero rate.
  const auto bern = DistributionModel::bernoulli(0.5);
  const auto normal_half = DistributionModel::normal(0.5, 1.0);
  CHECK(generic_pair_rate(bern, normal_half, 0.2, 0.2).value == doctest::Approx(0.0));
}

TEST_CASE("pair rate symmetry and monotonicity") {
  RngStream rng(23);
  for (int t = 0; t < 100; ++t) {
    const auto b = random_model(Family::normal, rng);
    const auto c = random_model(Family::normal, rng);
    const double ab = 0.05 + 0.9 * rng.uniform();
    const double ac = 0.05 + 0.9 * rng.uniform();
    CHECK(pair_rate(b, c, ab, ac).value ==
          doctest::Approx(pair_rate(c, b, ac, ab).value).epsilon(1e-12));

    const double base = pair_rate(b, c, ab, ac).value;
    if (b.mean() != c.mean()) {
      CHECK(pair_rate(b, c, ab + 0.01, ac).value > base);
      CHECK(pair_rate(b, c, ab, ac + 0.01).value > base);
    }
  }
}

TEST_CASE("overall rate minimizes over pairs") {
  auto spec = analytic_problem({{DistributionModel::normal(0.0, 1.0)},
                                {DistributionModel::normal(1.0, 1.0)}});
  const auto rate = overall_rate(spec, fractions_from({{0.5}, {0.5}}));
  CHECK(rate.value == doctest::Approx(0.125));
  CHECK(rate.design == 1);
  CHECK(rate.context == 0);

  SUBCASE("zero fraction pins the overall rate at zero") {
    const auto starved = overall_rate(spec, fractions_from({{1.0}, {0.0}}));
    CHECK(starved.value == 0.0);
    CHECK(starved.design == 1);
    CHECK(starved.context == 0);
  }

  SUBCASE("ties report the lexicographically smallest pair") {
    auto twin = analytic_problem(
        {{DistributionModel::normal(0.0, 1.0), DistributionModel::normal(0.0, 1.0)},
         {DistributionModel::normal(1.0, 1.0), DistributionModel::normal(1.0, 1.0)}});
    const auto tied = overall_rate(twin, fractions_from({{0.25, 0.25}, {0.25, 0.25}}));
    CHECK(tied.context == 0);
    CHECK(tied.design == 1);
  }

  SUBCASE("overall rate is bounded by every pair rate") {
    auto wide = analytic_problem({{DistributionModel::normal(0.0, 1.0)},
                                  {DistributionModel::normal(0.5, 2.0)},
                                  {DistributionModel::normal(2.0, 0.5)}});
    RngStream rng(5);
    for (int t = 0; t < 50; ++t) {
      double a0 = 0.05 + rng.uniform(), a1 = 0.05 + rng.uniform(), a2 = 0.05 + rng.uniform();
      const double sum = a0 + a1 + a2;
      auto fractions = fractions_from({{a0 / sum}, {a1 / sum}, {a2 / sum}});
      const auto overall = overall_rate(wide, fractions);
      for (int i = 1; i < 3; ++i) {
        const auto pair = pair_rate(wide.model(0, 0), wide.model(i, 0), fractions.at(0, 0),
                                    fractions.at(i, 0));
        CHECK(overall.value <= pair.value + 1e-15);
      }
    }
  }
}

TEST_CASE("overall rate is concave along simplex segments") {
  auto spec = analytic_problem({{DistributionModel::normal(0.0, 1.0)},
                                {DistributionModel::normal(0.7, 1.5)},
                                {DistributionModel::normal(1.4, 0.6)}});
  RngStream rng(31);
  for (int t = 0; t < 50; ++t) {
    double a[3], b[3], sa = 0.0, sb = 0.0;
    for (int i = 0; i < 3; ++i) {
      a[i] = 0.05 + rng.uniform();
      b[i] = 0.05 + rng.uniform();
      sa += a[i];
      sb += b[i];
    }
    auto fa = fractions_from({{a[0] / sa}, {a[1] / sa}, {a[2] / sa}});
    auto fb = fractions_from({{b[0] / sb}, {b[1] / sb}, {b[2] / sb}});
    Matrix mid_alpha(3, 1, 0.0);
    for (int i = 0; i < 3; ++i) mid_alpha(i, 0) = 0.5 * (fa.at(i, 0) + fb.at(i, 0));
    const double va = overall_rate(spec, fa).value;
    const double vb = overall_rate(spec, fb).value;
    const double vm = overall_rate(spec, AllocationFractions(mid_alpha)).value;
    CHECK(vm >= 0.5 * (va + vb) - 1e-10);
  }
}

TEST_CASE("kkt residual is zero under symmetry and finite in general") {
  auto spec = analytic_problem({{DistributionModel::normal(0.0, 1.0)},
                                {DistributionModel::normal(1.0, 1.0)}});
  const auto symmetric = kkt_residual(spec, fractions_from({{0.5}, {0.5}}));
  CHECK(symmetric.balance.size() == 1);
  CHECK(symmetric.balance[0] == doctest::Approx(0.0));
  CHECK(symmetric.within_context.empty());
  CHECK(symmetric.across_context.empty());

  auto three = analytic_problem({{DistributionModel::normal(0.0, 1.0)},
                                 {DistributionModel::normal(1.0, 2.0)},
                                 {DistributionModel::normal(2.0, 1.0)}});
  const auto generic_point = kkt_residual(three, fractions_from({{0.5}, {0.3}, {0.2}}));
  CHECK(generic_point.max_abs() > 1e-3);
  for (double v : generic_point.balance) CHECK(std::isfinite(v));
  for (double v : generic_point.within_context) CHECK(std::isfinite(v));

  CHECK_THROWS_AS(kkt_residual(spec, fractions_from({{1.0}, {0.0}})),
                  DegenerateAllocationError);
}

TEST_CASE("solver finds the stationary allocation") {
  SUBCASE("two symmetric designs split evenly for any gap") {
    for (double delta : {0.1, 0.5, 2.0}) {
      auto spec = analytic_problem({{DistributionModel::normal(0.0, 1.0)},
                                    {DistributionModel::normal(delta, 1.0)}});
      const auto fractions = solve_optimal_fractions(spec, 1e-9);
      CHECK(fractions.at(0, 0) == doctest::Approx(0.5).epsilon(1e-6));
      CHECK(fractions.at(1, 0) == doctest::Approx(0.5).epsilon(1e-6));
    }
  }

  SUBCASE("three designs meet the residual target and local optimality") {
    auto spec = analytic_problem({{DistributionModel::normal(0.0, 1.0)},
                                  {DistributionModel::normal(1.0, 1.0)},
                                  {DistributionModel::normal(2.0, 1.0)}});
    const auto fractions = solve_optimal_fractions(spec, 1e-6);
    CHECK(kkt_residual(spec, fractions).max_abs() < 1e-6);

    const double best_value = overall_rate(spec, fractions).value;
    RngStream rng(77);
    for (int t = 0; t < 100; ++t) {
      Matrix alpha = fractions.matrix();
      double shift[3];
      double mean = 0.0;
      for (int i = 0; i < 3; ++i) {
        shift[i] = rng.normal(0.0, 1.0);
        mean += shift[i] / 3.0;
      }
      double norm = 0.0;
      for (int i = 0; i < 3; ++i) {
        shift[i] -= mean;
        norm += shift[i] * shift[i];
      }
      norm = std::sqrt(norm);
      double sum = 0.0;
      for (int i = 0; i < 3; ++i) {
        alpha(i, 0) = std::max(0.0, alpha(i, 0) + 0.01 * shift[i] / norm);
        sum += alpha(i, 0);
      }
      for (int i = 0; i < 3; ++i) alpha(i, 0) /= sum;
      double partial = alpha(0, 0) + alpha(1, 0);
      alpha(2, 0) = std::max(0.0, 1.0 - partial);
      const double perturbed = overall_rate(spec, AllocationFractions(alpha)).value;
      CHECK(best_value >= perturbed - 1e-9);
    }
  }

  SUBCASE("identical contexts receive identical sub-allocations") {
    auto spec = analytic_problem(
        {{DistributionModel::normal(0.0, 1.0), DistributionModel::normal(0.0, 1.0)},
         {DistributionModel::normal(1.0, 2.0), DistributionModel::normal(1.0, 2.0)},
         {DistributionModel::normal(1.5, 0.5), DistributionModel::normal(1.5, 0.5)}});
    const auto fractions = solve_optimal_fractions(spec, 1e-8);
    for (int i = 0; i < 3; ++i) {
      CHECK(fractions.at(i, 0) == doctest::Approx(fractions.at(i, 1)).epsilon(1e-6));
    }
  }

  SUBCASE("balance ratio sum reaches one at the solution") {
    auto spec = analytic_problem({{DistributionModel::normal(0.0, 1.5)},
                                  {DistributionModel::normal(0.8, 1.0)},
                                  {DistributionModel::normal(1.6, 2.0)}});
    const auto fractions = solve_optimal_fractions(spec, 1e-8);
    double ratio_sum = 0.0;
    for (int i = 1; i < 3; ++i) {
      ratio_sum += spec.model(0, 0).variance() * fractions.at(i, 0) * fractions.at(i, 0) /
                   (spec.model(i, 0).variance() * fractions.at(0, 0) * fractions.at(0, 0));
    }
    CHECK(ratio_sum == doctest::Approx(1.0).epsilon(1e-5));
  }

  SUBCASE("exponential and bernoulli families solve too") {
    auto exponential = analytic_problem({{DistributionModel::exponential(2.0)},
                                         {DistributionModel::exponential(1.2)},
                                         {DistributionModel::exponential(0.8)}});
    CHECK(kkt_residual(exponential, solve_optimal_fractions(exponential, 1e-7)).max_abs() < 1e-7);

    auto bernoulli = analytic_problem({{DistributionModel::bernoulli(0.2)},
                                       {DistributionModel::bernoulli(0.4)},
                                       {DistributionModel::bernoulli(0.7)}});
    CHECK(kkt_residual(bernoulli, solve_optimal_fractions(bernoulli, 1e-7)).max_abs() < 1e-7);
  }
}
