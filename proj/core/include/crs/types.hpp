#pragma once

#include <functional>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "crs/errors.hpp"
#include "crs/grid.hpp"
#include "crs/rng.hpp"

namespace crs {

// Finite context space: m context vectors of equal dimension plus their
// occurrence probabilities (a point on the (m-1)-simplex).
class ContextSet {
public:
  ContextSet(std::vector<std::vector<double>> contexts, std::vector<double> probabilities);

  // Uniform probabilities 1/m.
  static ContextSet with_uniform_probabilities(std::vector<std::vector<double>> contexts);

  int size() const { return static_cast<int>(contexts_.size()); }
  int dimension() const { return static_cast<int>(contexts_.front().size()); }
  const std::vector<double>& context(int j) const { return contexts_.at(j); }
  const std::vector<std::vector<double>>& contexts() const { return contexts_; }
  const std::vector<double>& probabilities() const { return probabilities_; }

private:
  std::vector<std::vector<double>> contexts_;
  std::vector<double> probabilities_;
};

// Finite design space; a selection problem needs at least two alternatives.
class DesignSet {
public:
  explicit DesignSet(std::vector<std::vector<double>> designs);

  int size() const { return static_cast<int>(designs_.size()); }
  const std::vector<double>& design(int i) const { return designs_.at(i); }
  const std::vector<std::vector<double>>& designs() const { return designs_; }

private:
  std::vector<std::vector<double>> designs_;
};

enum class Family { normal, exponential, bernoulli, black_box };

std::string to_string(Family family);

struct NormalModel {
  double mean = 0.0;
  double variance = 1.0;  // strictly positive
};

struct ExponentialModel {
  double rate = 1.0;  // strictly positive
};

struct BernoulliModel {
  double success_prob = 0.5;  // strictly inside (0, 1)
};

struct BlackBoxModel {
  std::function<double(RngStream&)> sampler;
};

// One (design, context) performance source: an analytic family with known
// moments, or an opaque simulator handle.
class DistributionModel {
public:
  DistributionModel() : value_(NormalModel{}) {}

  static DistributionModel normal(double mean, double variance);
  static DistributionModel exponential(double rate);
  static DistributionModel bernoulli(double success_prob);
  static DistributionModel black_box(std::function<double(RngStream&)> sampler);

  Family family() const;
  bool is_analytic() const { return family() != Family::black_box; }

  // Analytic moments; throws for black-box sources.
  double mean() const;
  double variance() const;

  double sample(RngStream& rng) const;

  const NormalModel& as_normal() const { return std::get<NormalModel>(value_); }
  const ExponentialModel& as_exponential() const { return std::get<ExponentialModel>(value_); }
  const BernoulliModel& as_bernoulli() const { return std::get<BernoulliModel>(value_); }

private:
  explicit DistributionModel(std::variant<NormalModel, ExponentialModel, BernoulliModel, BlackBoxModel> v)
      : value_(std::move(v)) {}

  std::variant<NormalModel, ExponentialModel, BernoulliModel, BlackBoxModel> value_;
};

// True means and the per-context best design. The best design must be the
// unique argmin of its column: ties make the selection problem ill-posed.
class GroundTruth {
public:
  GroundTruth(Matrix true_means, std::vector<int> best_design);

  // Derives best_design by column argmin; throws GroundTruthError on a tie.
  static GroundTruth from_means(const Matrix& true_means);

  int num_designs() const { return true_means_.rows(); }
  int num_contexts() const { return true_means_.cols(); }
  double true_mean(int i, int j) const { return true_means_.at(i, j); }
  const Matrix& true_means() const { return true_means_; }
  int best_design(int j) const { return best_design_.at(j); }
  const std::vector<int>& best_designs() const { return best_design_; }

private:
  Matrix true_means_;
  std::vector<int> best_design_;
};

// The full selection problem: contexts, designs, the k x m grid of sources,
// and (when known) the ground truth the correct-selection measures need.
class ProblemSpec {
public:
  ProblemSpec(ContextSet contexts, DesignSet designs, Grid<DistributionModel> source,
              std::optional<GroundTruth> ground_truth = std::nullopt);

  int num_designs() const { return designs_.size(); }
  int num_contexts() const { return contexts_.size(); }
  const ContextSet& contexts() const { return contexts_; }
  const DesignSet& designs() const { return designs_; }
  const DistributionModel& model(int i, int j) const { return source_.at(i, j); }
  const Grid<DistributionModel>& source() const { return source_; }

  bool all_analytic() const;

  bool has_ground_truth() const { return ground_truth_.has_value(); }
  const GroundTruth& ground_truth() const;
  void set_ground_truth(GroundTruth truth);

private:
  ContextSet contexts_;
  DesignSet designs_;
  Grid<DistributionModel> source_;
  std::optional<GroundTruth> ground_truth_;
};

// Draws one independent replication from source (i, j).
double sample(const ProblemSpec& spec, int design_index, int context_index, RngStream& rng);

// Per-cell allocation fractions alpha[i][j]: non-negative, summing to one.
class AllocationFractions {
public:
  explicit AllocationFractions(Matrix alpha);

  static AllocationFractions uniform(int num_designs, int num_contexts);

  int num_designs() const { return alpha_.rows(); }
  int num_contexts() const { return alpha_.cols(); }
  double at(int i, int j) const { return alpha_.at(i, j); }
  const Matrix& matrix() const { return alpha_; }

private:
  Matrix alpha_;
};

// Running per-cell sampling statistics: counts, means and variances held in
// one-pass stable form (running mean plus sum of squared deviations), since
// naive sum-of-squares accumulation cancels catastrophically at large counts.
class AllocationState {
public:
  AllocationState(int num_designs, int num_contexts);

  int num_designs() const { return counts_.rows(); }
  int num_contexts() const { return counts_.cols(); }

  long long count(int i, int j) const { return counts_.at(i, j); }
  const CountGrid& counts() const { return counts_; }
  long long total() const { return total_; }

  void add(int i, int j, double value);

  bool has_mean(int i, int j) const { return counts_.at(i, j) >= 1; }
  bool has_variance(int i, int j) const { return counts_.at(i, j) >= 2; }

  // Sample mean; defined only where count >= 1.
  double mean(int i, int j) const;
  // Unbiased sample variance (divisor count - 1); defined only where count >= 2.
  double variance(int i, int j) const;

  long long min_count() const;

  // alpha[i][j] = count / total; throws EmptyStateError when total is zero.
  AllocationFractions fractions() const;

private:
  CountGrid counts_;
  Matrix mean_;
  Matrix m2_;
  long long total_ = 0;
};

}  // namespace crs
