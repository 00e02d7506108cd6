#include "crs/types.hpp"

#include <cmath>
#include <limits>

namespace crs {

namespace {

constexpr double kSimplexTolerance = 1e-12;

void require(bool condition, const std::string& message) {
  if (!condition) throw std::invalid_argument(message);
}

}  // namespace

ContextSet::ContextSet(std::vector<std::vector<double>> contexts, std::vector<double> probabilities)
    : contexts_(std::move(contexts)), probabilities_(std::move(probabilities)) {
  require(!contexts_.empty(), "ContextSet: at least one context required");
  const std::size_t d = contexts_.front().size();
  for (const auto& x : contexts_) {
    require(x.size() == d, "ContextSet: all context vectors must have equal dimension");
  }
  require(probabilities_.size() == contexts_.size(),
          "ContextSet: one probability per context required");
  double sum = 0.0;
  for (double p : probabilities_) {
    require(p >= 0.0, "ContextSet: probabilities must be non-negative");
    sum += p;
  }
  require(std::abs(sum - 1.0) <= kSimplexTolerance, "ContextSet: probabilities must sum to 1");
}

ContextSet ContextSet::with_uniform_probabilities(std::vector<std::vector<double>> contexts) {
  require(!contexts.empty(), "ContextSet: at least one context required");
  // 1/m entries summed in order can miss 1.0 by more than the simplex
  // tolerance; force exactness by assigning the closing residual.
  const std::size_t m = contexts.size();
  std::vector<double> p(m, 1.0 / static_cast<double>(m));
  double partial = 0.0;
  for (std::size_t j = 0; j + 1 < m; ++j) partial += p[j];
  p[m - 1] = 1.0 - partial;
  return ContextSet(std::move(contexts), std::move(p));
}

DesignSet::DesignSet(std::vector<std::vector<double>> designs) : designs_(std::move(designs)) {
  require(designs_.size() >= 2, "DesignSet: a selection problem needs at least two designs");
}

std::string to_string(Family family) {
  switch (family) {
    case Family::normal: return "normal";
    case Family::exponential: return "exponential";
    case Family::bernoulli: return "bernoulli";
    case Family::black_box: return "black_box";
  }
  return "unknown";
}

DistributionModel DistributionModel::normal(double mean, double variance) {
  require(std::isfinite(mean), "normal: mean must be finite");
  require(variance > 0.0 && std::isfinite(variance), "normal: variance must be strictly positive");
  return DistributionModel(NormalModel{mean, variance});
}

DistributionModel DistributionModel::exponential(double rate) {
  require(rate > 0.0 && std::isfinite(rate), "exponential: rate must be strictly positive");
  return DistributionModel(ExponentialModel{rate});
}

DistributionModel DistributionModel::bernoulli(double success_prob) {
  require(success_prob > 0.0 && success_prob < 1.0,
          "bernoulli: success probability must lie strictly inside (0, 1)");
  return DistributionModel(BernoulliModel{success_prob});
}

DistributionModel DistributionModel::black_box(std::function<double(RngStream&)> sampler) {
  require(static_cast<bool>(sampler), "black_box: sampler must be callable");
  return DistributionModel(BlackBoxModel{std::move(sampler)});
}

Family DistributionModel::family() const {
  switch (value_.index()) {
    case 0: return Family::normal;
    case 1: return Family::exponential;
    case 2: return Family::bernoulli;
    default: return Family::black_box;
  }
}

double DistributionModel::mean() const {
  switch (family()) {
    case Family::normal: return as_normal().mean;
    case Family::exponential: return 1.0 / as_exponential().rate;
    case Family::bernoulli: return as_bernoulli().success_prob;
    case Family::black_box: break;
  }
  throw Error("black-box source has no analytic mean");
}

double DistributionModel::variance() const {
  switch (family()) {
    case Family::normal: return as_normal().variance;
    case Family::exponential: {
      const double rate = as_exponential().rate;
      return 1.0 / (rate * rate);
    }
    case Family::bernoulli: {
      const double q = as_bernoulli().success_prob;
      return q * (1.0 - q);
    }
    case Family::black_box: break;
  }
  throw Error("black-box source has no analytic variance");
}

double DistributionModel::sample(RngStream& rng) const {
  switch (family()) {
    case Family::normal: {
      const auto& n = as_normal();
      return rng.normal(n.mean, std::sqrt(n.variance));
    }
    case Family::exponential: return rng.exponential(as_exponential().rate);
    case Family::bernoulli: return rng.bernoulli(as_bernoulli().success_prob);
    case Family::black_box: return std::get<BlackBoxModel>(value_).sampler(rng);
  }
  throw Error("unreachable model family");
}

GroundTruth::GroundTruth(Matrix true_means, std::vector<int> best_design)
    : true_means_(std::move(true_means)), best_design_(std::move(best_design)) {
  require(best_design_.size() == static_cast<std::size_t>(true_means_.cols()),
          "GroundTruth: one best design per context required");
  for (int j = 0; j < true_means_.cols(); ++j) {
    const int best = best_design_[j];
    require(best >= 0 && best < true_means_.rows(), "GroundTruth: best design index out of range");
    for (int i = 0; i < true_means_.rows(); ++i) {
      if (i == best) continue;
      if (!(true_means_.at(i, j) > true_means_.at(best, j))) {
        throw GroundTruthError("GroundTruth: best design is not a strict unique minimum", j);
      }
    }
  }
}

GroundTruth GroundTruth::from_means(const Matrix& true_means) {
  std::vector<int> best(true_means.cols(), 0);
  for (int j = 0; j < true_means.cols(); ++j) {
    int arg = 0;
    for (int i = 1; i < true_means.rows(); ++i) {
      if (true_means.at(i, j) < true_means.at(arg, j)) arg = i;
    }
    for (int i = 0; i < true_means.rows(); ++i) {
      if (i != arg && true_means.at(i, j) == true_means.at(arg, j)) {
        throw GroundTruthError("GroundTruth: tied best designs under context", j);
      }
    }
    best[j] = arg;
  }
  return GroundTruth(true_means, std::move(best));
}

ProblemSpec::ProblemSpec(ContextSet contexts, DesignSet designs, Grid<DistributionModel> source,
                         std::optional<GroundTruth> ground_truth)
    : contexts_(std::move(contexts)),
      designs_(std::move(designs)),
      source_(std::move(source)),
      ground_truth_(std::move(ground_truth)) {
  require(source_.rows() == designs_.size() && source_.cols() == contexts_.size(),
          "ProblemSpec: source grid must be fully populated with k x m entries");
  if (ground_truth_) {
    require(ground_truth_->num_designs() == designs_.size() &&
                ground_truth_->num_contexts() == contexts_.size(),
            "ProblemSpec: ground truth dimensions must match k x m");
  }
}

bool ProblemSpec::all_analytic() const {
  for (const auto& model : source_.data()) {
    if (!model.is_analytic()) return false;
  }
  return true;
}

const GroundTruth& ProblemSpec::ground_truth() const {
  if (!ground_truth_) throw Error("ProblemSpec: ground truth not available");
  return *ground_truth_;
}

void ProblemSpec::set_ground_truth(GroundTruth truth) {
  require(truth.num_designs() == designs_.size() && truth.num_contexts() == contexts_.size(),
          "ProblemSpec: ground truth dimensions must match k x m");
  ground_truth_ = std::move(truth);
}

double sample(const ProblemSpec& spec, int design_index, int context_index, RngStream& rng) {
  if (!spec.source().in_range(design_index, context_index)) {
    throw std::invalid_argument("sample: design or context index out of range");
  }
  return spec.model(design_index, context_index).sample(rng);
}

AllocationFractions::AllocationFractions(Matrix alpha) : alpha_(std::move(alpha)) {
  require(alpha_.rows() >= 1 && alpha_.cols() >= 1, "AllocationFractions: empty matrix");
  double sum = 0.0;
  for (double a : alpha_.data()) {
    require(a >= 0.0, "AllocationFractions: fractions must be non-negative");
    sum += a;
  }
  require(std::abs(sum - 1.0) <= kSimplexTolerance, "AllocationFractions: fractions must sum to 1");
}

AllocationFractions AllocationFractions::uniform(int num_designs, int num_contexts) {
  const int cells = num_designs * num_contexts;
  require(cells >= 1, "AllocationFractions: empty grid");
  Matrix alpha(num_designs, num_contexts, 1.0 / static_cast<double>(cells));
  double partial = 0.0;
  for (std::size_t t = 0; t + 1 < alpha.data().size(); ++t) partial += alpha.data()[t];
  alpha.data().back() = 1.0 - partial;
  return AllocationFractions(std::move(alpha));
}

AllocationState::AllocationState(int num_designs, int num_contexts)
    : counts_(num_designs, num_contexts, 0),
      mean_(num_designs, num_contexts, 0.0),
      m2_(num_designs, num_contexts, 0.0) {
  require(num_designs >= 1 && num_contexts >= 1, "AllocationState: empty grid");
}

void AllocationState::add(int i, int j, double value) {
  if (!counts_.in_range(i, j)) {
    throw std::invalid_argument("AllocationState::add: index out of range");
  }
  long long& n = counts_(i, j);
  double& mean = mean_(i, j);
  double& m2 = m2_(i, j);
  ++n;
  const double delta = value - mean;
  mean += delta / static_cast<double>(n);
  m2 += delta * (value - mean);
  ++total_;
}

double AllocationState::mean(int i, int j) const {
  if (!has_mean(i, j)) throw EmptyStateError("sample mean undefined for an empty cell");
  return mean_.at(i, j);
}

double AllocationState::variance(int i, int j) const {
  if (!has_variance(i, j)) {
    throw EmptyStateError("sample variance undefined below two replications");
  }
  const double v = m2_.at(i, j) / static_cast<double>(counts_.at(i, j) - 1);
  return v < 0.0 ? 0.0 : v;
}

long long AllocationState::min_count() const {
  long long lo = std::numeric_limits<long long>::max();
  for (long long c : counts_.data()) lo = std::min(lo, c);
  return lo;
}

AllocationFractions AllocationState::fractions() const {
  if (total_ == 0) throw EmptyStateError("fractions undefined for an empty state");
  Matrix alpha(counts_.rows(), counts_.cols(), 0.0);
  for (int i = 0; i < counts_.rows(); ++i) {
    for (int j = 0; j < counts_.cols(); ++j) {
      alpha(i, j) = static_cast<double>(counts_.at(i, j)) / static_cast<double>(total_);
    }
  }
  return AllocationFractions(std::move(alpha));
}

}  // namespace crs
