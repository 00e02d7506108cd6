#include "crs/problems.hpp"

#include <cmath>
#include <memory>

namespace crs::problems {

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

std::vector<double> linspace(double lo, double hi, int count) {
  std::vector<double> points(count);
  for (int t = 0; t < count; ++t) {
    points[t] = lo + (hi - lo) * static_cast<double>(t) / static_cast<double>(count - 1);
  }
  return points;
}

// Row-major mesh of two coordinate axes, first axis slowest.
std::vector<std::vector<double>> mesh2(const std::vector<double>& a, const std::vector<double>& b) {
  std::vector<std::vector<double>> grid;
  grid.reserve(a.size() * b.size());
  for (double x : a) {
    for (double y : b) grid.push_back({x, y});
  }
  return grid;
}

std::vector<std::vector<double>> as_points(const std::vector<double>& values) {
  std::vector<std::vector<double>> points;
  points.reserve(values.size());
  for (double v : values) points.push_back({v});
  return points;
}

}  // namespace

BenchmarkFunction parse_benchmark(std::string_view name) {
  if (name == "rastrigin") return BenchmarkFunction::rastrigin;
  if (name == "sphere") return BenchmarkFunction::sphere;
  if (name == "rosenbrock") return BenchmarkFunction::rosenbrock;
  if (name == "mccormick") return BenchmarkFunction::mccormick;
  throw ConfigError("benchmark: unknown function '" + std::string(name) + "'");
}

std::string to_string(BenchmarkFunction function) {
  switch (function) {
    case BenchmarkFunction::rastrigin: return "rastrigin";
    case BenchmarkFunction::sphere: return "sphere";
    case BenchmarkFunction::rosenbrock: return "rosenbrock";
    case BenchmarkFunction::mccormick: return "mccormick";
  }
  return "unknown";
}

double benchmark_mean(BenchmarkFunction function, std::span<const double> design,
                      std::span<const double> context) {
  if (design.size() != context.size() || design.empty()) {
    throw std::invalid_argument("benchmark_mean: design/context dimension mismatch");
  }
  const std::size_t d = design.size();
  switch (function) {
    case BenchmarkFunction::rastrigin: {
      double value = 10.0 * static_cast<double>(d);
      for (std::size_t l = 0; l < d; ++l) {
        const double u = design[l] - context[l];
        value += u * u - 10.0 * std::cos(kTwoPi * u);
      }
      return value;
    }
    case BenchmarkFunction::sphere: {
      double value = 0.0;
      for (std::size_t l = 0; l < d; ++l) {
        const double u = design[l] - context[l];
        value += u * u;
      }
      return value;
    }
    case BenchmarkFunction::rosenbrock: {
      if (d < 2) {
        throw std::invalid_argument("benchmark_mean: rosenbrock needs dimension >= 2");
      }
      double value = 0.0;
      for (std::size_t l = 0; l + 1 < d; ++l) {
        const double u = design[l] - context[l];
        const double v = design[l + 1] - context[l + 1];
        const double a = v - u * u;
        const double b = 1.0 - u;
        value += 100.0 * a * a + b * b;
      }
      return value;
    }
    case BenchmarkFunction::mccormick: {
      if (d != 2) {
        throw std::invalid_argument("benchmark_mean: mccormick is two-dimensional");
      }
      const double u1 = design[0] - context[0];
      const double u2 = design[1] - context[1];
      return std::sin(u1 + u2) + (u1 - u2) * (u1 - u2) - 1.5 * u1 + 2.5 * u2 + 1.0;
    }
  }
  throw std::invalid_argument("benchmark_mean: unknown function");
}

BenchmarkSpec benchmark_preset(BenchmarkFunction function) {
  BenchmarkSpec spec;
  spec.function = function;
  switch (function) {
    case BenchmarkFunction::rastrigin:
      spec.contexts = as_points({-0.75, -0.45, -0.15, 0.15, 0.45, 0.75});
      spec.designs = as_points(linspace(-0.90, 0.90, 10));
      spec.noise_variance = 121.0;
      break;
    case BenchmarkFunction::sphere:
      spec.contexts = as_points({-0.45, -0.15, 0.15, 0.45});
      spec.designs = as_points(linspace(-1.25, 1.25, 11));
      spec.noise_variance = 0.05;
      break;
    case BenchmarkFunction::rosenbrock: {
      const std::vector<double> axis = {-0.30, -0.15, 0.0, 0.15, 0.30};
      const std::vector<double> design_axis = {0.0, 0.75, 1.5};
      spec.contexts = mesh2(axis, axis);
      spec.designs = mesh2(design_axis, design_axis);
      spec.noise_variance = 2.25;
      break;
    }
    case BenchmarkFunction::mccormick: {
      spec.contexts = {{-1.2, 0.0}, {0.0, 1.2}, {1.2, 0.0}};
      spec.designs = mesh2(linspace(-1.5, 1.5, 7), linspace(-3.0, 0.0, 7));
      spec.noise_variance = 0.49;
      break;
    }
  }
  return spec;
}

GroundTruth benchmark_ground_truth(const BenchmarkSpec& spec) {
  const int k = static_cast<int>(spec.designs.size());
  const int m = static_cast<int>(spec.contexts.size());
  Matrix means(k, m, 0.0);
  for (int i = 0; i < k; ++i) {
    for (int j = 0; j < m; ++j) {
      means(i, j) = benchmark_mean(spec.function, spec.designs[i], spec.contexts[j]);
    }
  }
  return GroundTruth::from_means(means);
}

ProblemSpec make_benchmark_problem(const BenchmarkSpec& spec) {
  GroundTruth truth = benchmark_ground_truth(spec);
  const int k = static_cast<int>(spec.designs.size());
  const int m = static_cast<int>(spec.contexts.size());
  Grid<DistributionModel> source(k, m);
  for (int i = 0; i < k; ++i) {
    for (int j = 0; j < m; ++j) {
      source(i, j) = DistributionModel::normal(truth.true_mean(i, j), spec.noise_variance);
    }
  }
  return ProblemSpec(ContextSet::with_uniform_probabilities(spec.contexts),
                     DesignSet(spec.designs), std::move(source), std::move(truth));
}

void validate(const ProductionLineSpec& spec) {
  if (spec.stations < 1) throw std::invalid_argument("production line: stations must be >= 1");
  if (spec.buffer_capacity < 1) {
    throw std::invalid_argument("production line: buffer capacity must be >= 1");
  }
  if (spec.arrival_rates.empty()) {
    throw std::invalid_argument("production line: at least one arrival-rate context required");
  }
  for (double x : spec.arrival_rates) {
    if (!(x > 0.0)) throw std::invalid_argument("production line: arrival rates must be positive");
  }
  if (spec.service_designs.size() < 2) {
    throw std::invalid_argument("production line: at least two designs required");
  }
  for (const auto& mu : spec.service_designs) {
    if (mu.size() != static_cast<std::size_t>(spec.stations)) {
      throw std::invalid_argument("production line: each design needs one rate per station");
    }
    for (double rate : mu) {
      if (!(rate > 0.0)) {
        throw std::invalid_argument("production line: service rates must be positive");
      }
    }
  }
  if (!(spec.warmup >= 0.0) || !(spec.horizon > spec.warmup)) {
    throw std::invalid_argument("production line: need horizon > warmup >= 0");
  }
  if (spec.revenue.c.size() != static_cast<std::size_t>(spec.stations)) {
    throw std::invalid_argument("production line: one cost coefficient per station required");
  }
}

namespace {

// Station status in the event loop. A blocked server holds a finished part
// that cannot enter the (full) downstream buffer.
enum class ServerState { idle, serving, blocked };

class TandemLine {
public:
  TandemLine(const ProductionLineSpec& spec, const std::vector<double>& mu, double arrival_rate,
             RngStream& rng)
      : spec_(spec), mu_(mu), arrival_rate_(arrival_rate), rng_(rng),
        queue_(spec.stations, 0), state_(spec.stations, ServerState::idle),
        finish_(spec.stations, 0.0) {}

  long long run() {
    double next_arrival = rng_.exponential(arrival_rate_);
    long long completions = 0;
    while (true) {
      int station = -1;
      double event_time = next_arrival;
      for (int s = 0; s < spec_.stations; ++s) {
        if (state_[s] == ServerState::serving && finish_[s] < event_time) {
          event_time = finish_[s];
          station = s;
        }
      }
      if (event_time > spec_.horizon) break;

      if (station < 0) {
        now_ = next_arrival;
        ++queue_[0];
        next_arrival = now_ + rng_.exponential(arrival_rate_);
        try_start(0);
      } else {
        now_ = finish_[station];
        complete_service(station, completions);
      }
    }
    return completions;
  }

private:
  void complete_service(int s, long long& completions) {
    if (s == spec_.stations - 1) {
      if (now_ > spec_.warmup) ++completions;
      state_[s] = ServerState::idle;
      try_start(s);
      return;
    }
    if (queue_[s + 1] < spec_.buffer_capacity) {
      ++queue_[s + 1];
      state_[s] = ServerState::idle;
      try_start(s + 1);
      try_start(s);
    } else {
      state_[s] = ServerState::blocked;
    }
  }

  // Pull the next waiting part into service at station s. The freed buffer
  // slot lets a blocked upstream server hand over its finished part, which
  // cascades further upstream.
  void try_start(int s) {
    if (state_[s] != ServerState::idle || queue_[s] == 0) return;
    --queue_[s];
    state_[s] = ServerState::serving;
    finish_[s] = now_ + rng_.exponential(mu_[s]);
    if (s > 0 && state_[s - 1] == ServerState::blocked && queue_[s] < spec_.buffer_capacity) {
      ++queue_[s];
      state_[s - 1] = ServerState::idle;
      try_start(s - 1);
    }
  }

  const ProductionLineSpec& spec_;
  const std::vector<double>& mu_;
  double arrival_rate_;
  RngStream& rng_;
  std::vector<int> queue_;
  std::vector<ServerState> state_;
  std::vector<double> finish_;
  double now_ = 0.0;
};

}  // namespace

double simulate_production_line(const ProductionLineSpec& spec, int design_index,
                                int context_index, RngStream& rng) {
  validate(spec);
  if (design_index < 0 || design_index >= static_cast<int>(spec.service_designs.size()) ||
      context_index < 0 || context_index >= static_cast<int>(spec.arrival_rates.size())) {
    throw std::invalid_argument("simulate_production_line: index out of range");
  }
  const std::vector<double>& mu = spec.service_designs[design_index];
  TandemLine line(spec, mu, spec.arrival_rates[context_index], rng);
  const long long completions = line.run();
  const double throughput =
      static_cast<double>(completions) / (spec.horizon - spec.warmup);

  double cost = spec.revenue.c0;
  for (int s = 0; s < spec.stations; ++s) cost += spec.revenue.c[s] * mu[s];
  return spec.revenue.h * throughput / cost - spec.revenue.c1;
}

ProductionLineSpec production_line_preset() {
  ProductionLineSpec spec;
  spec.stations = 2;
  spec.buffer_capacity = 10;
  spec.arrival_rates = {0.3, 0.5, 0.8};
  spec.service_designs = mesh2(linspace(0.1, 1.1, 6), linspace(0.1, 1.1, 6));
  spec.horizon = 1000.0;
  spec.warmup = 100.0;
  spec.revenue = RevenueParams{10.0, 1.0, 0.0, {1.0, 1.0}};
  return spec;
}

ProblemSpec make_production_line_problem(const ProductionLineSpec& spec) {
  validate(spec);
  auto shared = std::make_shared<ProductionLineSpec>(spec);
  const int k = static_cast<int>(spec.service_designs.size());
  const int m = static_cast<int>(spec.arrival_rates.size());
  Grid<DistributionModel> source(k, m);
  std::vector<std::vector<double>> contexts;
  for (double x : spec.arrival_rates) contexts.push_back({x});
  for (int i = 0; i < k; ++i) {
    for (int j = 0; j < m; ++j) {
      source(i, j) = DistributionModel::black_box([shared, i, j](RngStream& rng) {
        // Selection minimizes, so the sampler reports negated revenue.
        return -simulate_production_line(*shared, i, j, rng);
      });
    }
  }
  return ProblemSpec(ContextSet::with_uniform_probabilities(std::move(contexts)),
                     DesignSet(spec.service_designs), std::move(source));
}

ProblemSpec paper_preset(const std::string& name) {
  if (name == "production_line") {
    return make_production_line_problem(production_line_preset());
  }
  for (BenchmarkFunction function :
       {BenchmarkFunction::rastrigin, BenchmarkFunction::sphere, BenchmarkFunction::rosenbrock,
        BenchmarkFunction::mccormick}) {
    if (name == to_string(function)) {
      return make_benchmark_problem(benchmark_preset(function));
    }
  }
  throw ConfigError("problem: unknown preset '" + name + "'");
}

std::vector<std::string> preset_names() {
  return {"rastrigin", "sphere", "rosenbrock", "mccormick", "production_line"};
}

}  // namespace crs::problems
