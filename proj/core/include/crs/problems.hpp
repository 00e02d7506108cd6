#pragma once

#include <span>
#include <string>
#include <vector>

#include "crs/types.hpp"

namespace crs::problems {

enum class BenchmarkFunction { rastrigin, sphere, rosenbrock, mccormick };

BenchmarkFunction parse_benchmark(std::string_view name);
std::string to_string(BenchmarkFunction function);

// A noisy benchmark selection problem: deterministic objective f(z - x) on a
// finite design/context grid plus additive normal noise.
struct BenchmarkSpec {
  BenchmarkFunction function = BenchmarkFunction::sphere;
  std::vector<std::vector<double>> contexts;
  std::vector<std::vector<double>> designs;
  double noise_variance = 1.0;
};

// Deterministic objective value for design z under context x.
double benchmark_mean(BenchmarkFunction function, std::span<const double> design,
                      std::span<const double> context);

// The four named grid presets (contexts, designs and noise fixed).
BenchmarkSpec benchmark_preset(BenchmarkFunction function);

// Analytic means with the per-context argmin; throws GroundTruthError if the
// grid admits a tied best design.
GroundTruth benchmark_ground_truth(const BenchmarkSpec& spec);

// Wraps a benchmark into a ProblemSpec with normal sources and ground truth.
ProblemSpec make_benchmark_problem(const BenchmarkSpec& spec);

struct RevenueParams {
  double h = 10.0;
  double c0 = 1.0;
  double c1 = 0.0;
  std::vector<double> c;  // one cost coefficient per station
};

// Tandem production line: Poisson arrivals, one exponential server per
// station, finite inter-station buffers with blocking after service.
struct ProductionLineSpec {
  int stations = 2;
  int buffer_capacity = 10;
  std::vector<double> arrival_rates;                 // one context per rate
  std::vector<std::vector<double>> service_designs;  // service rate vectors
  double horizon = 1000.0;
  double warmup = 100.0;
  RevenueParams revenue;
};

void validate(const ProductionLineSpec& spec);

// One revenue sample from a discrete-event run over [0, horizon]; the
// throughput counts completions after warmup.
double simulate_production_line(const ProductionLineSpec& spec, int design_index,
                                int context_index, RngStream& rng);

ProductionLineSpec production_line_preset();

// Wraps the line into a ProblemSpec of black-box sources (no ground truth;
// use the exhaustive-simulation oracle when one is needed).
ProblemSpec make_production_line_problem(const ProductionLineSpec& spec);

// Presets addressable by name: rastrigin, sphere, rosenbrock, mccormick,
// production_line. Unknown names raise ConfigError.
ProblemSpec paper_preset(const std::string& name);

std::vector<std::string> preset_names();

}  // namespace crs::problems
