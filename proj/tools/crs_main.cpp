#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "crs/harness.hpp"
#include "crs/measures.hpp"
#include "crs/problems.hpp"
#include "crs/ratefn.hpp"

namespace {

void write_text(const std::string& path, const std::string& text) {
  if (path.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream file(path, std::ios::binary);
  if (!file) throw crs::Error("cannot open '" + path + "' for writing");
  file << text;
}

std::string format_value(double v) {
  char buffer[32];
  std::snprintf(buffer, sizeof(buffer), "%.12g", v);
  return buffer;
}

int run_command(const std::string& config_path, const std::string& out_override,
                bool seed_given, std::uint64_t seed_override, int threads_override) {
  auto config = crs::harness::load_config(config_path);
  if (!out_override.empty()) config.output_path = out_override;
  if (seed_given) config.base_seed = seed_override;
  if (threads_override > 0) config.threads = threads_override;

  const auto series = crs::harness::run_experiment(config);
  if (config.output_path.empty()) {
    std::cout << crs::harness::to_csv(series);
  } else {
    std::cerr << "wrote " << series.checkpoints.size() << " checkpoints x "
              << series.macro_reps << " macro-replications to " << config.output_path << "\n";
  }
  return 0;
}

int slope_command(const std::string& config_path, const std::string& fractions_path,
                  const std::string& out_override) {
  auto config = crs::harness::load_config(config_path);
  config.policy = crs::harness::load_fractions_file(fractions_path, config.problem.num_designs(),
                                                    config.problem.num_contexts());
  if (!out_override.empty()) config.output_path = out_override;

  const auto series = crs::harness::run_fixed_allocation(config);
  if (!config.output_path.empty()) {
    std::cerr << "wrote " << series.checkpoints.size() << " checkpoints to "
              << config.output_path << "\n";
  } else {
    std::cout << crs::harness::to_csv(series);
  }

  // Fitted decay per measure over the upper half of the checkpoints,
  // skipping saturated estimates.
  const auto fit_upper = [&](const std::vector<double>& pfs, const char* label) {
    std::vector<long long> n;
    std::vector<double> values;
    for (std::size_t t = series.checkpoints.size() / 2; t < series.checkpoints.size(); ++t) {
      if (pfs[t] > 0.0 && pfs[t] < 1.0) {
        n.push_back(series.checkpoints[t]);
        values.push_back(pfs[t]);
      }
    }
    if (n.size() < 2) {
      std::cerr << label << ": not enough unsaturated checkpoints for a slope fit\n";
      return;
    }
    const auto fit = crs::measures::fit_log_slope(n, values, 0, n.size());
    std::cerr << label << ": slope " << format_value(fit.slope) << " per replication (r^2 "
              << format_value(fit.r_squared) << ", " << n.size() << " points)\n";
  };
  fit_upper(series.pfs_e, "log PFS_E");
  fit_upper(series.pfs_m, "log PFS_M");
  fit_upper(series.pfs_a, "log PFS_A");
  return 0;
}

int ratefn_command(const std::string& spec_path, const std::string& alpha_path,
                   const std::string& out_path) {
  const auto spec = crs::harness::load_problem_file(spec_path);
  const auto fractions = crs::harness::load_fractions_file(alpha_path, spec.num_designs(),
                                                           spec.num_contexts());
  const auto& truth = spec.ground_truth();

  std::string csv = "kind,context,design,value,gamma\n";
  for (int j = 0; j < spec.num_contexts(); ++j) {
    const int best = truth.best_design(j);
    for (int i = 0; i < spec.num_designs(); ++i) {
      if (i == best) continue;
      const auto pair = crs::ratefn::pair_rate(spec.model(best, j), spec.model(i, j),
                                               fractions.at(best, j), fractions.at(i, j));
      csv += "pair_rate," + std::to_string(j) + "," + std::to_string(i) + "," +
             format_value(pair.value) + "," + format_value(pair.gamma) + "\n";
    }
  }
  const auto residual = crs::ratefn::kkt_residual(spec, fractions);
  for (int j = 0; j < spec.num_contexts(); ++j) {
    csv += "balance," + std::to_string(j) + ",," + format_value(residual.balance[j]) + ",\n";
  }
  double within = 0.0, across = 0.0;
  for (double v : residual.within_context) within = std::max(within, std::abs(v));
  for (double v : residual.across_context) across = std::max(across, std::abs(v));
  csv += "max_abs_within_gap,,," + format_value(within) + ",\n";
  csv += "max_abs_across_gap,,," + format_value(across) + ",\n";
  csv += "max_abs_residual,,," + format_value(residual.max_abs()) + ",\n";

  const auto overall = crs::ratefn::overall_rate(spec, fractions);
  csv += "overall_rate," + std::to_string(overall.context) + "," +
         std::to_string(overall.design) + "," + format_value(overall.value) + ",\n";

  write_text(out_path, csv);
  return 0;
}

int solve_command(const std::string& spec_path, double tolerance, const std::string& out_path) {
  const auto spec = crs::harness::load_problem_file(spec_path);
  const auto fractions = crs::ratefn::solve_optimal_fractions(spec, tolerance);

  std::string csv = "design,context,alpha\n";
  for (int j = 0; j < spec.num_contexts(); ++j) {
    for (int i = 0; i < spec.num_designs(); ++i) {
      csv += std::to_string(i) + "," + std::to_string(j) + "," +
             format_value(fractions.at(i, j)) + "\n";
    }
  }
  write_text(out_path, csv);

  const auto overall = crs::ratefn::overall_rate(spec, fractions);
  const auto residual = crs::ratefn::kkt_residual(spec, fractions);
  std::cerr << "rate " << format_value(overall.value) << ", max residual "
            << format_value(residual.max_abs()) << "\n";
  return 0;
}

int presets_command() {
  for (const auto& name : crs::problems::preset_names()) {
    const auto spec = crs::problems::paper_preset(name);
    std::cout << name << ": " << spec.num_designs() << " designs x " << spec.num_contexts()
              << " contexts" << (spec.all_analytic() ? "" : " (simulation)") << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"contextual ranking and selection experiments"};
  app.require_subcommand(1);

  std::string config_path, fractions_path, spec_path, alpha_path, out_path;
  std::uint64_t seed = 0;
  int threads = 0;
  double tolerance = 1e-6;

  auto* run = app.add_subcommand("run", "run a sequential-policy experiment from a config file");
  run->add_option("--config", config_path, "experiment config (JSON)")->required();
  run->add_option("--out", out_path, "output CSV path (overrides the config)");
  auto* seed_option = run->add_option("--seed", seed, "base seed (overrides the config)");
  run->add_option("--threads", threads, "worker threads (overrides the config)");

  auto* slope = app.add_subcommand("slope", "fixed-allocation experiment and log-PFS slopes");
  slope->add_option("--config", config_path, "experiment config (JSON)")->required();
  slope->add_option("--fractions", fractions_path, "fixed allocation fractions (JSON)")
      ->required();
  slope->add_option("--out", out_path, "output CSV path (overrides the config)");

  auto* ratefn = app.add_subcommand("ratefn", "tabulate pair rates and KKT residuals");
  ratefn->add_option("--spec", spec_path, "problem spec (JSON)")->required();
  ratefn->add_option("--alpha", alpha_path, "allocation fractions (JSON)")->required();
  ratefn->add_option("--out", out_path, "output CSV path (default stdout)");

  auto* solve = app.add_subcommand("solve", "solve for the rate-optimal allocation");
  solve->add_option("--spec", spec_path, "problem spec (JSON)")->required();
  solve->add_option("--tol", tolerance, "max-abs KKT residual target");
  solve->add_option("--out", out_path, "output CSV path (default stdout)");

  app.add_subcommand("presets", "list the built-in problem presets");

  CLI11_PARSE(app, argc, argv);

  try {
    if (app.got_subcommand("run")) {
      return run_command(config_path, out_path, seed_option->count() > 0, seed, threads);
    }
    if (app.got_subcommand("slope")) {
      return slope_command(config_path, fractions_path, out_path);
    }
    if (app.got_subcommand("ratefn")) {
      return ratefn_command(spec_path, alpha_path, out_path);
    }
    if (app.got_subcommand("solve")) {
      return solve_command(spec_path, tolerance, out_path);
    }
    if (app.got_subcommand("presets")) {
      return presets_command();
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
