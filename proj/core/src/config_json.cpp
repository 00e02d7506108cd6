#include <fstream>
#include <set>

#include <json.hpp>

#include "crs/harness.hpp"
#include "crs/problems.hpp"

namespace crs::harness {

namespace {

using nlohmann::json;

json parse_file(const std::string& path) {
  std::ifstream file(path);
  if (!file) throw ConfigError("cannot open config file '" + path + "'");
  json value;
  try {
    file >> value;
  } catch (const json::parse_error& e) {
    throw ConfigError("malformed JSON in '" + path + "': " + e.what());
  }
  return value;
}

void reject_unknown_keys(const json& object, const std::set<std::string>& known,
                         const std::string& where) {
  for (const auto& [key, value] : object.items()) {
    if (!known.contains(key)) {
      throw ConfigError(where + ": unknown key '" + key + "'");
    }
  }
}

double number_field(const json& object, const char* key, const std::string& where) {
  if (!object.contains(key)) throw ConfigError(where + ": missing key '" + key + "'");
  if (!object[key].is_number()) throw ConfigError(where + ": '" + key + "' must be a number");
  return object[key].get<double>();
}

std::vector<std::vector<double>> point_list(const json& value, const std::string& where) {
  if (!value.is_array() || value.empty()) {
    throw ConfigError(where + ": expected a non-empty array of points");
  }
  std::vector<std::vector<double>> points;
  for (const auto& entry : value) {
    if (entry.is_number()) {
      points.push_back({entry.get<double>()});
    } else if (entry.is_array()) {
      std::vector<double> point;
      for (const auto& coord : entry) {
        if (!coord.is_number()) throw ConfigError(where + ": coordinates must be numbers");
        point.push_back(coord.get<double>());
      }
      points.push_back(std::move(point));
    } else {
      throw ConfigError(where + ": points must be numbers or arrays of numbers");
    }
  }
  return points;
}

std::vector<double> number_list(const json& value, const std::string& where) {
  if (!value.is_array()) throw ConfigError(where + ": expected an array of numbers");
  std::vector<double> numbers;
  for (const auto& entry : value) {
    if (!entry.is_number()) throw ConfigError(where + ": entries must be numbers");
    numbers.push_back(entry.get<double>());
  }
  return numbers;
}

DistributionModel model_from_json(const json& value, const std::string& where) {
  if (!value.is_object()) throw ConfigError(where + ": model must be an object");
  if (!value.contains("family") || !value["family"].is_string()) {
    throw ConfigError(where + ": model needs a 'family' string");
  }
  const std::string family = value["family"].get<std::string>();
  if (family == "normal") {
    reject_unknown_keys(value, {"family", "mean", "variance"}, where);
    return DistributionModel::normal(number_field(value, "mean", where),
                                     number_field(value, "variance", where));
  }
  if (family == "exponential") {
    reject_unknown_keys(value, {"family", "rate"}, where);
    return DistributionModel::exponential(number_field(value, "rate", where));
  }
  if (family == "bernoulli") {
    reject_unknown_keys(value, {"family", "p"}, where);
    return DistributionModel::bernoulli(number_field(value, "p", where));
  }
  throw ConfigError(where + ": unknown model family '" + family + "'");
}

ProblemSpec analytic_problem_from_json(const json& value) {
  reject_unknown_keys(value, {"contexts", "designs", "context_probabilities", "models"},
                      "problem");
  if (!value.contains("contexts") || !value.contains("designs") || !value.contains("models")) {
    throw ConfigError("problem: inline problems need 'contexts', 'designs' and 'models'");
  }
  auto contexts = point_list(value["contexts"], "problem.contexts");
  auto designs = point_list(value["designs"], "problem.designs");
  const int k = static_cast<int>(designs.size());
  const int m = static_cast<int>(contexts.size());

  const json& models = value["models"];
  if (!models.is_array() || models.size() != static_cast<std::size_t>(k)) {
    throw ConfigError("problem.models: expected one row per design");
  }
  Grid<DistributionModel> source(k, m);
  for (int i = 0; i < k; ++i) {
    const json& row = models[i];
    if (!row.is_array() || row.size() != static_cast<std::size_t>(m)) {
      throw ConfigError("problem.models: expected one entry per context in every row");
    }
    for (int j = 0; j < m; ++j) {
      source(i, j) = model_from_json(row[j], "problem.models");
    }
  }

  ContextSet context_set =
      value.contains("context_probabilities")
          ? ContextSet(std::move(contexts),
                       number_list(value["context_probabilities"], "problem.context_probabilities"))
          : ContextSet::with_uniform_probabilities(std::move(contexts));
  ProblemSpec spec(std::move(context_set), DesignSet(std::move(designs)), std::move(source));

  Matrix means(k, m, 0.0);
  for (int i = 0; i < k; ++i) {
    for (int j = 0; j < m; ++j) means(i, j) = spec.model(i, j).mean();
  }
  spec.set_ground_truth(GroundTruth::from_means(means));
  return spec;
}

ProblemSpec production_line_from_json(const json& value) {
  reject_unknown_keys(value,
                      {"stations", "buffer_capacity", "arrival_rates", "service_designs",
                       "horizon", "warmup", "revenue"},
                      "problem.production_line");
  problems::ProductionLineSpec line = problems::production_line_preset();
  if (value.contains("stations")) {
    line.stations = static_cast<int>(number_field(value, "stations", "problem.production_line"));
  }
  if (value.contains("buffer_capacity")) {
    line.buffer_capacity =
        static_cast<int>(number_field(value, "buffer_capacity", "problem.production_line"));
  }
  if (value.contains("arrival_rates")) {
    line.arrival_rates =
        number_list(value["arrival_rates"], "problem.production_line.arrival_rates");
  }
  if (value.contains("service_designs")) {
    line.service_designs =
        point_list(value["service_designs"], "problem.production_line.service_designs");
  }
  if (value.contains("horizon")) {
    line.horizon = number_field(value, "horizon", "problem.production_line");
  }
  if (value.contains("warmup")) {
    line.warmup = number_field(value, "warmup", "problem.production_line");
  }
  if (value.contains("revenue")) {
    const json& revenue = value["revenue"];
    reject_unknown_keys(revenue, {"h", "c0", "c1", "c"}, "problem.production_line.revenue");
    if (revenue.contains("h")) line.revenue.h = number_field(revenue, "h", "revenue");
    if (revenue.contains("c0")) line.revenue.c0 = number_field(revenue, "c0", "revenue");
    if (revenue.contains("c1")) line.revenue.c1 = number_field(revenue, "c1", "revenue");
    if (revenue.contains("c")) {
      line.revenue.c = number_list(revenue["c"], "problem.production_line.revenue.c");
    }
  }
  if (line.revenue.c.size() != static_cast<std::size_t>(line.stations)) {
    line.revenue.c.assign(static_cast<std::size_t>(line.stations), 1.0);
  }
  try {
    problems::validate(line);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("problem.production_line: ") + e.what());
  }
  return problems::make_production_line_problem(line);
}

ProblemSpec problem_from_json(const json& value, std::string* name_out) {
  if (value.is_string()) {
    if (name_out) *name_out = value.get<std::string>();
    return problems::paper_preset(value.get<std::string>());
  }
  if (!value.is_object()) {
    throw ConfigError("problem: expected a preset name or an object");
  }
  if (value.contains("preset")) {
    reject_unknown_keys(value, {"preset"}, "problem");
    if (!value["preset"].is_string()) throw ConfigError("problem.preset: expected a string");
    if (name_out) *name_out = value["preset"].get<std::string>();
    return problems::paper_preset(value["preset"].get<std::string>());
  }
  if (value.contains("production_line")) {
    reject_unknown_keys(value, {"production_line"}, "problem");
    if (name_out) *name_out = "production_line";
    return production_line_from_json(value["production_line"]);
  }
  if (name_out) *name_out = "inline";
  return analytic_problem_from_json(value);
}

AllocationFractions fractions_from_json(const json& value, int num_designs, int num_contexts,
                                        const std::string& where) {
  const json* rows = &value;
  if (value.is_object()) {
    reject_unknown_keys(value, {"alpha"}, where);
    if (!value.contains("alpha")) throw ConfigError(where + ": missing 'alpha' matrix");
    rows = &value["alpha"];
  }
  if (!rows->is_array() || rows->size() != static_cast<std::size_t>(num_designs)) {
    throw ConfigError(where + ": expected one row of fractions per design");
  }
  Matrix alpha(num_designs, num_contexts, 0.0);
  for (int i = 0; i < num_designs; ++i) {
    const json& row = (*rows)[i];
    if (!row.is_array() || row.size() != static_cast<std::size_t>(num_contexts)) {
      throw ConfigError(where + ": expected one fraction per context in every row");
    }
    for (int j = 0; j < num_contexts; ++j) {
      if (!row[j].is_number()) throw ConfigError(where + ": fractions must be numbers");
      alpha(i, j) = row[j].get<double>();
    }
  }
  try {
    return AllocationFractions(std::move(alpha));
  } catch (const std::invalid_argument& e) {
    throw ConfigError(where + ": " + e.what());
  }
}

}  // namespace

ExperimentConfig load_config(const std::string& path) {
  const json root = parse_file(path);
  if (!root.is_object()) throw ConfigError("config: top level must be an object");
  reject_unknown_keys(root,
                      {"problem", "policy", "n0", "delta_n", "budget", "checkpoints",
                       "macro_reps", "base_seed", "context_probabilities", "output", "threads",
                       "oracle_reps"},
                      "config");
  if (!root.contains("problem")) throw ConfigError("config: missing 'problem'");
  if (!root.contains("budget")) throw ConfigError("config: missing 'budget'");

  std::string problem_name;
  ProblemSpec problem = problem_from_json(root["problem"], &problem_name);

  ExperimentConfig config{std::move(problem)};
  config.problem_name = problem_name;

  if (root.contains("policy")) {
    const json& policy = root["policy"];
    if (policy.is_string()) {
      config.policy = policies::parse_policy(policy.get<std::string>());
    } else if (policy.is_object() && policy.contains("fixed_fractions")) {
      reject_unknown_keys(policy, {"fixed_fractions"}, "policy");
      config.policy =
          fractions_from_json(policy["fixed_fractions"], config.problem.num_designs(),
                              config.problem.num_contexts(), "policy.fixed_fractions");
    } else {
      throw ConfigError("policy: expected a policy name or {\"fixed_fractions\": ...}");
    }
  }

  if (root.contains("n0")) config.n0 = static_cast<int>(number_field(root, "n0", "config"));
  if (root.contains("delta_n")) {
    config.delta_n = static_cast<int>(number_field(root, "delta_n", "config"));
  }
  config.budget = static_cast<long long>(number_field(root, "budget", "config"));
  if (root.contains("checkpoints")) {
    for (double v : number_list(root["checkpoints"], "config.checkpoints")) {
      config.checkpoints.push_back(static_cast<long long>(v));
    }
  }
  if (root.contains("macro_reps")) {
    config.macro_reps = static_cast<long long>(number_field(root, "macro_reps", "config"));
  }
  if (root.contains("base_seed")) {
    config.base_seed = static_cast<std::uint64_t>(number_field(root, "base_seed", "config"));
  }
  if (root.contains("context_probabilities")) {
    config.context_probabilities =
        number_list(root["context_probabilities"], "config.context_probabilities");
  }
  if (root.contains("output")) {
    if (!root["output"].is_string()) throw ConfigError("output: expected a string path");
    config.output_path = root["output"].get<std::string>();
  }
  if (root.contains("threads")) {
    config.threads = static_cast<int>(number_field(root, "threads", "config"));
  }
  if (root.contains("oracle_reps")) {
    config.oracle_reps = static_cast<long long>(number_field(root, "oracle_reps", "config"));
  }
  return config;
}

ProblemSpec load_problem_file(const std::string& path) {
  return problem_from_json(parse_file(path), nullptr);
}

AllocationFractions load_fractions_file(const std::string& path, int num_designs,
                                        int num_contexts) {
  return fractions_from_json(parse_file(path), num_designs, num_contexts, "fractions");
}

}  // namespace crs::harness
