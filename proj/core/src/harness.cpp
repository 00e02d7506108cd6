#include "crs/harness.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <fstream>
#include <thread>

namespace crs::harness {

namespace {

// Salt separating the oracle's stream space from macro-replication streams.
constexpr std::uint64_t kOracleSalt = 0x6F7261636C65ULL;

std::vector<double> resolve_probabilities(const ExperimentConfig& config) {
  if (config.context_probabilities) return *config.context_probabilities;
  return config.problem.contexts().probabilities();
}

void validate_common(const ExperimentConfig& config) {
  const int k = config.problem.num_designs();
  const int m = config.problem.num_contexts();
  if (config.macro_reps < 1) throw ConfigError("macro_reps: must be at least 1");
  if (config.threads < 1) throw ConfigError("threads: must be at least 1");
  if (config.budget < 1) throw ConfigError("budget: must be positive");
  if (config.context_probabilities) {
    const auto& p = *config.context_probabilities;
    if (p.size() != static_cast<std::size_t>(m)) {
      throw ConfigError("context_probabilities: need one entry per context");
    }
    double sum = 0.0;
    for (double v : p) {
      if (v < 0.0) throw ConfigError("context_probabilities: entries must be non-negative");
      sum += v;
    }
    if (std::abs(sum - 1.0) > 1e-12) {
      throw ConfigError("context_probabilities: entries must sum to 1");
    }
  }
  if (config.is_fixed_allocation()) {
    const auto& fractions = std::get<FixedFractions>(config.policy);
    if (fractions.num_designs() != k || fractions.num_contexts() != m) {
      throw ConfigError("fixed_fractions: dimensions must match the problem");
    }
  } else {
    if (config.n0 < 1) throw ConfigError("n0: must be at least 1");
    if (std::get<policies::PolicyKind>(config.policy) != policies::PolicyKind::equal &&
        config.n0 < 2) {
      throw ConfigError("n0: variance-based policies need at least 2 replications per cell");
    }
    if (config.delta_n < 1) throw ConfigError("delta_n: must be at least 1");
    const long long init = static_cast<long long>(config.n0) * k * m;
    if (config.budget < init) {
      throw ConfigError("budget: must cover n0 replications per cell (n0*k*m)");
    }
  }
}

std::vector<long long> resolve_checkpoints(const ExperimentConfig& config, long long lo) {
  std::vector<long long> checkpoints =
      config.checkpoints.empty() ? default_checkpoints(lo, config.budget) : config.checkpoints;
  if (checkpoints.empty()) throw ConfigError("checkpoints: none within [lo, budget]");
  for (std::size_t t = 0; t < checkpoints.size(); ++t) {
    if (checkpoints[t] < lo || checkpoints[t] > config.budget) {
      throw ConfigError("checkpoints: must lie within [n0*k*m, budget]");
    }
    if (t > 0 && checkpoints[t] <= checkpoints[t - 1]) {
      throw ConfigError("checkpoints: must be strictly increasing");
    }
  }
  return checkpoints;
}

GroundTruth resolve_ground_truth(const ExperimentConfig& config) {
  const ProblemSpec& spec = config.problem;
  if (spec.has_ground_truth()) return spec.ground_truth();
  if (spec.all_analytic()) {
    Matrix means(spec.num_designs(), spec.num_contexts(), 0.0);
    for (int i = 0; i < spec.num_designs(); ++i) {
      for (int j = 0; j < spec.num_contexts(); ++j) {
        means(i, j) = spec.model(i, j).mean();
      }
    }
    return GroundTruth::from_means(means);
  }
  if (config.oracle_reps < 2) throw ConfigError("oracle_reps: must be at least 2");
  return measures::oracle_ground_truth(spec, config.oracle_reps,
                                       derive_stream_key(config.base_seed, kOracleSalt))
      .truth;
}

// Runs worker(rep) for rep in [0, reps) on the requested number of threads.
// Output written by rep index, so scheduling cannot affect results.
void parallel_for_reps(long long reps, int threads, const std::function<void(long long)>& worker) {
  const int used = static_cast<int>(std::min<long long>(threads, reps));
  if (used <= 1) {
    for (long long r = 0; r < reps; ++r) worker(r);
    return;
  }
  std::atomic<long long> next{0};
  std::vector<std::thread> pool;
  pool.reserve(used);
  for (int t = 0; t < used; ++t) {
    pool.emplace_back([&]() {
      while (true) {
        const long long r = next.fetch_add(1);
        if (r >= reps) break;
        worker(r);
      }
    });
  }
  for (auto& t : pool) t.join();
}

}  // namespace

std::vector<long long> default_checkpoints(long long lo, long long hi, int count) {
  if (lo < 1) lo = 1;
  if (hi < lo) hi = lo;
  std::vector<long long> points;
  const double ratio = static_cast<double>(hi) / static_cast<double>(lo);
  for (int t = 0; t < count; ++t) {
    const double frac = count == 1 ? 1.0 : static_cast<double>(t) / (count - 1);
    const long long n = std::llround(static_cast<double>(lo) * std::pow(ratio, frac));
    if (points.empty() || n > points.back()) points.push_back(n);
  }
  if (!points.empty()) {
    points.front() = lo;
    points.back() = hi;
  }
  // Clamping the ends can re-introduce duplicates when lo and hi are close.
  points.erase(std::unique(points.begin(), points.end()), points.end());
  return points;
}

CountGrid round_allocation(const AllocationFractions& fractions, long long n) {
  const int k = fractions.num_designs();
  const int m = fractions.num_contexts();
  CountGrid counts(k, m, 0);
  std::vector<std::tuple<double, int, int>> remainders;  // (-frac_part, j, i)
  long long assigned = 0;
  for (int j = 0; j < m; ++j) {
    for (int i = 0; i < k; ++i) {
      const double exact = fractions.at(i, j) * static_cast<double>(n);
      const long long floor_part = static_cast<long long>(std::floor(exact));
      counts(i, j) = floor_part;
      assigned += floor_part;
      remainders.emplace_back(-(exact - static_cast<double>(floor_part)), j, i);
    }
  }
  std::sort(remainders.begin(), remainders.end());
  long long leftover = n - assigned;
  for (const auto& [neg_frac, j, i] : remainders) {
    if (leftover <= 0) break;
    ++counts(i, j);
    --leftover;
  }
  return counts;
}

measures::PfsSeries run_experiment(const ExperimentConfig& config) {
  if (config.is_fixed_allocation()) return run_fixed_allocation(config);
  validate_common(config);

  const auto kind = std::get<policies::PolicyKind>(config.policy);
  const long long init =
      static_cast<long long>(config.n0) * config.problem.num_designs() *
      config.problem.num_contexts();
  policies::RunConfig run;
  run.n0 = config.n0;
  run.delta_n = config.delta_n;
  run.budget = config.budget;
  run.checkpoints = resolve_checkpoints(config, init);

  const GroundTruth truth = resolve_ground_truth(config);

  std::vector<measures::MacroRepTrace> traces(config.macro_reps);
  parallel_for_reps(config.macro_reps, config.threads, [&](long long r) {
    traces[r] = policies::run_policy(config.problem, kind, run,
                                     config.base_seed + static_cast<std::uint64_t>(r));
  });

  measures::PfsSeries series =
      measures::estimate_pfs(traces, truth, resolve_probabilities(config));
  if (!config.output_path.empty()) write_csv(series, config.output_path);
  return series;
}

measures::PfsSeries run_fixed_allocation(const ExperimentConfig& config) {
  if (!config.is_fixed_allocation()) {
    throw ConfigError("policy: run_fixed_allocation needs a fixed_fractions policy");
  }
  validate_common(config);
  const auto& fractions = std::get<FixedFractions>(config.policy);
  const int k = config.problem.num_designs();
  const int m = config.problem.num_contexts();

  std::vector<long long> checkpoints = config.checkpoints;
  if (checkpoints.empty()) {
    // Default range starts where every cell rounds to at least two draws.
    double min_alpha = 1.0;
    for (double a : fractions.matrix().data()) min_alpha = std::min(min_alpha, a);
    if (!(min_alpha > 0.0)) {
      throw ConfigError("fixed_fractions: every cell needs a positive fraction");
    }
    const long long lo = static_cast<long long>(std::ceil(2.0 / min_alpha));
    if (lo > config.budget) {
      throw ConfigError("budget: too small to give every cell two replications");
    }
    checkpoints = default_checkpoints(lo, config.budget);
  }
  for (std::size_t t = 0; t < checkpoints.size(); ++t) {
    if (checkpoints[t] < 1 || checkpoints[t] > config.budget) {
      throw ConfigError("checkpoints: must lie within [1, budget]");
    }
    if (t > 0 && checkpoints[t] <= checkpoints[t - 1]) {
      throw ConfigError("checkpoints: must be strictly increasing");
    }
  }
  {
    // Sample variances must exist at the smallest checkpoint.
    const CountGrid counts = round_allocation(fractions, checkpoints.front());
    for (int i = 0; i < k; ++i) {
      for (int j = 0; j < m; ++j) {
        if (counts.at(i, j) < 2) {
          throw ConfigError(
              "checkpoints: smallest checkpoint starves a cell below two replications "
              "(design " + std::to_string(i) + ", context " + std::to_string(j) + ")");
        }
      }
    }
  }

  const GroundTruth truth = resolve_ground_truth(config);

  std::vector<measures::MacroRepTrace> traces(config.macro_reps);
  parallel_for_reps(config.macro_reps, config.threads, [&](long long r) {
    const std::uint64_t rep_seed = config.base_seed + static_cast<std::uint64_t>(r);
    measures::MacroRepTrace trace;
    trace.checkpoints = checkpoints;
    trace.seed = rep_seed;
    CountGrid final_counts(k, m, 0);
    for (std::size_t c = 0; c < checkpoints.size(); ++c) {
      const CountGrid counts = round_allocation(fractions, checkpoints[c]);
      std::vector<int> selected(m, 0);
      for (int j = 0; j < m; ++j) {
        double best_mean = 0.0;
        int best = -1;
        for (int i = 0; i < k; ++i) {
          RngStream rng(derive_stream_key(
              rep_seed, (static_cast<std::uint64_t>(c) << 32) |
                            (static_cast<std::uint64_t>(i) * 1000003ULL +
                             static_cast<std::uint64_t>(j))));
          double mean = 0.0;
          for (long long d = 0; d < counts.at(i, j); ++d) {
            mean += (sample(config.problem, i, j, rng) - mean) / static_cast<double>(d + 1);
          }
          if (best < 0 || mean < best_mean) {
            best_mean = mean;
            best = i;
          }
        }
        selected[j] = best;
      }
      trace.selected.push_back(std::move(selected));
      if (c + 1 == checkpoints.size()) final_counts = counts;
    }
    trace.final_counts = std::move(final_counts);
    traces[r] = std::move(trace);
  });

  measures::PfsSeries series =
      measures::estimate_pfs(traces, truth, resolve_probabilities(config));
  if (!config.output_path.empty()) write_csv(series, config.output_path);
  return series;
}

namespace {

std::string format_double(double value) {
  char buffer[64];
  const auto result = std::to_chars(buffer, buffer + sizeof(buffer), value);
  return std::string(buffer, result.ptr);
}

double parse_double_field(std::string_view field, const char* column) {
  double value = 0.0;
  const auto result = std::from_chars(field.data(), field.data() + field.size(), value);
  if (result.ec != std::errc() || result.ptr != field.data() + field.size()) {
    throw Error(std::string("csv: malformed ") + column + " field");
  }
  return value;
}

long long parse_int_field(std::string_view field, const char* column) {
  long long value = 0;
  const auto result = std::from_chars(field.data(), field.data() + field.size(), value);
  if (result.ec != std::errc() || result.ptr != field.data() + field.size()) {
    throw Error(std::string("csv: malformed ") + column + " field");
  }
  return value;
}

constexpr const char* kCsvHeader = "n,pfs_e,pfs_m,pfs_a,se_e,se_m,se_a,macro_reps";

}  // namespace

std::string to_csv(const measures::PfsSeries& series) {
  std::string out = kCsvHeader;
  out += '\n';
  for (std::size_t t = 0; t < series.checkpoints.size(); ++t) {
    out += std::to_string(series.checkpoints[t]);
    out += ',';
    out += format_double(series.pfs_e[t]);
    out += ',';
    out += format_double(series.pfs_m[t]);
    out += ',';
    out += format_double(series.pfs_a[t]);
    out += ',';
    out += format_double(series.se_e[t]);
    out += ',';
    out += format_double(series.se_m[t]);
    out += ',';
    out += format_double(series.se_a[t]);
    out += ',';
    out += std::to_string(series.macro_reps);
    out += '\n';
  }
  return out;
}

void write_csv(const measures::PfsSeries& series, const std::string& path) {
  std::ofstream file(path, std::ios::binary);
  if (!file) throw Error("csv: cannot open '" + path + "' for writing");
  file << to_csv(series);
}

measures::PfsSeries parse_csv(const std::string& text) {
  measures::PfsSeries series;
  std::size_t pos = 0;
  bool saw_header = false;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string::npos) end = text.size();
    std::string_view line(text.data() + pos, end - pos);
    pos = end + 1;
    if (line.empty()) continue;
    if (!saw_header) {
      if (line != kCsvHeader) throw Error("csv: missing or malformed header row");
      saw_header = true;
      continue;
    }
    std::vector<std::string_view> fields;
    std::size_t start = 0;
    while (true) {
      const std::size_t comma = line.find(',', start);
      if (comma == std::string_view::npos) {
        fields.push_back(line.substr(start));
        break;
      }
      fields.push_back(line.substr(start, comma - start));
      start = comma + 1;
    }
    if (fields.size() != 8) throw Error("csv: expected 8 columns per row");
    series.checkpoints.push_back(parse_int_field(fields[0], "n"));
    series.pfs_e.push_back(parse_double_field(fields[1], "pfs_e"));
    series.pfs_m.push_back(parse_double_field(fields[2], "pfs_m"));
    series.pfs_a.push_back(parse_double_field(fields[3], "pfs_a"));
    series.se_e.push_back(parse_double_field(fields[4], "se_e"));
    series.se_m.push_back(parse_double_field(fields[5], "se_m"));
    series.se_a.push_back(parse_double_field(fields[6], "se_a"));
    series.macro_reps = parse_int_field(fields[7], "macro_reps");
  }
  if (!saw_header) throw Error("csv: empty input");
  return series;
}

measures::PfsSeries read_csv(const std::string& path) {
  std::ifstream file(path, std::ios::binary);
  if (!file) throw Error("csv: cannot open '" + path + "' for reading");
  std::string text((std::istreambuf_iterator<char>(file)), std::istreambuf_iterator<char>());
  return parse_csv(text);
}

}  // namespace crs::harness
