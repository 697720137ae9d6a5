// Command-line harness: environment generation, dataset conversion,
// experiment execution, forecasting, and report emission.
//
// Exit codes: 0 success, 2 config error, 3 input-data error, 4 result-file
// error.

#include <omp.h>

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"
#include "nsope/envs.hpp"
#include "nsope/harness.hpp"
#include "nsope/io.hpp"

namespace {

using nlohmann::json;
using namespace nsope;

enum class LogLevel { Error = 0, Info = 1, Debug = 2 };

LogLevel log_level() {
  static const LogLevel level = [] {
    const char* v = std::getenv("NONSTAT_OPE_LOG");
    if (!v) return LogLevel::Error;
    const std::string s(v);
    if (s == "debug") return LogLevel::Debug;
    if (s == "info") return LogLevel::Info;
    return LogLevel::Error;
  }();
  return level;
}

void log_info(const std::string& msg) {
  if (log_level() >= LogLevel::Info) std::cerr << "[info] " << msg << '\n';
}

void log_debug(const std::string& msg) {
  if (log_level() >= LogLevel::Debug) std::cerr << "[debug] " << msg << '\n';
}

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

json load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config '" + path + "'");
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError("malformed config '" + path + "': " + e.what());
  }
  return j;
}

template <typename T>
T get_or(const json& j, const char* key, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad value for '") + key + "': " + e.what());
  }
}

SineBanditConfig sine_config_from(const json& j) {
  SineBanditConfig c;
  c.num_contexts = get_or(j, "num_contexts", c.num_contexts);
  c.num_actions = get_or(j, "num_actions", c.num_actions);
  c.feature_dim = get_or(j, "feature_dim", c.feature_dim);
  c.num_intervals = get_or(j, "num_intervals", c.num_intervals);
  c.base = get_or(j, "base", c.base);
  c.amplitude_lo = get_or(j, "amplitude_lo", c.amplitude_lo);
  c.amplitude_hi = get_or(j, "amplitude_hi", c.amplitude_hi);
  c.frequency_lo = get_or(j, "frequency_lo", c.frequency_lo);
  c.frequency_hi = get_or(j, "frequency_hi", c.frequency_hi);
  c.noise_scale = get_or(j, "noise_scale", c.noise_scale);
  c.positive_fraction = get_or(j, "positive_fraction", c.positive_fraction);
  c.positive_pair_rate = get_or(j, "positive_pair_rate", c.positive_pair_rate);
  c.positive_value_lo = get_or(j, "positive_value_lo", c.positive_value_lo);
  c.positive_value_hi = get_or(j, "positive_value_hi", c.positive_value_hi);
  c.feature_linked = get_or(j, "feature_linked", c.feature_linked);
  c.seed = get_or(j, "seed", c.seed);
  return c;
}

struct LoadedEnv {
  bool is_rl = false;
  std::unique_ptr<NonstationaryEnv> bandit;
  std::unique_ptr<TreeMdpEnv> tree;
  std::unique_ptr<Policy> target;
  std::unique_ptr<Policy> behavior;
};

Policy resolve_policy(const json& spec, const LoadedEnv& env, const char* role) {
  const std::string type = get_or<std::string>(spec, "type", "uniform");
  if (type == "uniform") {
    if (env.is_rl) return Policy::uniform(env.tree->num_states(), env.tree->num_actions());
    return Policy::uniform(env.bandit->population().num_contexts(),
                           env.bandit->population().num_actions());
  }
  if (type == "file") {
    if (!spec.contains("path")) throw ConfigError(std::string(role) + " policy: missing path");
    return read_policy_json(spec.at("path").get<std::string>());
  }
  if (type == "softmax_mean_reward") {
    if (env.is_rl) throw ConfigError("softmax_mean_reward applies to bandit environments");
    const double temp = get_or(spec, "temperature", 0.25);
    return softmax_policy(mean_reward_table(*env.bandit), temp);
  }
  if (type == "softmax_optimal_q") {
    if (!env.is_rl) throw ConfigError("softmax_optimal_q applies to the tree environment");
    return env.tree->target_policy(get_or(spec, "temperature", 1.0));
  }
  throw ConfigError(std::string(role) + " policy: unknown type '" + type + "'");
}

LoadedEnv load_env(const json& config, std::optional<std::uint64_t> seed_override) {
  if (!config.contains("env")) throw ConfigError("config has no \"env\" section");
  const json& e = config.at("env");
  const std::string type = get_or<std::string>(e, "type", "");

  LoadedEnv out;
  if (type == "sine_bandit") {
    SineBanditConfig c = sine_config_from(e);
    if (seed_override) c.seed = *seed_override;
    out.bandit = std::make_unique<SineBanditEnv>(make_sine_bandit(c));
  } else if (type == "multilabel_sine") {
    if (!e.contains("data")) throw ConfigError("multilabel_sine env: missing \"data\" path");
    const std::string path = e.at("data").get<std::string>();
    std::ifstream in(path);
    if (!in) throw DataFileError("cannot open '" + path + "'");
    const auto records = parse_multilabel(in);
    SineBanditConfig c = sine_config_from(e);
    if (seed_override) c.seed = *seed_override;
    const int actions = get_or(e, "num_actions", 0);
    if (actions < 1) throw ConfigError("multilabel_sine env: missing num_actions");
    out.bandit =
        std::make_unique<SineBanditEnv>(make_sine_bandit_from_records(records, actions, c));
  } else if (type == "synthetic_ratings") {
    SyntheticRatingsConfig c;
    c.num_users = get_or(e, "num_users", c.num_users);
    c.num_genres = get_or(e, "num_genres", c.num_genres);
    c.num_intervals = get_or(e, "num_intervals", c.num_intervals);
    c.drift = get_or(e, "drift", c.drift);
    c.noise_scale = get_or(e, "noise_scale", c.noise_scale);
    c.feature_dim = get_or(e, "feature_dim", c.feature_dim);
    c.seed = get_or(e, "seed", c.seed);
    if (seed_override) c.seed = *seed_override;
    out.bandit = std::make_unique<SyntheticRatingsEnv>(make_synthetic_ratings(c));
  } else if (type == "tree_mdp") {
    TreeMdpConfig c;
    c.horizon = get_or(e, "horizon", c.horizon);
    c.num_intervals = get_or(e, "num_intervals", c.num_intervals);
    c.amplitude = get_or(e, "amplitude", c.amplitude);
    c.frequency_lo = get_or(e, "frequency_lo", c.frequency_lo);
    c.frequency_hi = get_or(e, "frequency_hi", c.frequency_hi);
    c.noise_scale = get_or(e, "noise_scale", c.noise_scale);
    c.seed = get_or(e, "seed", c.seed);
    if (seed_override) c.seed = *seed_override;
    out.is_rl = true;
    out.tree = std::make_unique<TreeMdpEnv>(make_tree_mdp(c));
  } else {
    throw ConfigError("unknown env type '" + type + "'");
  }

  const json target_spec =
      config.contains("env") && e.contains("target_policy") ? e.at("target_policy") : json::object();
  out.target = std::make_unique<Policy>(resolve_policy(target_spec, out, "target"));
  const json behavior_spec = e.contains("behavior_policy") ? e.at("behavior_policy") : json::object();
  out.behavior = std::make_unique<Policy>(resolve_policy(behavior_spec, out, "behavior"));
  return out;
}

EstimatorKind parse_kind(const std::string& s) {
  if (s == "is") return EstimatorKind::Is;
  if (s == "wis") return EstimatorKind::Wis;
  if (s == "dm") return EstimatorKind::Dm;
  if (s == "diff") return EstimatorKind::Diff;
  if (s == "dr") return EstimatorKind::Dr;
  if (s == "reg") return EstimatorKind::Reg;
  if (s == "traj_is") return EstimatorKind::TrajIs;
  if (s == "traj_wis") return EstimatorKind::TrajWis;
  if (s == "pdis") return EstimatorKind::Pdis;
  if (s == "reg_fqe") return EstimatorKind::RegFqe;
  throw ConfigError("unknown estimator kind '" + s + "'");
}

FeatureKind parse_feature_kind(const std::string& s) {
  if (s == "constant") return FeatureKind::Constant;
  if (s == "reg") return FeatureKind::Reg;
  if (s == "reg_ar") return FeatureKind::RegAr;
  if (s == "reg_feature") return FeatureKind::RegFeature;
  if (s == "reg_plus_feature") return FeatureKind::RegPlusFeature;
  if (s == "reg_ar_plus_feature") return FeatureKind::RegArPlusFeature;
  throw ConfigError("unknown feature kind '" + s + "'");
}

PopTotalMode::Kind parse_pop_total(const std::string& s) {
  if (s == "known") return PopTotalMode::Kind::Known;
  if (s == "same_sample") return PopTotalMode::Kind::SameSample;
  if (s == "independent") return PopTotalMode::Kind::Independent;
  throw ConfigError("unknown pop_total mode '" + s + "'");
}

// Multivariate feature configurations default to cross-validated ridge;
// the two-dimensional default feature stays unregularized.
FeatureConfig parse_features(const json& j) {
  FeatureConfig fc;
  fc.kind = parse_feature_kind(get_or<std::string>(j, "features", "reg"));
  const bool multivariate = fc.kind != FeatureKind::Constant && fc.kind != FeatureKind::Reg;
  fc.ridge_cv = multivariate;
  fc.ridge_lambda = 0.0;
  if (j.contains("ridge")) {
    const json& r = j.at("ridge");
    if (r.is_string()) {
      if (r.get<std::string>() != "cv") throw ConfigError("ridge must be a number or \"cv\"");
      fc.ridge_cv = true;
    } else {
      fc.ridge_cv = false;
      fc.ridge_lambda = r.get<double>();
      if (fc.ridge_lambda < 0.0) throw ConfigError("ridge must be >= 0");
    }
  }
  return fc;
}

void parse_common_experiment(const json& x, auto& cfg) {
  cfg.alpha = get_or(x, "alpha", cfg.alpha);
  const std::string ci = get_or<std::string>(x, "ci", "two");
  if (ci == "two") {
    cfg.sided = CiSided::Two;
  } else if (ci == "lower") {
    cfg.sided = CiSided::Lower;
  } else {
    throw ConfigError("ci must be \"two\" or \"lower\"");
  }
  cfg.num_runs = get_or(x, "num_runs", cfg.num_runs);
  cfg.seed = get_or(x, "seed", cfg.seed);
  cfg.forecast.basis_dim = get_or(x, "forecast_basis_dim", cfg.forecast.basis_dim);
}

ExperimentConfig bandit_experiment_from(const json& config, const Population& pop) {
  ExperimentConfig cfg;
  const json x = config.contains("experiment") ? config.at("experiment") : json::object();
  parse_common_experiment(x, cfg);
  if (x.contains("samples_per_interval")) {
    cfg.samples_per_interval = x.at("samples_per_interval").get<int>();
  } else {
    const double frac = get_or(x, "sample_fraction", 1.0);
    cfg.samples_per_interval =
        std::max(2, static_cast<int>(std::lround(frac * pop.num_contexts())));
  }
  if (!config.contains("estimators")) throw ConfigError("config has no \"estimators\" section");
  for (const json& j : config.at("estimators")) {
    EstimatorSpec spec;
    spec.id = get_or<std::string>(j, "id", "");
    spec.kind = parse_kind(get_or<std::string>(j, "kind", ""));
    spec.window = get_or(j, "window", 0);
    spec.pop_total = parse_pop_total(get_or<std::string>(j, "pop_total", "known"));
    spec.g_weighted = get_or(j, "g_weighted", true);
    spec.features = parse_features(j);
    cfg.estimators.push_back(std::move(spec));
  }
  return cfg;
}

RlExperimentConfig rl_experiment_from(const json& config) {
  RlExperimentConfig cfg;
  const json x = config.contains("experiment") ? config.at("experiment") : json::object();
  parse_common_experiment(x, cfg);
  cfg.trajectories_per_interval =
      get_or(x, "trajectories_per_interval", cfg.trajectories_per_interval);
  if (!config.contains("estimators")) throw ConfigError("config has no \"estimators\" section");
  for (const json& j : config.at("estimators")) {
    RlEstimatorSpec spec;
    spec.id = get_or<std::string>(j, "id", "");
    spec.kind = parse_kind(get_or<std::string>(j, "kind", ""));
    spec.window = get_or(j, "window", 3);
    spec.pop_total = parse_pop_total(get_or<std::string>(j, "pop_total", "known"));
    cfg.estimators.push_back(std::move(spec));
  }
  return cfg;
}

void print_summary_table(std::span<const MetricSummary> summary) {
  std::printf("%-24s %12s %14s %10s %12s %9s\n", "estimator", "rmse_current", "rmse_forecast",
              "coverage", "mean_width", "missing");
  for (const auto& row : summary) {
    std::printf("%-24s %12.5f %14.5f %10.4f %12.5f %9d\n", row.estimator.c_str(),
                row.rmse_current, row.rmse_forecast, row.coverage, row.mean_width,
                row.missing_cells);
  }
}

int cmd_gen_env(const std::string& config_path, const std::string& out_dir,
                std::optional<std::uint64_t> seed) {
  const json config = load_config(config_path);
  const LoadedEnv env = load_env(config, seed);
  std::filesystem::create_directories(out_dir);
  const auto out = [&](const std::string& name) { return out_dir + "/" + name; };

  int tables = 0;
  if (env.is_rl) {
    tables = env.tree->num_intervals();
    for (int k = 0; k < tables; ++k) {
      char name[32];
      std::snprintf(name, sizeof name, "rewards_%03d.json", k);
      write_reward_table_json(env.tree->reward_at(k), out(name));
    }
    write_policy_json(*env.target, out("target_policy.json"));
    std::printf("wrote %d reward tables (%d states x %d actions) and target policy to %s\n",
                tables, env.tree->num_states(), env.tree->num_actions(), out_dir.c_str());
  } else {
    tables = env.bandit->num_intervals();
    write_population_json(env.bandit->population(), out("population.json"));
    for (int k = 0; k < tables; ++k) {
      char name[32];
      std::snprintf(name, sizeof name, "rewards_%03d.json", k);
      write_reward_table_json(env.bandit->reward_at(k), out(name));
    }
    write_policy_json(*env.target, out("target_policy.json"));
    std::printf("wrote population (%d contexts x %d actions) and %d reward tables to %s\n",
                env.bandit->population().num_contexts(), env.bandit->population().num_actions(),
                tables, out_dir.c_str());
  }
  return 0;
}

int cmd_convert(const std::string& input, const std::string& out_dir, int num_actions,
                double subset_frac, std::uint64_t seed) {
  std::ifstream in(input);
  if (!in) throw DataFileError("cannot open '" + input + "'");
  const auto records = parse_multilabel(in);
  SupervisedBandit converted = [&] {
    try {
      return supervised_to_bandit(records, num_actions, subset_frac, seed);
    } catch (const std::invalid_argument& e) {
      // Anything the records themselves violate is an input-data problem.
      throw DataFileError(e.what());
    }
  }();
  std::filesystem::create_directories(out_dir);
  write_population_json(converted.population, out_dir + "/population.json");
  write_policy_json(converted.target, out_dir + "/target_policy.json");
  write_reward_table_json(converted.base_rewards, out_dir + "/base_rewards.json");
  std::printf("converted %zu records into %d contexts x %d actions at %s\n", records.size(),
              converted.population.num_contexts(), converted.population.num_actions(),
              out_dir.c_str());
  return 0;
}

int cmd_run(const std::string& config_path, const std::string& out_dir,
            std::optional<std::uint64_t> seed, std::optional<int> runs, int workers) {
  const json config = load_config(config_path);
  const LoadedEnv env = load_env(config, seed);
  if (workers > 0) omp_set_num_threads(workers);
  std::filesystem::create_directories(out_dir);

  RunResults results = [&] {
    if (env.is_rl) {
      RlExperimentConfig cfg = rl_experiment_from(config);
      if (seed) cfg.seed = *seed;
      if (runs) cfg.num_runs = *runs;
      log_info("running rl experiment: " + std::to_string(cfg.num_runs) + " runs, " +
               std::to_string(env.tree->num_intervals()) + " intervals");
      return run_rl_experiment(*env.tree, *env.target, *env.behavior, cfg);
    }
    ExperimentConfig cfg = bandit_experiment_from(config, env.bandit->population());
    if (seed) cfg.seed = *seed;
    if (runs) cfg.num_runs = *runs;
    log_info("running bandit experiment: " + std::to_string(cfg.num_runs) + " runs, " +
             std::to_string(env.bandit->num_intervals()) + " intervals, n=" +
             std::to_string(cfg.samples_per_interval));
    return run_experiment(*env.bandit, *env.target, *env.behavior, cfg);
  }();

  log_debug("writing results for " + std::to_string(results.num_estimators()) +
            " estimators to " + out_dir);
  write_results_csv(results, out_dir + "/results.csv");
  write_results_json(results, out_dir + "/results.json");
  const std::vector<MetricSummary> summary = summarize(results);
  write_summary_csv(summary, out_dir + "/summary.csv");
  write_summary_json(summary, out_dir + "/summary.json");
  print_summary_table(summary);
  return 0;
}

int cmd_forecast(const std::string& results_path, const std::string& estimator, int horizon,
                 int basis_dim, const std::string& out_dir) {
  if (!std::filesystem::exists(results_path)) {
    throw ConfigError("results file '" + results_path + "' does not exist");
  }
  const std::vector<ResultRow> rows = read_results_csv(results_path);
  int max_interval = 0;
  int max_run = -1;
  for (const auto& r : rows) {
    max_interval = std::max(max_interval, r.interval);
    if (r.estimator == estimator) max_run = std::max(max_run, r.run);
  }
  if (max_run < 0) throw ResultFileError("no rows for estimator '" + estimator + "'");

  std::string csv = "run,estimator,interval,prediction\n";
  for (int run = 0; run <= max_run; ++run) {
    std::vector<std::pair<double, double>> series;
    for (const auto& r : rows) {
      if (r.run == run && r.estimator == estimator && r.ok) {
        series.push_back({static_cast<double>(r.interval), r.estimate});
      }
    }
    if (series.empty()) continue;
    const ForecastModel model =
        fit_forecast(series, basis_dim, static_cast<double>(max_interval));
    for (int h = 1; h <= horizon; ++h) {
      const double t = max_interval + h;
      char line[160];
      std::snprintf(line, sizeof line, "%d,%s,%d,%.17g\n", run, estimator.c_str(),
                    max_interval + h, forecast_predict(model, t));
      csv += line;
    }
  }
  if (out_dir.empty()) {
    std::fputs(csv.c_str(), stdout);
  } else {
    std::filesystem::create_directories(out_dir);
    std::ofstream out(out_dir + "/forecast.csv");
    out << csv;
    std::printf("wrote forecasts to %s/forecast.csv\n", out_dir.c_str());
  }
  return 0;
}

int cmd_report(const std::string& results_path) {
  if (!std::filesystem::exists(results_path)) {
    throw ConfigError("results file '" + results_path + "' does not exist");
  }
  const std::vector<ResultRow> rows = read_results_csv(results_path);
  print_summary_table(summarize_rows(rows));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Off-policy evaluation for piecewise-stationary bandits and finite-horizon MDPs"};
  app.require_subcommand(1);

  std::string config_path, out_dir, input_path, results_path, estimator;
  std::optional<std::uint64_t> seed;
  std::optional<int> runs;
  int workers = 0;
  int num_actions = 0;
  double subset_frac = 0.3;
  int horizon = 1;
  int basis_dim = 5;

  CLI::App* gen = app.add_subcommand("gen-env", "Generate an environment dump");
  gen->add_option("--config", config_path, "Config JSON")->required();
  gen->add_option("--out", out_dir, "Output directory")->required();
  gen->add_option("--seed", seed, "Seed override");

  CLI::App* convert = app.add_subcommand("convert", "Convert a multilabel dataset");
  convert->add_option("--input", input_path, "Multilabel text file")->required();
  convert->add_option("--out", out_dir, "Output directory")->required();
  convert->add_option("--actions", num_actions, "Number of actions")->required();
  convert->add_option("--subset-frac", subset_frac, "Classifier training fraction");
  std::uint64_t convert_seed = 0;
  convert->add_option("--seed", convert_seed, "Seed");

  CLI::App* run = app.add_subcommand("run", "Run an experiment");
  run->add_option("--config", config_path, "Config JSON")->required();
  run->add_option("--out", out_dir, "Output directory")->required();
  run->add_option("--seed", seed, "Seed override");
  run->add_option("--runs", runs, "Run count override");
  run->add_option("--workers", workers, "Worker threads (default: all cores)");

  CLI::App* forecast = app.add_subcommand("forecast", "Forecast future values from results");
  forecast->add_option("--results", results_path, "results.csv from a run")->required();
  forecast->add_option("--estimator", estimator, "Estimator id")->required();
  forecast->add_option("--horizon", horizon, "Intervals ahead");
  forecast->add_option("--basis-dim", basis_dim, "Cosine basis dimension");
  forecast->add_option("--out", out_dir, "Output directory (default: stdout)");

  CLI::App* report = app.add_subcommand("report", "Pretty-print the summary of a results file");
  report->add_option("--results", results_path, "results.csv from a run")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen->parsed()) return cmd_gen_env(config_path, out_dir, seed);
    if (convert->parsed()) {
      return cmd_convert(input_path, out_dir, num_actions, subset_frac, convert_seed);
    }
    if (run->parsed()) return cmd_run(config_path, out_dir, seed, runs, workers);
    if (forecast->parsed()) {
      return cmd_forecast(results_path, estimator, horizon, basis_dim, out_dir);
    }
    if (report->parsed()) return cmd_report(results_path);
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const ParseError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  } catch (const DataFileError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  } catch (const ResultFileError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 4;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
