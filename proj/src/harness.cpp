#include "nsope/harness.hpp"

#include <algorithm>
#include <cmath>

namespace nsope {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

bool is_bandit_kind(EstimatorKind k) {
  return k == EstimatorKind::Is || k == EstimatorKind::Wis || k == EstimatorKind::Dm ||
         k == EstimatorKind::Diff || k == EstimatorKind::Dr || k == EstimatorKind::Reg;
}

bool is_proxy_kind(EstimatorKind k) {
  return k == EstimatorKind::Diff || k == EstimatorKind::Dr || k == EstimatorKind::Reg;
}

std::vector<std::string> collect_ids(const auto& estimators) {
  std::vector<std::string> ids;
  ids.reserve(estimators.size());
  for (const auto& e : estimators) {
    if (e.id.empty()) throw std::invalid_argument("experiment: estimator id empty");
    if (std::find(ids.begin(), ids.end(), e.id) != ids.end()) {
      throw std::invalid_argument("experiment: duplicate estimator id '" + e.id + "'");
    }
    ids.push_back(e.id);
  }
  return ids;
}

// Per-action one-hot block of (1, x_s); the regression family behind the
// pooled per-action reward model, used for its model-based variance.
FeatureMap per_action_block_features(const Population& pop) {
  const int d = pop.feature_dim() + 1;
  const int num_actions = pop.num_actions();
  auto features = std::make_shared<std::vector<std::vector<double>>>();
  features->reserve(pop.num_contexts());
  for (int s = 0; s < pop.num_contexts(); ++s) {
    const auto x = pop.features(s);
    features->emplace_back(x.begin(), x.end());
  }
  return FeatureMap(num_actions * d, [features, d, num_actions](int s, int a, double* out) {
    std::fill(out, out + static_cast<std::size_t>(num_actions) * d, 0.0);
    out[a * d] = 1.0;
    const auto& x = (*features)[s];
    for (std::size_t j = 0; j < x.size(); ++j) out[a * d + 1 + j] = x[j];
  });
}

std::vector<int> window_contexts(std::span<const IntervalDataset> window) {
  std::vector<int> contexts;
  for (const auto& d : window) {
    for (const auto& x : d.samples) contexts.push_back(x.context);
  }
  return contexts;
}

CellResult compute_bandit_cell(const EstimatorSpec& spec,
                               std::span<const IntervalDataset> datasets, int k,
                               const Population& pop, const Policy& target, RewardBounds bounds,
                               double alpha, CiSided sided) {
  CellResult cell;
  cell.report.kind = spec.kind;
  cell.report.interval = k;
  cell.report.alpha = alpha;
  cell.report.var_hat = kNaN;

  try {
    const int b = std::min(spec.window, k);
    double estimate = 0.0;
    double var_hat = kNaN;
    std::string var_error;

    auto try_var = [&](auto&& fn) {
      try {
        var_hat = fn();
      } catch (const std::exception& e) {
        var_error = e.what();
      }
    };

    switch (spec.kind) {
      case EstimatorKind::Is: {
        const IntervalDataset pooled = pool_window(datasets, k, b);
        estimate = is_estimate(pooled, target);
        try_var([&] { return var_is(pooled, target); });
        break;
      }
      case EstimatorKind::Wis: {
        const IntervalDataset pooled = pool_window(datasets, k, b);
        estimate = wis_estimate(pooled, target);
        try_var([&] { return var_wis(pooled, target); });
        break;
      }
      case EstimatorKind::Dm: {
        const IntervalDataset pooled = pool_window(datasets, k, b);
        const RewardModel model = fit_reward_model(pop, datasets.subspan(k - b, b + 1), bounds);
        estimate = dm_estimate(pooled, pop, target, model);
        try_var([&] {
          return var_dm_model_based(pooled, pop, target, per_action_block_features(pop));
        });
        break;
      }
      case EstimatorKind::Diff:
      case EstimatorKind::Dr: {
        const int bp = std::max(1, b);
        const auto window = datasets.subspan(k - bp, bp);
        const RewardModel model = fit_reward_model(pop, window, bounds);
        if (spec.kind == EstimatorKind::Diff) {
          estimate = diff_estimate(datasets[k], pop, target, model);
          try_var([&] { return var_diff(datasets[k], pop, target, model); });
        } else {
          estimate = dr_estimate(datasets[k], pop, target, model);
          try_var([&] { return var_dr(datasets[k], pop, target, model); });
        }
        break;
      }
      case EstimatorKind::Reg: {
        const int bp = std::max(1, b);
        const auto window = datasets.subspan(k - bp, bp);
        FeatureConfig fc = spec.features;
        std::vector<RewardModel> models;
        switch (fc.kind) {
          case FeatureKind::Reg:
          case FeatureKind::RegPlusFeature:
            models.push_back(fit_reward_model(pop, window, bounds));
            break;
          case FeatureKind::RegAr:
          case FeatureKind::RegArPlusFeature:
            fc.window = bp;
            for (int j = 0; j < bp; ++j) {
              models.push_back(fit_reward_model(pop, window.subspan(j, 1), bounds));
            }
            break;
          case FeatureKind::Constant:
          case FeatureKind::RegFeature:
            break;
        }
        const FeatureMap phi = build_features(fc, pop, models);
        const double lambda =
            fc.ridge_cv ? choose_ridge_lambda_cv(datasets[k], target, phi) : fc.ridge_lambda;
        const RegCoefficients coeffs = fit_reg_coefficients(datasets[k], target, phi, lambda);

        PopTotalMode mode = PopTotalMode::known();
        if (spec.pop_total == PopTotalMode::Kind::SameSample) {
          mode = PopTotalMode::same_sample();
        } else if (spec.pop_total == PopTotalMode::Kind::Independent) {
          mode = PopTotalMode::independent(window_contexts(window));
        }
        estimate = reg_estimate_with(datasets[k], pop, target, phi, coeffs.beta, mode);
        try_var([&] {
          return var_reg(datasets[k], pop, target, phi, coeffs, spec.g_weighted, mode);
        });
        break;
      }
      default:
        throw std::invalid_argument("bandit experiment: estimator kind not supported");
    }

    cell.ok = true;
    cell.report.estimate = estimate;
    if (std::isfinite(var_hat)) {
      cell.report.var_hat = var_hat;
      const CiBounds ci = build_ci(estimate, var_hat, alpha, sided);
      cell.report.ci_lo = ci.lo;
      cell.report.ci_hi = ci.hi;
      cell.has_ci = true;
    } else {
      cell.error = var_error;
    }
  } catch (const std::exception& e) {
    cell.ok = false;
    cell.error = e.what();
  }
  return cell;
}

TrajectoryDataset pool_trajectories(std::span<const TrajectoryDataset> datasets, int k, int b) {
  TrajectoryDataset pooled;
  pooled.interval = k;
  pooled.horizon = datasets[k].horizon;
  for (int j = k - b; j <= k; ++j) {
    pooled.trajectories.insert(pooled.trajectories.end(), datasets[j].trajectories.begin(),
                               datasets[j].trajectories.end());
  }
  return pooled;
}

CellResult compute_rl_cell(const RlEstimatorSpec& spec,
                           std::span<const TrajectoryDataset> datasets, int k,
                           const TreeMdpEnv& env, const Policy& target, double alpha,
                           CiSided sided) {
  CellResult cell;
  cell.report.kind = spec.kind;
  cell.report.interval = k;
  cell.report.alpha = alpha;
  cell.report.var_hat = kNaN;

  try {
    const int b = std::min(spec.window, k);
    double estimate = 0.0;
    double var_hat = kNaN;
    std::string var_error;
    std::vector<double> terms;

    switch (spec.kind) {
      case EstimatorKind::TrajIs: {
        const TrajectoryDataset pooled = pool_trajectories(datasets, k, b);
        estimate = trajectory_is(pooled, target);
        for (const auto& tau : pooled.trajectories) {
          terms.push_back(tau.weight(target) * tau.total_return());
        }
        break;
      }
      case EstimatorKind::TrajWis: {
        const TrajectoryDataset pooled = pool_trajectories(datasets, k, b);
        estimate = trajectory_wis(pooled, target);
        for (const auto& tau : pooled.trajectories) {
          terms.push_back(tau.weight(target) * (tau.total_return() - estimate));
        }
        break;
      }
      case EstimatorKind::Pdis: {
        const TrajectoryDataset pooled = pool_trajectories(datasets, k, b);
        terms = pdis_terms(pooled, target);
        estimate = 0.0;
        for (double t : terms) estimate += t;
        estimate /= static_cast<double>(terms.size());
        break;
      }
      case EstimatorKind::RegFqe: {
        const int bp = std::max(1, b);
        const QTable qtable = fqe(datasets.subspan(k - bp, bp), target, env.num_states(),
                                  env.num_actions(), env.horizon());
        PopTotalMode mode = PopTotalMode::known();
        if (spec.pop_total == PopTotalMode::Kind::SameSample) {
          mode = PopTotalMode::same_sample();
        } else if (spec.pop_total == PopTotalMode::Kind::Independent) {
          std::vector<int> initial;
          for (int j = k - bp; j < k; ++j) {
            for (const auto& tau : datasets[j].trajectories) {
              initial.push_back(tau.steps.front().state);
            }
          }
          mode = PopTotalMode::independent(std::move(initial));
        }
        const RegFqeResult result =
            reg_fqe_estimate(datasets[k], env.initial_dist(), target, qtable, mode);
        estimate = result.estimate;
        var_hat = result.var_hat;
        cell.constant_fallback = result.constant_fallback;
        break;
      }
      default:
        throw std::invalid_argument("rl experiment: estimator kind not supported");
    }

    if (!terms.empty()) {
      try {
        var_hat = mean_variance_from_terms(terms);
      } catch (const std::exception& e) {
        var_error = e.what();
      }
    }

    cell.ok = true;
    cell.report.estimate = estimate;
    if (std::isfinite(var_hat)) {
      cell.report.var_hat = var_hat;
      const CiBounds ci = build_ci(estimate, var_hat, alpha, sided);
      cell.report.ci_lo = ci.lo;
      cell.report.ci_hi = ci.hi;
      cell.has_ci = true;
    } else {
      cell.error = var_error;
    }
  } catch (const std::exception& e) {
    cell.ok = false;
    cell.error = e.what();
  }
  return cell;
}

template <typename Cfg>
void validate_common(const Cfg& cfg) {
  if (!(cfg.alpha > 0.0 && cfg.alpha < 1.0)) throw std::invalid_argument("experiment: bad alpha");
  if (cfg.num_runs < 1) throw std::invalid_argument("experiment: num_runs must be >= 1");
  if (cfg.estimators.empty()) throw std::invalid_argument("experiment: no estimators");
  if (cfg.forecast.basis_dim < 1) throw std::invalid_argument("experiment: bad forecast basis");
}

void validate_config(const ExperimentConfig& cfg) {
  validate_common(cfg);
  if (cfg.samples_per_interval < 2) {
    throw std::invalid_argument("experiment: samples_per_interval must be >= 2");
  }
  for (const auto& e : cfg.estimators) {
    if (!is_bandit_kind(e.kind)) {
      throw std::invalid_argument("experiment: '" + e.id + "' is not a bandit estimator");
    }
    if (e.window < 0) throw std::invalid_argument("experiment: negative window");
    if (is_proxy_kind(e.kind) && e.window < 1) {
      throw std::invalid_argument("experiment: '" + e.id + "' needs window >= 1 for its model");
    }
  }
}

void validate_rl_config(const RlExperimentConfig& cfg) {
  validate_common(cfg);
  if (cfg.trajectories_per_interval < 2) {
    throw std::invalid_argument("experiment: trajectories_per_interval must be >= 2");
  }
  for (const auto& e : cfg.estimators) {
    if (is_bandit_kind(e.kind)) {
      throw std::invalid_argument("experiment: '" + e.id + "' is not an rl estimator");
    }
    if (e.window < 0) throw std::invalid_argument("experiment: negative window");
    if (e.kind == EstimatorKind::RegFqe && e.window < 1) {
      throw std::invalid_argument("experiment: '" + e.id + "' needs window >= 1 for fqe");
    }
  }
}

// Forecasts use the interval index as the regressor, normalized by the last
// interval index.
template <typename CellFn>
void run_single(int run, int total, int n_estimators, int basis_dim, RunResults& out,
                CellFn&& cell_at) {
  std::vector<std::vector<std::pair<double, double>>> history(n_estimators);
  for (int k = 1; k < total; ++k) {
    for (int e = 0; e < n_estimators; ++e) {
      CellResult computed = cell_at(run, k, e);
      CellResult& cell = out.cell(run, k, e);
      computed.forecast = cell.forecast;
      computed.has_forecast = cell.has_forecast;
      cell = std::move(computed);
      if (cell.ok) history[e].push_back({static_cast<double>(k), cell.report.estimate});
    }
    if (k + 1 < total) {
      for (int e = 0; e < n_estimators; ++e) {
        if (history[e].empty()) continue;
        const ForecastModel model =
            fit_forecast(history[e], basis_dim, static_cast<double>(total - 1));
        out.cell(run, k + 1, e).forecast = forecast_predict(model, k + 1);
        out.cell(run, k + 1, e).has_forecast = true;
      }
    }
  }
}

void mark_run_failed(RunResults& out, int run, const std::string& what) {
  for (int k = 0; k < out.num_intervals(); ++k) {
    for (int e = 0; e < out.num_estimators(); ++e) {
      CellResult& cell = out.cell(run, k, e);
      if (!cell.ok && cell.error.empty()) cell.error = what;
    }
  }
}

void run_bandit_single(const NonstationaryEnv& env, const Policy& target, const Policy& behavior,
                       const ExperimentConfig& cfg, int run, RunResults& out) {
  const int total = env.num_intervals();
  const Population& pop = env.population();
  const RewardBounds bounds = env.reward_bounds();
  std::vector<IntervalDataset> datasets;
  datasets.reserve(total);
  for (int k = 0; k < total; ++k) {
    Rng rng(mix_seed(cfg.seed, static_cast<std::uint64_t>(run), static_cast<std::uint64_t>(k)));
    datasets.push_back(env.sample(k, behavior, cfg.samples_per_interval, rng));
  }
  run_single(run, total, out.num_estimators(), cfg.forecast.basis_dim, out,
             [&](int r, int k, int e) {
               (void)r;
               return compute_bandit_cell(cfg.estimators[e], datasets, k, pop, target, bounds,
                                          cfg.alpha, cfg.sided);
             });
}

void run_rl_single(const TreeMdpEnv& env, const Policy& target, const Policy& behavior,
                   const RlExperimentConfig& cfg, int run, RunResults& out) {
  const int total = env.num_intervals();
  std::vector<TrajectoryDataset> datasets;
  datasets.reserve(total);
  for (int k = 0; k < total; ++k) {
    Rng rng(mix_seed(cfg.seed, static_cast<std::uint64_t>(run), static_cast<std::uint64_t>(k)));
    datasets.push_back(
        env.sample_trajectories(k, behavior, cfg.trajectories_per_interval, rng));
  }
  run_single(run, total, out.num_estimators(), cfg.forecast.basis_dim, out,
             [&](int r, int k, int e) {
               (void)r;
               return compute_rl_cell(cfg.estimators[e], datasets, k, env, target, cfg.alpha,
                                      cfg.sided);
             });
}

}  // namespace

RunResults::RunResults(int num_runs, int num_intervals, std::vector<std::string> estimator_ids)
    : num_runs_(num_runs),
      num_intervals_(num_intervals),
      ids_(std::move(estimator_ids)),
      cells_(static_cast<std::size_t>(num_runs) * num_intervals * ids_.size()) {
  true_values.assign(num_intervals, kNaN);
}

int RunResults::estimator_index(const std::string& id) const {
  for (std::size_t i = 0; i < ids_.size(); ++i) {
    if (ids_[i] == id) return static_cast<int>(i);
  }
  return -1;
}

RunResults run_experiment_serial(const NonstationaryEnv& env, const Policy& target,
                                 const Policy& behavior, const ExperimentConfig& config) {
  validate_config(config);
  const int total = env.num_intervals();
  if (total < 2) throw std::invalid_argument("experiment: need at least two intervals");
  RunResults out(config.num_runs, total, collect_ids(config.estimators));
  for (int k = 0; k < total; ++k) {
    out.true_values[k] = true_value(env.population(), target, env.reward_at(k));
  }
  for (int run = 0; run < config.num_runs; ++run) {
    run_bandit_single(env, target, behavior, config, run, out);
  }
  return out;
}

RunResults run_experiment(const NonstationaryEnv& env, const Policy& target,
                          const Policy& behavior, const ExperimentConfig& config) {
  validate_config(config);
  const int total = env.num_intervals();
  if (total < 2) throw std::invalid_argument("experiment: need at least two intervals");
  RunResults out(config.num_runs, total, collect_ids(config.estimators));
  for (int k = 0; k < total; ++k) {
    out.true_values[k] = true_value(env.population(), target, env.reward_at(k));
  }
#pragma omp parallel for schedule(dynamic)
  for (int run = 0; run < config.num_runs; ++run) {
    try {
      run_bandit_single(env, target, behavior, config, run, out);
    } catch (const std::exception& e) {
      mark_run_failed(out, run, e.what());
    }
  }
  return out;
}

RunResults run_rl_experiment_serial(const TreeMdpEnv& env, const Policy& target,
                                    const Policy& behavior, const RlExperimentConfig& config) {
  validate_rl_config(config);
  const int total = env.num_intervals();
  if (total < 2) throw std::invalid_argument("experiment: need at least two intervals");
  RunResults out(config.num_runs, total, collect_ids(config.estimators));
  for (int k = 0; k < total; ++k) out.true_values[k] = env.true_value(k, target);
  for (int run = 0; run < config.num_runs; ++run) {
    run_rl_single(env, target, behavior, config, run, out);
  }
  return out;
}

RunResults run_rl_experiment(const TreeMdpEnv& env, const Policy& target, const Policy& behavior,
                             const RlExperimentConfig& config) {
  validate_rl_config(config);
  const int total = env.num_intervals();
  if (total < 2) throw std::invalid_argument("experiment: need at least two intervals");
  RunResults out(config.num_runs, total, collect_ids(config.estimators));
  for (int k = 0; k < total; ++k) out.true_values[k] = env.true_value(k, target);
#pragma omp parallel for schedule(dynamic)
  for (int run = 0; run < config.num_runs; ++run) {
    try {
      run_rl_single(env, target, behavior, config, run, out);
    } catch (const std::exception& e) {
      mark_run_failed(out, run, e.what());
    }
  }
  return out;
}

namespace {

int require_estimator(const RunResults& results, const std::string& estimator) {
  const int idx = results.estimator_index(estimator);
  if (idx < 0) throw std::invalid_argument("unknown estimator '" + estimator + "'");
  return idx;
}

}  // namespace

double rmse_current(const RunResults& results, const std::string& estimator) {
  const int e = require_estimator(results, estimator);
  double sum_mse = 0.0;
  int runs_counted = 0;
  for (int run = 0; run < results.num_runs(); ++run) {
    double se = 0.0;
    int m = 0;
    for (int k = 1; k < results.num_intervals(); ++k) {
      const CellResult& cell = results.cell(run, k, e);
      if (!cell.ok) continue;
      const double d = cell.report.estimate - results.true_values[k];
      se += d * d;
      ++m;
    }
    if (m > 0) {
      sum_mse += se / m;
      ++runs_counted;
    }
  }
  return runs_counted > 0 ? std::sqrt(sum_mse / runs_counted) : kNaN;
}

double rmse_forecast(const RunResults& results, const std::string& estimator) {
  const int e = require_estimator(results, estimator);
  double sum_mse = 0.0;
  int runs_counted = 0;
  for (int run = 0; run < results.num_runs(); ++run) {
    double se = 0.0;
    int m = 0;
    for (int k = 2; k < results.num_intervals(); ++k) {
      const CellResult& cell = results.cell(run, k, e);
      if (!cell.has_forecast) continue;
      const double d = cell.forecast - results.true_values[k];
      se += d * d;
      ++m;
    }
    if (m > 0) {
      sum_mse += se / m;
      ++runs_counted;
    }
  }
  return runs_counted > 0 ? std::sqrt(sum_mse / runs_counted) : kNaN;
}

std::pair<double, double> coverage_and_width(const RunResults& results,
                                             const std::string& estimator) {
  const int e = require_estimator(results, estimator);
  std::int64_t covered = 0;
  std::int64_t cells = 0;
  double width_sum = 0.0;
  std::int64_t width_cells = 0;
  for (int run = 0; run < results.num_runs(); ++run) {
    for (int k = 1; k < results.num_intervals(); ++k) {
      const CellResult& cell = results.cell(run, k, e);
      if (!cell.ok || !cell.has_ci) continue;
      ++cells;
      const double j = results.true_values[k];
      if (cell.report.ci_lo <= j && j <= cell.report.ci_hi) ++covered;
      if (std::isfinite(cell.report.ci_hi)) {
        width_sum += cell.report.ci_hi - cell.report.ci_lo;
        ++width_cells;
      }
    }
  }
  const double coverage = cells > 0 ? static_cast<double>(covered) / cells : kNaN;
  const double mean_width = width_cells > 0 ? width_sum / width_cells : kNaN;
  return {coverage, mean_width};
}

int missing_cells(const RunResults& results, const std::string& estimator) {
  const int e = require_estimator(results, estimator);
  int missing = 0;
  for (int run = 0; run < results.num_runs(); ++run) {
    for (int k = 1; k < results.num_intervals(); ++k) {
      if (!results.cell(run, k, e).ok) ++missing;
    }
  }
  return missing;
}

std::vector<MetricSummary> summarize(const RunResults& results) {
  std::vector<MetricSummary> rows;
  rows.reserve(results.estimator_ids().size());
  for (const auto& id : results.estimator_ids()) {
    MetricSummary row;
    row.estimator = id;
    row.rmse_current = rmse_current(results, id);
    row.rmse_forecast = rmse_forecast(results, id);
    const auto [coverage, width] = coverage_and_width(results, id);
    row.coverage = coverage;
    row.mean_width = width;
    row.missing_cells = missing_cells(results, id);
    rows.push_back(std::move(row));
  }
  return rows;
}

namespace {

McStats stats_from_values(const std::vector<double>& values) {
  const std::size_t n = values.size();
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= static_cast<double>(n);
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  return {mean, n > 1 ? ss / static_cast<double>(n - 1) : 0.0};
}

}  // namespace

McStats mc_oracle_serial(const Population& pop, const Policy& behavior,
                         const RewardTable& rewards,
                         const std::function<double(const IntervalDataset&)>& estimator, int n,
                         int reps, std::uint64_t seed) {
  if (reps < 1) throw std::invalid_argument("mc_oracle: reps must be >= 1");
  std::vector<double> values(reps);
  for (int rep = 0; rep < reps; ++rep) {
    Rng rng(mix_seed(seed, static_cast<std::uint64_t>(rep)));
    values[rep] = estimator(sample_dataset(pop, behavior, rewards, 0, n, rng));
  }
  return stats_from_values(values);
}

McStats mc_oracle(const Population& pop, const Policy& behavior, const RewardTable& rewards,
                  const std::function<double(const IntervalDataset&)>& estimator, int n, int reps,
                  std::uint64_t seed) {
  if (reps < 1) throw std::invalid_argument("mc_oracle: reps must be >= 1");
  std::vector<double> values(reps);
#pragma omp parallel for schedule(static)
  for (int rep = 0; rep < reps; ++rep) {
    Rng rng(mix_seed(seed, static_cast<std::uint64_t>(rep)));
    values[rep] = estimator(sample_dataset(pop, behavior, rewards, 0, n, rng));
  }
  return stats_from_values(values);
}

Population fixture_a_population() {
  return Population({0.5, 0.5}, {{0.0}, {1.0}}, 2);
}

Policy fixture_a_target() { return Policy({{0.8, 0.2}, {0.3, 0.7}}); }

Policy fixture_a_behavior() { return Policy::uniform(2, 2); }

RewardTable fixture_a_rewards() {
  RewardTable r(2, 2);
  r.at(0, 0) = 1.0;
  r.at(0, 1) = 0.0;
  r.at(1, 0) = 0.5;
  r.at(1, 1) = 1.0;
  return r;
}

}  // namespace nsope
