#pragma once

#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "nsope/core.hpp"
#include "nsope/envs.hpp"
#include "nsope/estimators.hpp"
#include "nsope/forecast.hpp"
#include "nsope/rl.hpp"
#include "nsope/variance.hpp"

namespace nsope {

// One configured estimator column of the experiment. `window` is B: the
// sliding-window estimators (is/wis/dm) pool D_{k-B}..D_k, while the
// proxy-based ones (diff/dr/reg) estimate on D_k with a reward model built
// from the strictly-past D_{k-B}..D_{k-1} (so they need window >= 1). Early
// intervals clamp B to the data that exists.
struct EstimatorSpec {
  std::string id;
  EstimatorKind kind = EstimatorKind::Is;
  int window = 0;
  FeatureConfig features{};  // reg only
  PopTotalMode::Kind pop_total = PopTotalMode::Kind::Known;
  bool g_weighted = true;  // variance form for reg
};

struct ForecastSettings {
  int basis_dim = 5;
};

struct ExperimentConfig {
  int samples_per_interval = 0;
  double alpha = 0.05;
  CiSided sided = CiSided::Two;
  int num_runs = 30;
  std::uint64_t seed = 0;
  ForecastSettings forecast{};
  std::vector<EstimatorSpec> estimators;
};

struct CellResult {
  bool ok = false;
  bool has_ci = false;
  EstimateReport report{};
  double forecast = std::numeric_limits<double>::quiet_NaN();
  bool has_forecast = false;
  bool constant_fallback = false;
  std::string error;
};

// Per-(run, interval, estimator) grid of results plus the per-interval true
// values (identical across runs by construction).
class RunResults {
 public:
  RunResults(int num_runs, int num_intervals, std::vector<std::string> estimator_ids);

  int num_runs() const { return num_runs_; }
  int num_intervals() const { return num_intervals_; }
  int num_estimators() const { return static_cast<int>(ids_.size()); }
  const std::vector<std::string>& estimator_ids() const { return ids_; }
  int estimator_index(const std::string& id) const;

  CellResult& cell(int run, int interval, int est) { return cells_[index(run, interval, est)]; }
  const CellResult& cell(int run, int interval, int est) const {
    return cells_[index(run, interval, est)];
  }

  std::vector<double> true_values;

 private:
  std::size_t index(int run, int interval, int est) const {
    return (static_cast<std::size_t>(run) * num_intervals_ + interval) * ids_.size() + est;
  }

  int num_runs_;
  int num_intervals_;
  std::vector<std::string> ids_;
  std::vector<CellResult> cells_;
};

// Runs the full per-interval loop: sample D_k, estimate every configured
// column for k >= 1 with variance and CI, forecast the next interval from the
// estimates so far, and record the true values. Deterministic given the
// seed; per-(run, interval) generator streams make the output independent of
// worker count and of which estimators are configured.
RunResults run_experiment(const NonstationaryEnv& env, const Policy& target,
                          const Policy& behavior, const ExperimentConfig& config);

// Serial reference implementation; produces bit-identical results.
RunResults run_experiment_serial(const NonstationaryEnv& env, const Policy& target,
                                 const Policy& behavior, const ExperimentConfig& config);

// Finite-horizon counterpart over the binary-tree environment.
struct RlEstimatorSpec {
  std::string id;
  EstimatorKind kind = EstimatorKind::TrajIs;
  int window = 3;
  PopTotalMode::Kind pop_total = PopTotalMode::Kind::Known;
};

struct RlExperimentConfig {
  int trajectories_per_interval = 10;
  double alpha = 0.05;
  CiSided sided = CiSided::Lower;
  int num_runs = 30;
  std::uint64_t seed = 0;
  ForecastSettings forecast{};
  std::vector<RlEstimatorSpec> estimators;
};

RunResults run_rl_experiment(const TreeMdpEnv& env, const Policy& target, const Policy& behavior,
                             const RlExperimentConfig& config);
RunResults run_rl_experiment_serial(const TreeMdpEnv& env, const Policy& target,
                                    const Policy& behavior, const RlExperimentConfig& config);

struct MetricSummary {
  std::string estimator;
  double rmse_current = 0.0;
  double rmse_forecast = 0.0;
  double coverage = 0.0;
  double mean_width = 0.0;
  int missing_cells = 0;
};

double rmse_current(const RunResults& results, const std::string& estimator);
double rmse_forecast(const RunResults& results, const std::string& estimator);
// Coverage over the cells with a CI; mean width over finite-width intervals
// (NaN when every interval is one-sided).
std::pair<double, double> coverage_and_width(const RunResults& results,
                                             const std::string& estimator);
int missing_cells(const RunResults& results, const std::string& estimator);
std::vector<MetricSummary> summarize(const RunResults& results);

struct McStats {
  double mean = 0.0;
  double variance = 0.0;
};

// Empirical mean and variance of an estimator over `reps` independent
// datasets drawn against a fixed reward table. Replicates get independent
// generator streams keyed by (seed, rep), so the parallel and serial
// versions agree exactly.
McStats mc_oracle(const Population& pop, const Policy& behavior, const RewardTable& rewards,
                  const std::function<double(const IntervalDataset&)>& estimator, int n, int reps,
                  std::uint64_t seed);
McStats mc_oracle_serial(const Population& pop, const Policy& behavior,
                         const RewardTable& rewards,
                         const std::function<double(const IntervalDataset&)>& estimator, int n,
                         int reps, std::uint64_t seed);

// Canonical two-context test population used across the test suites.
Population fixture_a_population();
Policy fixture_a_target();
Policy fixture_a_behavior();
RewardTable fixture_a_rewards();

}  // namespace nsope
