#pragma once

#include <span>
#include <string>
#include <vector>

#include "nsope/core.hpp"
#include "nsope/harness.hpp"
#include "nsope/rl.hpp"

namespace nsope {

// Input data files that fail to parse or validate.
struct DataFileError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Results files that fail to parse.
struct ResultFileError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Population JSON: {"context_dist": [...], "context_features": [[...]],
// "num_actions": N}.
void write_population_json(const Population& pop, const std::string& path);
Population read_population_json(const std::string& path);

// Policy JSON: bare row-major probability matrix.
void write_policy_json(const Policy& policy, const std::string& path);
Policy read_policy_json(const std::string& path);

// Reward-model dump: JSON object mapping action id to its weight vector.
void write_reward_model_json(const RewardModel& model, const std::string& path);

// Reward table JSON: bare row-major matrix.
void write_reward_table_json(const RewardTable& table, const std::string& path);
RewardTable read_reward_table_json(const std::string& path);

// Logged interactions, one JSON object per line:
// {"interval": k, "context": s, "action": a, "reward": r, "behavior_prob": p}.
// Reading validates against the population and bounds and groups by interval
// (intervals 0..max must all be present and nonempty).
void write_logged_jsonl(std::span<const IntervalDataset> datasets, const std::string& path);
std::vector<IntervalDataset> read_logged_jsonl(const std::string& path, const Population& pop,
                                               const RewardBounds& bounds);

// Trajectories, one JSON object per line:
// {"interval": k, "steps": [{"state","action","reward","behavior_prob"}]}.
void write_trajectories_jsonl(std::span<const TrajectoryDataset> datasets,
                              const std::string& path);
std::vector<TrajectoryDataset> read_trajectories_jsonl(const std::string& path);

// Results CSV with header
// run,interval,estimator,estimate,var_hat,ci_lo,ci_hi,forecast,true_value.
// Failed cells keep their row with empty value fields.
void write_results_csv(const RunResults& results, const std::string& path);
void write_results_json(const RunResults& results, const std::string& path);

struct ResultRow {
  int run = 0;
  int interval = 0;
  std::string estimator;
  double estimate = 0.0;
  double var_hat = 0.0;
  double ci_lo = 0.0;
  double ci_hi = 0.0;
  double forecast = 0.0;
  double true_value = 0.0;
  bool ok = false;
  bool has_ci = false;
  bool has_forecast = false;
};

std::vector<ResultRow> read_results_csv(const std::string& path);

// Metric summary from raw result rows; same definitions as summarize().
std::vector<MetricSummary> summarize_rows(std::span<const ResultRow> rows);

// Summary CSV with header estimator,rmse_current,rmse_forecast,coverage,mean_width.
void write_summary_csv(std::span<const MetricSummary> summary, const std::string& path);
void write_summary_json(std::span<const MetricSummary> summary, const std::string& path);

}  // namespace nsope
