#pragma once

#include <memory>
#include <span>
#include <stdexcept>
#include <vector>

#include "nsope/rng.hpp"

namespace nsope {

// Bounds the logged rewards and model predictions are held to.
struct RewardBounds {
  double lo = -10.0;
  double hi = 10.0;
  bool contains(double v) const { return v >= lo && v <= hi; }
  double clamp(double v) const { return v < lo ? lo : (v > hi ? hi : v); }
};

// Finite context/action universe with a context distribution and per-context
// feature vectors. Immutable after construction.
class Population {
 public:
  Population(std::vector<double> context_dist,
             std::vector<std::vector<double>> context_features, int num_actions);

  int num_contexts() const { return static_cast<int>(context_dist_.size()); }
  int num_actions() const { return num_actions_; }
  int feature_dim() const { return feature_dim_; }

  double context_prob(int s) const { return context_dist_[s]; }
  std::span<const double> context_dist() const { return context_dist_; }
  std::span<const double> features(int s) const { return context_features_[s]; }

 private:
  std::vector<double> context_dist_;
  std::vector<std::vector<double>> context_features_;
  int num_actions_ = 0;
  int feature_dim_ = 0;
};

// Conditional action distribution over a finite universe, one simplex row per
// context. Rows are validated on construction.
class Policy {
 public:
  explicit Policy(std::vector<std::vector<double>> probs);

  static Policy uniform(int num_contexts, int num_actions);

  int num_contexts() const { return static_cast<int>(probs_.size()); }
  int num_actions() const { return num_actions_; }
  double prob(int s, int a) const { return probs_[s][a]; }
  std::span<const double> row(int s) const { return probs_[s]; }

 private:
  std::vector<std::vector<double>> probs_;
  int num_actions_ = 0;
};

// One logged interaction. behavior_prob is the logged propensity of the
// action that was taken; it is stored rather than recomputed so externally
// ingested logs with unknown full policies are supported.
struct LoggedInteraction {
  int context = 0;
  int action = 0;
  double reward = 0.0;
  double behavior_prob = 1.0;
};

// Logged interactions for one stationarity interval.
struct IntervalDataset {
  int interval = 0;
  std::vector<LoggedInteraction> samples;

  int size() const { return static_cast<int>(samples.size()); }
  bool empty() const { return samples.empty(); }
};

// |S| x |A| reward table for one interval.
class RewardTable {
 public:
  RewardTable() = default;
  RewardTable(int num_contexts, int num_actions, double fill = 0.0)
      : num_contexts_(num_contexts),
        num_actions_(num_actions),
        values_(static_cast<std::size_t>(num_contexts) * num_actions, fill) {}

  int num_contexts() const { return num_contexts_; }
  int num_actions() const { return num_actions_; }
  double& at(int s, int a) { return values_[static_cast<std::size_t>(s) * num_actions_ + a]; }
  double at(int s, int a) const { return values_[static_cast<std::size_t>(s) * num_actions_ + a]; }
  std::span<const double> values() const { return values_; }

 private:
  int num_contexts_ = 0;
  int num_actions_ = 0;
  std::vector<double> values_;
};

// Contract for a piecewise-stationary bandit environment with known change
// points. Intervals are indexed 0..num_intervals(); the context distribution
// is fixed for the whole run. sample() must be deterministic given the rng
// state and draw contexts i.i.d. from the population distribution and actions
// from the supplied policy.
class NonstationaryEnv {
 public:
  virtual ~NonstationaryEnv() = default;

  virtual const Population& population() const = 0;
  virtual int num_intervals() const = 0;
  virtual RewardBounds reward_bounds() const { return RewardBounds{}; }
  virtual RewardTable reward_at(int k) const = 0;
  virtual IntervalDataset sample(int k, const Policy& policy, int n, Rng& rng) const = 0;
};

// Exact J_k(pi) by full enumeration over S x A.
double true_value(const Population& pop, const Policy& target, const RewardTable& rewards);

// pi(a_i|s_i) / pi_b(a_i|s_i) with the logged propensity in the denominator.
double importance_weight(const Policy& target, const LoggedInteraction& sample);

// Validates a dataset against a population and reward bounds; used at
// ingestion. Throws std::invalid_argument on the first violation.
void validate_dataset(const Population& pop, const IntervalDataset& data,
                      const RewardBounds& bounds);

// Draws a dataset of size n against a fixed reward table (the stationary
// sampling model: contexts i.i.d. from pop, actions from the behavior policy,
// reward read from the table).
IntervalDataset sample_dataset(const Population& pop, const Policy& behavior,
                               const RewardTable& rewards, int interval, int n, Rng& rng);

}  // namespace nsope
