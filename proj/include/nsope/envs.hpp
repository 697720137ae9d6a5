#pragma once

#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

#include "nsope/core.hpp"
#include "nsope/rl.hpp"

namespace nsope {

// pi(a|s) proportional to exp(scores(s,a) / temperature).
Policy softmax_policy(const RewardTable& scores, double temperature);

// Average of reward_at(k) over every interval of the environment.
RewardTable mean_reward_table(const NonstationaryEnv& env);

// ---------------------------------------------------------------------------
// Sine-wave bandit

struct SineBanditConfig {
  int num_contexts = 200;
  int num_actions = 3;
  int feature_dim = 16;
  int num_intervals = 25;  // reward tables k = 0..num_intervals-1
  double base = 0.5;
  double amplitude_lo = 0.1;
  double amplitude_hi = 0.5;
  double frequency_lo = 0.40;
  double frequency_hi = 0.50;
  double noise_scale = 0.01;
  double positive_fraction = 0.2;   // share of pairs carrying the sine reward
  double positive_pair_rate = 0.01; // per-interval random positive injections
  double positive_value_lo = 0.5;
  double positive_value_hi = 1.0;
  // When set, which pairs are positive (and how large their amplitude is)
  // depends on latent context factors that also appear in the context
  // features, so a linear reward model has signal to work with. When unset,
  // positivity and amplitude are drawn independently of the features.
  bool feature_linked = true;
  std::uint64_t seed = 0;
};

// Piecewise-stationary bandit whose positive pairs follow
// base + amplitude * sin(k * frequency), plus per-interval random positive
// injections folded into the reward function. Sampling adds fresh
// noise_scale * Unif[0,1) noise on top of the table value.
class SineBanditEnv : public NonstationaryEnv {
 public:
  SineBanditEnv(Population pop, std::vector<std::uint8_t> positive, std::vector<double> amplitude,
                std::vector<double> frequency, double base, double noise_scale,
                double inject_rate, double inject_lo, double inject_hi, int num_intervals,
                std::uint64_t seed);

  const Population& population() const override { return pop_; }
  int num_intervals() const override { return num_intervals_; }
  RewardBounds reward_bounds() const override;
  RewardTable reward_at(int k) const override;
  IntervalDataset sample(int k, const Policy& policy, int n, Rng& rng) const override;

  bool is_positive(int s, int a) const { return positive_[index(s, a)] != 0; }
  double amplitude(int s, int a) const { return amplitude_[index(s, a)]; }
  double frequency(int s, int a) const { return frequency_[index(s, a)]; }

 private:
  std::size_t index(int s, int a) const {
    return static_cast<std::size_t>(s) * pop_.num_actions() + a;
  }

  Population pop_;
  std::vector<std::uint8_t> positive_;
  std::vector<double> amplitude_;
  std::vector<double> frequency_;
  double base_;
  double noise_scale_;
  double inject_rate_;
  double inject_lo_;
  double inject_hi_;
  int num_intervals_;
  std::uint64_t seed_;
};

SineBanditEnv make_sine_bandit(const SineBanditConfig& config);

// ---------------------------------------------------------------------------
// Multilabel data and the supervised-to-bandit conversion

struct MultilabelRecord {
  std::vector<int> labels;                      // sorted, unique
  std::vector<std::pair<int, double>> features; // strictly increasing indices

  bool operator==(const MultilabelRecord&) const = default;
};

struct ParseError : std::runtime_error {
  ParseError(const std::string& msg, int line_number)
      : std::runtime_error(msg + " (line " + std::to_string(line_number) + ")"),
        line(line_number) {}
  int line;
};

// Parses the sparse multilabel text format: "l1,l2 i1:v1 i2:v2 ...". Lines
// starting with a space have an empty label set; blank lines are skipped.
std::vector<MultilabelRecord> parse_multilabel(std::istream& stream);

std::string serialize_multilabel(const MultilabelRecord& record);
std::string serialize_multilabel(const std::vector<MultilabelRecord>& records);

struct SupervisedBandit {
  Population population;
  Policy target;
  RewardTable base_rewards;
};

// Converts a multilabel dataset: contexts are records with densified
// features, base reward is the label indicator, and the target policy is the
// softmax of a one-vs-rest least-squares classifier trained on a seeded
// subset of the records.
SupervisedBandit supervised_to_bandit(const std::vector<MultilabelRecord>& records,
                                      int num_actions, double target_subset_frac,
                                      std::uint64_t seed);

// Nonstationary env over a converted dataset: the label-positive pairs follow
// the sine wave, everything else pays zero.
SineBanditEnv make_sine_bandit_from_records(const std::vector<MultilabelRecord>& records,
                                            int num_actions, const SineBanditConfig& wave);

// ---------------------------------------------------------------------------
// Synthetic drifting ratings

struct SyntheticRatingsConfig {
  int num_users = 100;
  int num_genres = 10;
  int num_intervals = 25;
  double drift = 0.75;       // 0 makes every interval identical
  double noise_scale = 0.01;
  int feature_dim = 32;
  std::uint64_t seed = 0;
};

// Per-(user, genre) smoothly drifting mean rating in [0, 5], with features
// built from the latent user factors that generate the ratings.
class SyntheticRatingsEnv : public NonstationaryEnv {
 public:
  explicit SyntheticRatingsEnv(const SyntheticRatingsConfig& config);

  const Population& population() const override { return pop_; }
  int num_intervals() const override { return config_.num_intervals; }
  RewardBounds reward_bounds() const override { return {0.0, 5.0 + config_.noise_scale}; }
  RewardTable reward_at(int k) const override;
  IntervalDataset sample(int k, const Policy& policy, int n, Rng& rng) const override;

 private:
  SyntheticRatingsConfig config_;
  Population pop_;
  std::vector<double> mean_;
  std::vector<double> phase_;
  std::vector<double> cycles_;
};

SyntheticRatingsEnv make_synthetic_ratings(int num_users, int num_genres, int num_intervals,
                                           std::uint64_t seed);
SyntheticRatingsEnv make_synthetic_ratings(const SyntheticRatingsConfig& config);

// ---------------------------------------------------------------------------
// Binary-tree MDP

struct TreeMdpConfig {
  int horizon = 10;
  int num_intervals = 25;
  double amplitude = 0.25;
  double frequency_lo = 0.0;
  double frequency_hi = -1.0;  // < 0 means pi / (num_intervals - 1)
  double noise_scale = 0.01;
  std::uint64_t seed = 0;
};

// Full binary tree of depth `horizon`: 2^H - 1 internal states (0-based
// index; heap child of s under action a is 2s + a + 1), deterministic
// transitions, one root initial state, per-interval sine rewards
// mu + amplitude * sin(k * frequency).
class TreeMdpEnv {
 public:
  explicit TreeMdpEnv(const TreeMdpConfig& config);

  int num_states() const { return num_states_; }
  int num_actions() const { return 2; }
  int horizon() const { return config_.horizon; }
  int num_intervals() const { return config_.num_intervals; }
  int root_state() const { return 0; }
  std::span<const double> initial_dist() const { return initial_dist_; }

  static int child(int state, int action) { return 2 * state + action + 1; }

  RewardTable reward_at(int k) const;
  TrajectoryDataset sample_trajectories(int k, const Policy& behavior, int n, Rng& rng) const;

  // Softmax over the optimal action values computed by backward induction on
  // the time-averaged mean rewards.
  Policy target_policy(double temperature) const;

  // Exact J_k(pi) by backward induction on reward_at(k).
  double true_value(int k, const Policy& target) const;

 private:
  std::size_t index(int s, int a) const { return static_cast<std::size_t>(s) * 2 + a; }

  TreeMdpConfig config_;
  int num_states_;
  std::vector<double> mu_;
  std::vector<double> frequency_;
  std::vector<double> initial_dist_;
};

TreeMdpEnv make_tree_mdp(const TreeMdpConfig& config);

}  // namespace nsope
