#pragma once

#include <span>
#include <vector>

#include "nsope/core.hpp"
#include "nsope/estimators.hpp"

namespace nsope {

struct TrajectoryStep {
  int state = 0;
  int action = 0;
  double reward = 0.0;
  double behavior_prob = 1.0;
};

// One finite-horizon trajectory of exactly H steps.
struct Trajectory {
  std::vector<TrajectoryStep> steps;

  double total_return() const {
    double r = 0.0;
    for (const auto& s : steps) r += s.reward;
    return r;
  }

  // Product of per-step target/behavior probability ratios, using the logged
  // propensities in the denominators.
  double weight(const Policy& target) const;
};

struct TrajectoryDataset {
  int interval = 0;
  int horizon = 0;
  std::vector<Trajectory> trajectories;

  int size() const { return static_cast<int>(trajectories.size()); }
  bool empty() const { return trajectories.empty(); }
};

// Per-horizon action-value tables Q_hat_h, h = 0..H-1.
class QTable {
 public:
  QTable(int horizon, int num_states, int num_actions)
      : horizon_(horizon),
        num_states_(num_states),
        num_actions_(num_actions),
        q_(static_cast<std::size_t>(horizon) * num_states * num_actions, 0.0) {}

  int horizon() const { return horizon_; }
  int num_states() const { return num_states_; }
  int num_actions() const { return num_actions_; }

  double& q(int h, int s, int a) { return q_[index(h, s, a)]; }
  double q(int h, int s, int a) const { return q_[index(h, s, a)]; }

  // V_hat_h(s) = sum_a pi(a|s) Q_hat_h(s,a).
  double state_value(const Policy& target, int h, int s) const {
    double v = 0.0;
    for (int a = 0; a < num_actions_; ++a) v += target.prob(s, a) * q(h, s, a);
    return v;
  }

 private:
  std::size_t index(int h, int s, int a) const {
    return (static_cast<std::size_t>(h) * num_states_ + s) * num_actions_ + a;
  }

  int horizon_, num_states_, num_actions_;
  std::vector<double> q_;
};

double trajectory_is(const TrajectoryDataset& data, const Policy& target);
double trajectory_wis(const TrajectoryDataset& data, const Policy& target);

// Per-decision importance sampling: each reward weighted by the ratios up to
// its own timestep only.
double pdis(const TrajectoryDataset& data, const Policy& target);

// Per-trajectory PDIS contributions (the dataset mean of these is the PDIS
// estimate; they are i.i.d. across trajectories, which gives its variance
// estimator).
std::vector<double> pdis_terms(const TrajectoryDataset& data, const Policy& target);

// Tabular fitted Q evaluation by backward induction over the pooled window:
// Q_H = 0 and Q_h(s,a) averages r + V_{h+1}(next state) over the window's
// depth-h transitions from (s,a). Unseen pairs default to 0.
QTable fqe(std::span<const TrajectoryDataset> window, const Policy& target, int num_states,
           int num_actions, int horizon);

struct RegFqeResult {
  double estimate = 0.0;
  double var_hat = 0.0;
  bool constant_fallback = false;
  RegCoefficients coeffs;
};

// Regression-assisted estimator over trajectories with proxy feature
// phi(s0) = (1, V_hat_0(s0)) and trajectory importance weights. When the
// feature is collinear (e.g. a single initial state) the fit automatically
// falls back to the constant feature and flags it. The variance estimate is
// the per-draw residual form with trajectory weights.
RegFqeResult reg_fqe_estimate(const TrajectoryDataset& data,
                              std::span<const double> initial_dist, const Policy& target,
                              const QTable& qtable, const PopTotalMode& mode);

}  // namespace nsope
