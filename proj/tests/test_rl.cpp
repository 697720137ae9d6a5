#include <cmath>

#include "doctest.h"
#include "nsope/envs.hpp"
#include "nsope/estimators.hpp"
#include "nsope/harness.hpp"
#include "nsope/rl.hpp"

using namespace nsope;

namespace {

// Exact J by forward enumeration over all action sequences of the tree.
double enumerate_tree_value(const TreeMdpEnv& env, int k, const Policy& target) {
  const RewardTable rewards = env.reward_at(k);
  double total = 0.0;
  const int paths = 1 << env.horizon();
  for (int path = 0; path < paths; ++path) {
    int s = env.root_state();
    double prob = 1.0;
    double ret = 0.0;
    for (int h = 0; h < env.horizon(); ++h) {
      const int a = (path >> h) & 1;
      prob *= target.prob(s, a);
      ret += rewards.at(s, a);
      s = TreeMdpEnv::child(s, a);
    }
    total += prob * ret;
  }
  return total;
}

}  // namespace

TEST_CASE("horizon-one trajectories reduce to the bandit estimator") {
  const Policy target = fixture_a_target();
  TrajectoryDataset traj;
  traj.horizon = 1;
  IntervalDataset bandit;
  Rng rng(6);
  for (int i = 0; i < 40; ++i) {
    const int s = rng.uniform_int(2);
    const int a = rng.uniform_int(2);
    const double r = rng.uniform(-1.0, 1.0);
    traj.trajectories.push_back({{{s, a, r, 0.5}}});
    bandit.samples.push_back({s, a, r, 0.5});
  }
  CHECK(trajectory_is(traj, target) == doctest::Approx(is_estimate(bandit, target)).epsilon(1e-12));
  CHECK(pdis(traj, target) == doctest::Approx(trajectory_is(traj, target)).epsilon(1e-12));
  CHECK(trajectory_wis(traj, target) ==
        doctest::Approx(wis_estimate(bandit, target)).epsilon(1e-12));
}

TEST_CASE("trajectory weights multiply the stepwise ratios") {
  // Stepwise ratios 2 and 0.5, return 3: the product weight is 1.
  const Policy target({{1.0, 0.0}, {0.25, 0.75}});
  TrajectoryDataset data;
  data.horizon = 2;
  data.trajectories.push_back({{{0, 0, 1.0, 0.5}, {1, 0, 2.0, 0.5}}});
  CHECK(data.trajectories[0].weight(target) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(trajectory_is(data, target) == doctest::Approx(3.0).epsilon(1e-12));

  // Behavior target: mean return.
  const Policy behavior = Policy::uniform(2, 2);
  TrajectoryDataset more = data;
  more.trajectories.push_back({{{0, 1, 0.0, 0.5}, {1, 1, 1.0, 0.5}}});
  CHECK(trajectory_is(more, behavior) == doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("pdis weights each reward by its own prefix ratio") {
  const Policy target({{1.0, 0.0}, {0.25, 0.75}});
  // Rewards only at h=0: only the first-step ratio matters.
  TrajectoryDataset data;
  data.horizon = 2;
  data.trajectories.push_back({{{0, 0, 1.5, 0.5}, {1, 0, 0.0, 0.5}}});
  data.trajectories.push_back({{{0, 0, 0.5, 0.5}, {1, 1, 0.0, 0.5}}});
  // Both trajectories carry first-step ratio 2.
  CHECK(pdis(data, target) == doctest::Approx(2.0 * (1.5 + 0.5) / 2).epsilon(1e-12));
}

TEST_CASE("trajectory is and pdis are unbiased on a depth-two tree") {
  TreeMdpConfig config;
  config.horizon = 2;
  config.num_intervals = 3;
  config.noise_scale = 0.0;
  config.seed = 11;
  const TreeMdpEnv env = make_tree_mdp(config);
  CHECK(env.num_states() == 3);

  const Policy target = env.target_policy(1.0);
  const Policy behavior = Policy::uniform(env.num_states(), 2);
  const double truth = enumerate_tree_value(env, 1, target);
  CHECK(env.true_value(1, target) == doctest::Approx(truth).epsilon(1e-12));

  const int reps = 20000;
  const int n = 5;
  double is_mean = 0.0, is_ss = 0.0, pdis_mean = 0.0, pdis_ss = 0.0;
  for (int rep = 0; rep < reps; ++rep) {
    Rng rng(mix_seed(3, rep));
    const TrajectoryDataset data = env.sample_trajectories(1, behavior, n, rng);
    const double a = trajectory_is(data, target);
    const double b = pdis(data, target);
    is_mean += a;
    is_ss += a * a;
    pdis_mean += b;
    pdis_ss += b * b;
  }
  is_mean /= reps;
  pdis_mean /= reps;
  const double is_se = std::sqrt((is_ss / reps - is_mean * is_mean) / reps);
  const double pdis_se = std::sqrt((pdis_ss / reps - pdis_mean * pdis_mean) / reps);
  CHECK(std::abs(is_mean - truth) <= 3.0 * is_se);
  CHECK(std::abs(pdis_mean - truth) <= 3.0 * pdis_se);
}

TEST_CASE("fqe reproduces exact values under full coverage") {
  TreeMdpConfig config;
  config.horizon = 3;
  config.num_intervals = 2;
  config.amplitude = 0.0;  // stationary
  config.noise_scale = 0.0;
  config.seed = 4;
  const TreeMdpEnv env = make_tree_mdp(config);
  const Policy target = env.target_policy(1.0);
  const Policy behavior = Policy::uniform(env.num_states(), 2);

  Rng rng(8);
  const TrajectoryDataset data = env.sample_trajectories(0, behavior, 4000, rng);
  const QTable q = fqe({&data, 1}, target, env.num_states(), env.num_actions(), env.horizon());
  CHECK(q.state_value(target, 0, env.root_state()) ==
        doctest::Approx(env.true_value(0, target)).epsilon(1e-8));
}

TEST_CASE("fqe with horizon one is the per-pair mean reward") {
  TrajectoryDataset data;
  data.horizon = 1;
  data.trajectories.push_back({{{0, 0, 1.0, 0.5}}});
  data.trajectories.push_back({{{0, 0, 3.0, 0.5}}});
  data.trajectories.push_back({{{1, 1, -1.0, 0.5}}});
  const Policy target = Policy::uniform(2, 2);
  const QTable q = fqe({&data, 1}, target, 2, 2, 1);
  CHECK(q.q(0, 0, 0) == doctest::Approx(2.0));
  CHECK(q.q(0, 1, 1) == doctest::Approx(-1.0));
  // Unseen pairs default to zero.
  CHECK(q.q(0, 0, 1) == 0.0);
  CHECK(q.q(0, 1, 0) == 0.0);
}

TEST_CASE("reg_fqe falls back to the constant feature on a single root") {
  TreeMdpConfig config;
  config.horizon = 4;
  config.num_intervals = 4;
  config.seed = 21;
  const TreeMdpEnv env = make_tree_mdp(config);
  const Policy target = env.target_policy(1.0);
  const Policy behavior = Policy::uniform(env.num_states(), 2);

  Rng rng(13);
  const TrajectoryDataset past = env.sample_trajectories(0, behavior, 30, rng);
  const TrajectoryDataset data = env.sample_trajectories(1, behavior, 30, rng);
  const QTable q = fqe({&past, 1}, target, env.num_states(), env.num_actions(), env.horizon());

  const RegFqeResult result =
      reg_fqe_estimate(data, env.initial_dist(), target, q, PopTotalMode::known());
  CHECK(result.constant_fallback);
  CHECK(std::abs(result.estimate - trajectory_wis(data, target)) <= 1e-10);

  // The known-total term for the deterministic root is phi(root)^T beta.
  const RegFqeResult same =
      reg_fqe_estimate(data, env.initial_dist(), target, q, PopTotalMode::same_sample());
  CHECK(std::abs(same.estimate - result.estimate) <= 1e-10);
}

TEST_CASE("reg_fqe with informative initial-state features has zero residuals") {
  // Two initial states, returns exactly equal to the proxy value.
  const Policy target = Policy::uniform(2, 2);
  QTable q(1, 2, 2);
  q.q(0, 0, 0) = 1.0;
  q.q(0, 0, 1) = 1.0;  // V(0) = 1
  q.q(0, 1, 0) = 3.0;
  q.q(0, 1, 1) = 3.0;  // V(1) = 3

  TrajectoryDataset data;
  data.horizon = 1;
  for (int i = 0; i < 6; ++i) {
    const int s0 = i % 2;
    data.trajectories.push_back({{{s0, i % 2 == 0 ? 0 : 1, s0 == 0 ? 1.0 : 3.0, 0.5}}});
  }
  const std::vector<double> nu{0.25, 0.75};
  const RegFqeResult result = reg_fqe_estimate(data, nu, target, q, PopTotalMode::known());
  CHECK_FALSE(result.constant_fallback);
  // Exact fit: estimate is the nu-weighted proxy total, residual term zero.
  CHECK(result.estimate == doctest::Approx(0.25 * 1.0 + 0.75 * 3.0).epsilon(1e-10));
  CHECK(result.var_hat == doctest::Approx(0.0).scale(1.0).epsilon(1e-18));
}

TEST_CASE("trajectory estimators reject bad input") {
  const Policy target = Policy::uniform(2, 2);
  CHECK_THROWS_AS(trajectory_is(TrajectoryDataset{}, target), std::invalid_argument);
  TrajectoryDataset bad;
  bad.horizon = 2;
  bad.trajectories.push_back({{{0, 0, 1.0, 0.5}}});  // wrong length
  CHECK_THROWS_AS(trajectory_is(bad, target), std::invalid_argument);
  TrajectoryDataset zero_prob;
  zero_prob.horizon = 1;
  zero_prob.trajectories.push_back({{{0, 0, 1.0, 0.0}}});
  CHECK_THROWS_AS(trajectory_is(zero_prob, target), std::invalid_argument);
}
