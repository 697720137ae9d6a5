#include <cmath>

#include "doctest.h"
#include "nsope/core.hpp"
#include "nsope/harness.hpp"

using namespace nsope;

TEST_CASE("population and policy validate simplex vectors on construction") {
  CHECK_THROWS_AS(Population({0.5, 0.6}, {{0.0}, {1.0}}, 2), std::invalid_argument);
  CHECK_THROWS_AS(Population({1.1, -0.1}, {{0.0}, {1.0}}, 2), std::invalid_argument);
  CHECK_THROWS_AS(Population({0.5, 0.5}, {{0.0}, {1.0, 2.0}}, 2), std::invalid_argument);
  CHECK_THROWS_AS(Policy({{0.9, 0.2}}), std::invalid_argument);
  CHECK_THROWS_AS(Policy({{1.2, -0.2}}), std::invalid_argument);
  CHECK_NOTHROW(Policy({{0.3, 0.7}, {1.0, 0.0}}));
}

TEST_CASE("true_value enumerates the fixture exactly") {
  const Population pop = fixture_a_population();
  const Policy target = fixture_a_target();

  // Independent hand evaluation of the double sum.
  const double expected = 0.5 * (0.8 * 1.0 + 0.2 * 0.0) + 0.5 * (0.3 * 0.5 + 0.7 * 1.0);
  CHECK(expected == doctest::Approx(0.825).epsilon(1e-15));
  CHECK(true_value(pop, target, fixture_a_rewards()) == doctest::Approx(0.825).epsilon(1e-12));

  const RewardTable zero(2, 2, 0.0);
  CHECK(true_value(pop, target, zero) == 0.0);

  const RewardTable constant(2, 2, 0.7);
  CHECK(true_value(pop, fixture_a_behavior(), constant) == doctest::Approx(0.7));

  const RewardTable wrong(3, 2, 0.0);
  CHECK_THROWS_AS(true_value(pop, target, wrong), std::invalid_argument);
}

TEST_CASE("true_value is linear in the reward table") {
  Rng rng(17);
  for (int trial = 0; trial < 20; ++trial) {
    const int s_count = 2 + rng.uniform_int(5);
    const int a_count = 2 + rng.uniform_int(4);
    std::vector<double> dist(s_count);
    double total = 0.0;
    for (double& p : dist) total += (p = rng.uniform() + 0.05);
    for (double& p : dist) p /= total;
    // Renormalize exactly enough for the 1e-12 constructor gate.
    double check = 0.0;
    for (double p : dist) check += p;
    dist.back() += 1.0 - check;
    std::vector<std::vector<double>> feats(s_count, std::vector<double>{0.0});
    const Population pop(dist, feats, a_count);
    const Policy target = Policy::uniform(s_count, a_count);

    RewardTable r1(s_count, a_count), r2(s_count, a_count), sum(s_count, a_count);
    for (int s = 0; s < s_count; ++s) {
      for (int a = 0; a < a_count; ++a) {
        r1.at(s, a) = rng.uniform(-5.0, 5.0);
        r2.at(s, a) = rng.uniform(-5.0, 5.0);
        sum.at(s, a) = r1.at(s, a) + r2.at(s, a);
      }
    }
    const double lhs = true_value(pop, target, sum);
    const double rhs = true_value(pop, target, r1) + true_value(pop, target, r2);
    CHECK(lhs == doctest::Approx(rhs).epsilon(1e-10));
  }
}

TEST_CASE("importance_weight uses the logged propensity") {
  const Policy target = fixture_a_target();
  CHECK(importance_weight(target, {0, 0, 1.0, 0.5}) == doctest::Approx(1.6).epsilon(1e-15));
  CHECK(importance_weight(target, {1, 1, 1.0, 0.5}) == doctest::Approx(1.4).epsilon(1e-15));
  CHECK(importance_weight(fixture_a_behavior(), {0, 1, 0.0, 0.5}) == doctest::Approx(1.0));

  const Policy zero_on_a1({{1.0, 0.0}, {1.0, 0.0}});
  CHECK(importance_weight(zero_on_a1, {0, 1, 1.0, 0.5}) == 0.0);
  CHECK_THROWS_AS(importance_weight(target, {0, 0, 1.0, 0.0}), std::invalid_argument);
}

TEST_CASE("importance weights average to one under behavior sampling") {
  const Population pop = fixture_a_population();
  const Policy target = fixture_a_target();
  const Policy behavior = fixture_a_behavior();
  const RewardTable rewards = fixture_a_rewards();

  const int draws = 100000;
  Rng rng(99);
  const IntervalDataset data = sample_dataset(pop, behavior, rewards, 0, draws, rng);
  double mean = 0.0;
  double ss = 0.0;
  for (const auto& x : data.samples) {
    const double w = importance_weight(target, x);
    mean += w;
    ss += w * w;
  }
  mean /= draws;
  const double var = (ss - draws * mean * mean) / (draws - 1);
  const double se = std::sqrt(var / draws);
  CHECK(std::abs(mean - 1.0) <= 3.0 * se);
}

TEST_CASE("dataset validation rejects bad interactions") {
  const Population pop = fixture_a_population();
  const RewardBounds bounds{-10.0, 10.0};

  IntervalDataset ok;
  ok.interval = 0;
  ok.samples = {{0, 0, 1.0, 0.5}};
  CHECK_NOTHROW(validate_dataset(pop, ok, bounds));

  IntervalDataset bad = ok;
  bad.samples[0].context = 7;
  CHECK_THROWS_AS(validate_dataset(pop, bad, bounds), std::invalid_argument);

  bad = ok;
  bad.samples[0].behavior_prob = 0.0;
  CHECK_THROWS_AS(validate_dataset(pop, bad, bounds), std::invalid_argument);

  bad = ok;
  bad.samples[0].reward = 11.0;  // outside configured bounds: rejected
  CHECK_THROWS_AS(validate_dataset(pop, bad, bounds), std::invalid_argument);

  IntervalDataset empty;
  CHECK_THROWS_AS(validate_dataset(pop, empty, bounds), std::invalid_argument);
}

TEST_CASE("sample_dataset is deterministic given the rng seed") {
  const Population pop = fixture_a_population();
  const Policy behavior = fixture_a_behavior();
  const RewardTable rewards = fixture_a_rewards();

  Rng rng1(1234), rng2(1234);
  const IntervalDataset a = sample_dataset(pop, behavior, rewards, 3, 50, rng1);
  const IntervalDataset b = sample_dataset(pop, behavior, rewards, 3, 50, rng2);
  REQUIRE(a.size() == b.size());
  for (int i = 0; i < a.size(); ++i) {
    CHECK(a.samples[i].context == b.samples[i].context);
    CHECK(a.samples[i].action == b.samples[i].action);
    CHECK(a.samples[i].reward == b.samples[i].reward);
  }
}
