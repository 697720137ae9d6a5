// Compares the serial reference implementations against the OpenMP kernels
// and verifies they produce identical results while doing so.

#include <omp.h>

#include <chrono>
#include <cmath>
#include <cstdio>

#include "nsope/envs.hpp"
#include "nsope/harness.hpp"

using namespace nsope;

namespace {

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

void bench_mc_oracle() {
  const Population pop = fixture_a_population();
  const Policy target = fixture_a_target();
  const Policy behavior = fixture_a_behavior();
  const RewardTable rewards = fixture_a_rewards();
  const auto closure = [&](const IntervalDataset& d) { return is_estimate(d, target); };

  std::printf("mc_oracle (is_estimate, n=100)\n");
  std::printf("%10s %12s %12s %9s %6s\n", "reps", "serial_s", "parallel_s", "speedup", "equal");
  for (const int reps : {20000, 100000, 400000}) {
    auto t0 = std::chrono::steady_clock::now();
    const McStats serial = mc_oracle_serial(pop, behavior, rewards, closure, 100, reps, 42);
    const double ts = seconds_since(t0);

    t0 = std::chrono::steady_clock::now();
    const McStats parallel = mc_oracle(pop, behavior, rewards, closure, 100, reps, 42);
    const double tp = seconds_since(t0);

    const bool equal = serial.mean == parallel.mean && serial.variance == parallel.variance;
    std::printf("%10d %12.4f %12.4f %8.2fx %6s\n", reps, ts, tp, ts / tp,
                equal ? "yes" : "NO");
  }
}

void bench_experiment() {
  SineBanditConfig env_config;
  env_config.num_contexts = 100;
  env_config.num_actions = 4;
  env_config.num_intervals = 13;
  env_config.seed = 7;
  const SineBanditEnv env = make_sine_bandit(env_config);
  const Policy target = softmax_policy(mean_reward_table(env), 0.25);
  const Policy behavior = Policy::uniform(env_config.num_contexts, env_config.num_actions);

  ExperimentConfig cfg;
  cfg.samples_per_interval = 100;
  cfg.num_runs = 16;
  cfg.seed = 1;
  cfg.estimators.push_back({"is_b0", EstimatorKind::Is, 0});
  cfg.estimators.push_back({"wis_b3", EstimatorKind::Wis, 3});
  EstimatorSpec reg{"reg_b3", EstimatorKind::Reg, 3};
  reg.features.kind = FeatureKind::Reg;
  cfg.estimators.push_back(reg);

  std::printf("\nrun_experiment (sine bandit, %d runs, %d intervals, 3 estimators)\n",
              cfg.num_runs, env_config.num_intervals);
  auto t0 = std::chrono::steady_clock::now();
  const RunResults serial = run_experiment_serial(env, target, behavior, cfg);
  const double ts = seconds_since(t0);

  t0 = std::chrono::steady_clock::now();
  const RunResults parallel = run_experiment(env, target, behavior, cfg);
  const double tp = seconds_since(t0);

  bool equal = true;
  for (int run = 0; run < cfg.num_runs && equal; ++run) {
    for (int k = 1; k < env_config.num_intervals && equal; ++k) {
      for (int e = 0; e < 3 && equal; ++e) {
        const CellResult& a = serial.cell(run, k, e);
        const CellResult& b = parallel.cell(run, k, e);
        equal = a.ok == b.ok && a.has_ci == b.has_ci &&
                (!a.ok || a.report.estimate == b.report.estimate) &&
                (!a.has_ci || a.report.var_hat == b.report.var_hat);
      }
    }
  }
  std::printf("%10s %12.4f %12.4f %8.2fx %6s\n", "", ts, tp, ts / tp, equal ? "yes" : "NO");
}

}  // namespace

int main() {
  std::printf("threads: %d\n\n", omp_get_max_threads());
  bench_mc_oracle();
  bench_experiment();
  return 0;
}
