#include "nsope/rl.hpp"

#include <cmath>

#include "nsope/variance.hpp"

namespace nsope {

namespace {

void require_nonempty(const TrajectoryDataset& data, const char* who) {
  if (data.empty()) throw std::invalid_argument(std::string(who) + ": empty dataset");
}

void check_trajectory(const Trajectory& tau, int horizon) {
  if (static_cast<int>(tau.steps.size()) != horizon) {
    throw std::invalid_argument("trajectory length differs from dataset horizon");
  }
}

}  // namespace

double Trajectory::weight(const Policy& target) const {
  double w = 1.0;
  for (const auto& step : steps) {
    if (!(step.behavior_prob > 0.0)) {
      throw std::invalid_argument("trajectory weight: behavior_prob must be > 0");
    }
    w *= target.prob(step.state, step.action) / step.behavior_prob;
  }
  return w;
}

double trajectory_is(const TrajectoryDataset& data, const Policy& target) {
  require_nonempty(data, "trajectory_is");
  double total = 0.0;
  for (const auto& tau : data.trajectories) {
    check_trajectory(tau, data.horizon);
    total += tau.weight(target) * tau.total_return();
  }
  return total / data.size();
}

double trajectory_wis(const TrajectoryDataset& data, const Policy& target) {
  require_nonempty(data, "trajectory_wis");
  double num = 0.0;
  double den = 0.0;
  for (const auto& tau : data.trajectories) {
    check_trajectory(tau, data.horizon);
    const double w = tau.weight(target);
    num += w * tau.total_return();
    den += w;
  }
  if (!(den > 0.0)) throw std::invalid_argument("trajectory_wis: all weights zero");
  return num / den;
}

std::vector<double> pdis_terms(const TrajectoryDataset& data, const Policy& target) {
  require_nonempty(data, "pdis");
  std::vector<double> terms;
  terms.reserve(data.size());
  for (const auto& tau : data.trajectories) {
    check_trajectory(tau, data.horizon);
    double ratio = 1.0;
    double v = 0.0;
    for (const auto& step : tau.steps) {
      if (!(step.behavior_prob > 0.0)) {
        throw std::invalid_argument("pdis: behavior_prob must be > 0");
      }
      ratio *= target.prob(step.state, step.action) / step.behavior_prob;
      v += ratio * step.reward;
    }
    terms.push_back(v);
  }
  return terms;
}

double pdis(const TrajectoryDataset& data, const Policy& target) {
  const std::vector<double> terms = pdis_terms(data, target);
  double total = 0.0;
  for (double t : terms) total += t;
  return total / static_cast<double>(terms.size());
}

QTable fqe(std::span<const TrajectoryDataset> window, const Policy& target, int num_states,
           int num_actions, int horizon) {
  if (window.empty()) throw std::invalid_argument("fqe: empty window");
  QTable qtable(horizon, num_states, num_actions);

  // Backward induction; each depth averages the regression target over every
  // transition observed at that depth.
  std::vector<double> sum(static_cast<std::size_t>(num_states) * num_actions);
  std::vector<std::int64_t> count(sum.size());
  for (int h = horizon - 1; h >= 0; --h) {
    std::fill(sum.begin(), sum.end(), 0.0);
    std::fill(count.begin(), count.end(), 0);
    for (const auto& ds : window) {
      for (const auto& tau : ds.trajectories) {
        check_trajectory(tau, ds.horizon);
        if (h >= static_cast<int>(tau.steps.size())) continue;
        const auto& step = tau.steps[h];
        double y = step.reward;
        if (h + 1 < horizon) {
          const int next = tau.steps[h + 1].state;
          y += qtable.state_value(target, h + 1, next);
        }
        const std::size_t idx = static_cast<std::size_t>(step.state) * num_actions + step.action;
        sum[idx] += y;
        count[idx] += 1;
      }
    }
    for (int s = 0; s < num_states; ++s) {
      for (int a = 0; a < num_actions; ++a) {
        const std::size_t idx = static_cast<std::size_t>(s) * num_actions + a;
        if (count[idx] > 0) qtable.q(h, s, a) = sum[idx] / count[idx];
      }
    }
  }
  return qtable;
}

RegFqeResult reg_fqe_estimate(const TrajectoryDataset& data,
                              std::span<const double> initial_dist, const Policy& target,
                              const QTable& qtable, const PopTotalMode& mode) {
  require_nonempty(data, "reg_fqe_estimate");
  const int n = data.size();

  std::vector<double> weights(n);
  std::vector<double> returns(n);
  std::vector<double> proxies(n);  // V_hat_0(s0) per trajectory
  for (int i = 0; i < n; ++i) {
    const auto& tau = data.trajectories[i];
    check_trajectory(tau, data.horizon);
    weights[i] = tau.weight(target);
    returns[i] = tau.total_return();
    proxies[i] = qtable.state_value(target, 0, tau.steps.front().state);
  }

  RegFqeResult out;
  int p = 2;
  auto fit = [&](int dim) {
    DenseMatrix gram(dim, dim);
    std::vector<double> rhs(dim, 0.0);
    for (int i = 0; i < n; ++i) {
      const double phi1 = dim == 2 ? proxies[i] : 0.0;
      gram(0, 0) += weights[i];
      if (dim == 2) {
        gram(0, 1) += weights[i] * phi1;
        gram(1, 1) += weights[i] * phi1 * phi1;
      }
      rhs[0] += weights[i] * returns[i];
      if (dim == 2) rhs[1] += weights[i] * phi1 * returns[i];
    }
    if (dim == 2) gram(1, 0) = gram(0, 1);
    RegCoefficients coeffs;
    coeffs.beta = solve_spd(gram, rhs);
    coeffs.gram = std::move(gram);
    coeffs.fitted_on_n = n;
    return coeffs;
  };

  try {
    out.coeffs = fit(2);
  } catch (const SingularDesignError&) {
    out.constant_fallback = true;
    p = 1;
    out.coeffs = fit(1);
  }

  auto proxy_value = [&](double v_hat) {
    return p == 2 ? out.coeffs.beta[0] + out.coeffs.beta[1] * v_hat : out.coeffs.beta[0];
  };

  double pop_total = 0.0;
  switch (mode.kind) {
    case PopTotalMode::Kind::Known: {
      for (std::size_t s = 0; s < initial_dist.size(); ++s) {
        if (initial_dist[s] == 0.0) continue;
        pop_total +=
            initial_dist[s] * proxy_value(qtable.state_value(target, 0, static_cast<int>(s)));
      }
      break;
    }
    case PopTotalMode::Kind::SameSample: {
      for (int i = 0; i < n; ++i) pop_total += proxy_value(proxies[i]);
      pop_total /= n;
      break;
    }
    case PopTotalMode::Kind::Independent: {
      if (mode.independent_contexts.empty()) {
        throw std::invalid_argument("reg_fqe_estimate: empty independent state set");
      }
      for (const int s : mode.independent_contexts) {
        pop_total += proxy_value(qtable.state_value(target, 0, s));
      }
      pop_total /= static_cast<double>(mode.independent_contexts.size());
      break;
    }
  }

  std::vector<double> terms(n);
  double resid = 0.0;
  for (int i = 0; i < n; ++i) {
    terms[i] = weights[i] * (returns[i] - proxy_value(proxies[i]));
    resid += terms[i];
  }
  out.estimate = pop_total + resid / n;
  out.var_hat = n >= 2 ? mean_variance_from_terms(terms) : 0.0;
  return out;
}

}  // namespace nsope
