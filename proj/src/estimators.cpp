#include "nsope/estimators.hpp"

#include <array>
#include <cmath>
#include <limits>

namespace nsope {

namespace {

void require_nonempty(const IntervalDataset& data, const char* who) {
  if (data.empty()) throw std::invalid_argument(std::string(who) + ": empty dataset");
}

}  // namespace

double is_estimate(const IntervalDataset& data, const Policy& target) {
  require_nonempty(data, "is_estimate");
  double total = 0.0;
  for (const auto& x : data.samples) total += importance_weight(target, x) * x.reward;
  return total / data.size();
}

double wis_estimate(const IntervalDataset& data, const Policy& target) {
  require_nonempty(data, "wis_estimate");
  double num = 0.0;
  double den = 0.0;
  for (const auto& x : data.samples) {
    const double w = importance_weight(target, x);
    num += w * x.reward;
    den += w;
  }
  if (!(den > 0.0)) throw std::invalid_argument("wis_estimate: all importance weights zero");
  return num / den;
}

double dm_estimate(const IntervalDataset& data, const Population& pop, const Policy& target,
                   const RewardModel& model) {
  require_nonempty(data, "dm_estimate");
  if (model.num_actions() != target.num_actions()) {
    throw std::invalid_argument("dm_estimate: model/policy action mismatch");
  }
  const RewardTable proxy = model.predict_table(pop);
  double total = 0.0;
  for (const auto& x : data.samples) {
    double v = 0.0;
    for (int a = 0; a < target.num_actions(); ++a) v += target.prob(x.context, a) * proxy.at(x.context, a);
    total += v;
  }
  return total / data.size();
}

double diff_estimate(const IntervalDataset& data, const Population& pop, const Policy& target,
                     const RewardModel& model) {
  require_nonempty(data, "diff_estimate");
  const RewardTable proxy = model.predict_table(pop);
  const double known_total = true_value(pop, target, proxy);
  double resid = 0.0;
  for (const auto& x : data.samples) {
    resid += importance_weight(target, x) * (x.reward - proxy.at(x.context, x.action));
  }
  return known_total + resid / data.size();
}

double dr_estimate(const IntervalDataset& data, const Population& pop, const Policy& target,
                   const RewardModel& model) {
  require_nonempty(data, "dr_estimate");
  const RewardTable proxy = model.predict_table(pop);
  double total = 0.0;
  for (const auto& x : data.samples) {
    double dm = 0.0;
    for (int a = 0; a < target.num_actions(); ++a) dm += target.prob(x.context, a) * proxy.at(x.context, a);
    total += dm + importance_weight(target, x) * (x.reward - proxy.at(x.context, x.action));
  }
  return total / data.size();
}

RegCoefficients fit_reg_coefficients(const IntervalDataset& data, const Policy& target,
                                     const FeatureMap& features, double ridge_lambda) {
  require_nonempty(data, "fit_reg_coefficients");
  const int p = features.dim();
  DenseMatrix gram(p, p);
  std::vector<double> rhs(p, 0.0);
  std::vector<double> phi(p);
  for (const auto& x : data.samples) {
    const double w = importance_weight(target, x);
    features.eval(x.context, x.action, phi.data());
    for (int i = 0; i < p; ++i) {
      for (int j = i; j < p; ++j) gram(i, j) += w * phi[i] * phi[j];
      rhs[i] += w * phi[i] * x.reward;
    }
  }
  for (int i = 0; i < p; ++i) {
    for (int j = 0; j < i; ++j) gram(i, j) = gram(j, i);
  }
  RegCoefficients out;
  out.beta = solve_ridge(gram, rhs, ridge_lambda);
  out.gram = std::move(gram);
  out.fitted_on_n = data.size();
  return out;
}

double choose_ridge_lambda_cv(const IntervalDataset& data, const Policy& target,
                              const FeatureMap& features) {
  static constexpr std::array<double, 6> kGrid = {1e-4, 1e-3, 1e-2, 1e-1, 1e0, 1e1};
  constexpr int kFolds = 5;
  const int n = data.size();
  const int p = features.dim();
  if (n < 2) return kGrid.front();

  // Per-fold sufficient statistics; train stats are totals minus the fold.
  std::vector<DenseMatrix> fold_gram(kFolds, DenseMatrix(p, p));
  std::vector<std::vector<double>> fold_rhs(kFolds, std::vector<double>(p, 0.0));
  std::vector<double> phi(p);
  std::vector<std::vector<double>> phis(n, std::vector<double>(p));
  std::vector<double> ws(n);
  for (int i = 0; i < n; ++i) {
    const auto& x = data.samples[i];
    const double w = importance_weight(target, x);
    features.eval(x.context, x.action, phis[i].data());
    ws[i] = w;
    const int f = i % kFolds;
    for (int r = 0; r < p; ++r) {
      for (int c = r; c < p; ++c) fold_gram[f](r, c) += w * phis[i][r] * phis[i][c];
      fold_rhs[f][r] += w * phis[i][r] * x.reward;
    }
  }
  DenseMatrix total_gram(p, p);
  std::vector<double> total_rhs(p, 0.0);
  for (int f = 0; f < kFolds; ++f) {
    for (int r = 0; r < p; ++r) {
      for (int c = r; c < p; ++c) total_gram(r, c) += fold_gram[f](r, c);
      total_rhs[r] += fold_rhs[f][r];
    }
  }

  double best_lambda = kGrid.front();
  double best_score = std::numeric_limits<double>::infinity();
  for (const double lambda : kGrid) {
    double score = 0.0;
    bool feasible = true;
    for (int f = 0; f < kFolds; ++f) {
      DenseMatrix g(p, p);
      std::vector<double> c(p, 0.0);
      for (int r = 0; r < p; ++r) {
        for (int cc = r; cc < p; ++cc) {
          g(r, cc) = total_gram(r, cc) - fold_gram[f](r, cc);
          g(cc, r) = g(r, cc);
        }
        c[r] = total_rhs[r] - fold_rhs[f][r];
      }
      std::vector<double> beta;
      try {
        beta = solve_ridge(g, c, lambda);
      } catch (const SingularDesignError&) {
        feasible = false;
        break;
      }
      for (int i = f; i < n; i += kFolds) {
        double pred = 0.0;
        for (int j = 0; j < p; ++j) pred += phis[i][j] * beta[j];
        const double e = data.samples[i].reward - pred;
        score += ws[i] * e * e;
      }
    }
    if (feasible && score < best_score) {
      best_score = score;
      best_lambda = lambda;
    }
  }
  return best_lambda;
}

double proxy_population_total(const IntervalDataset& data, const Population& pop,
                              const Policy& target, const FeatureMap& features,
                              std::span<const double> beta, const PopTotalMode& mode) {
  const int p = features.dim();
  std::vector<double> phi(p);
  auto proxy_at = [&](int s, int a) {
    features.eval(s, a, phi.data());
    double v = 0.0;
    for (int j = 0; j < p; ++j) v += phi[j] * beta[j];
    return v;
  };
  auto all_actions = [&](int s) {
    double v = 0.0;
    for (int a = 0; a < target.num_actions(); ++a) v += target.prob(s, a) * proxy_at(s, a);
    return v;
  };

  switch (mode.kind) {
    case PopTotalMode::Kind::Known: {
      double total = 0.0;
      for (int s = 0; s < pop.num_contexts(); ++s) total += pop.context_prob(s) * all_actions(s);
      return total;
    }
    case PopTotalMode::Kind::SameSample: {
      double total = 0.0;
      for (const auto& x : data.samples) total += all_actions(x.context);
      return total / data.size();
    }
    case PopTotalMode::Kind::Independent: {
      if (mode.independent_contexts.empty()) {
        throw std::invalid_argument("proxy_population_total: empty independent context set");
      }
      double total = 0.0;
      for (const int s : mode.independent_contexts) total += all_actions(s);
      return total / static_cast<double>(mode.independent_contexts.size());
    }
  }
  throw std::logic_error("proxy_population_total: unreachable");
}

std::vector<double> feature_population_total(const IntervalDataset& data, const Population& pop,
                                             const Policy& target, const FeatureMap& features,
                                             const PopTotalMode& mode) {
  const int p = features.dim();
  std::vector<double> phi(p);
  std::vector<double> total(p, 0.0);
  auto add_all_actions = [&](int s, double scale) {
    for (int a = 0; a < target.num_actions(); ++a) {
      features.eval(s, a, phi.data());
      const double c = scale * target.prob(s, a);
      for (int j = 0; j < p; ++j) total[j] += c * phi[j];
    }
  };

  switch (mode.kind) {
    case PopTotalMode::Kind::Known:
      for (int s = 0; s < pop.num_contexts(); ++s) add_all_actions(s, pop.context_prob(s));
      return total;
    case PopTotalMode::Kind::SameSample: {
      const double scale = 1.0 / data.size();
      for (const auto& x : data.samples) add_all_actions(x.context, scale);
      return total;
    }
    case PopTotalMode::Kind::Independent: {
      if (mode.independent_contexts.empty()) {
        throw std::invalid_argument("feature_population_total: empty independent context set");
      }
      const double scale = 1.0 / static_cast<double>(mode.independent_contexts.size());
      for (const int s : mode.independent_contexts) add_all_actions(s, scale);
      return total;
    }
  }
  throw std::logic_error("feature_population_total: unreachable");
}

double reg_estimate_with(const IntervalDataset& data, const Population& pop, const Policy& target,
                         const FeatureMap& features, std::span<const double> beta,
                         const PopTotalMode& mode) {
  require_nonempty(data, "reg_estimate");
  if (static_cast<int>(beta.size()) != features.dim()) {
    throw std::invalid_argument("reg_estimate: beta dimension mismatch");
  }
  const double pop_total = proxy_population_total(data, pop, target, features, beta, mode);
  const int p = features.dim();
  std::vector<double> phi(p);
  double resid = 0.0;
  for (const auto& x : data.samples) {
    const double w = importance_weight(target, x);
    features.eval(x.context, x.action, phi.data());
    double pred = 0.0;
    for (int j = 0; j < p; ++j) pred += phi[j] * beta[j];
    resid += w * (x.reward - pred);
  }
  return pop_total + resid / data.size();
}

double reg_estimate(const IntervalDataset& data, const Population& pop, const Policy& target,
                    const FeatureMap& features, const PopTotalMode& mode, double ridge_lambda) {
  const RegCoefficients coeffs = fit_reg_coefficients(data, target, features, ridge_lambda);
  return reg_estimate_with(data, pop, target, features, coeffs.beta, mode);
}

IntervalDataset pool_window(std::span<const IntervalDataset> datasets, int k, int window) {
  if (window < 0) throw std::invalid_argument("pool_window: negative window");
  if (k - window < 0) throw std::invalid_argument("pool_window: window reaches before interval 0");
  if (k >= static_cast<int>(datasets.size())) {
    throw std::invalid_argument("pool_window: interval not present");
  }
  IntervalDataset pooled;
  pooled.interval = k;
  for (int j = k - window; j <= k; ++j) {
    if (datasets[j].interval != j) {
      throw std::invalid_argument("pool_window: datasets not indexed by interval");
    }
    pooled.samples.insert(pooled.samples.end(), datasets[j].samples.begin(),
                          datasets[j].samples.end());
  }
  return pooled;
}

}  // namespace nsope
