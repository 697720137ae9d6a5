#include "nsope/variance.hpp"

#include <cmath>
#include <limits>

namespace nsope {

const char* estimator_kind_name(EstimatorKind kind) {
  switch (kind) {
    case EstimatorKind::Is: return "is";
    case EstimatorKind::Wis: return "wis";
    case EstimatorKind::Dm: return "dm";
    case EstimatorKind::Diff: return "diff";
    case EstimatorKind::Dr: return "dr";
    case EstimatorKind::Reg: return "reg";
    case EstimatorKind::TrajIs: return "traj_is";
    case EstimatorKind::TrajWis: return "traj_wis";
    case EstimatorKind::Pdis: return "pdis";
    case EstimatorKind::RegFqe: return "reg_fqe";
  }
  return "?";
}

double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) throw std::invalid_argument("normal_quantile: p outside (0,1)");

  // Acklam's coefficients.
  static constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                                 -2.759285104469687e+02, 1.383577518672690e+02,
                                 -3.066479806614716e+01, 2.506628277459239e+00};
  static constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                                 -1.556989798598866e+02, 6.680131188771972e+01,
                                 -1.328068155288572e+01};
  static constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                                 -2.400758277161838e+00, -2.549732539343734e+00,
                                 4.374664141464968e+00,  2.938163982698783e+00};
  static constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                                 2.445134137142996e+00, 3.754408661907416e+00};
  constexpr double p_low = 0.02425;

  double q, r, x;
  if (p < p_low) {
    q = std::sqrt(-2.0 * std::log(p));
    x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  } else if (p <= 1.0 - p_low) {
    q = p - 0.5;
    r = q * q;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
  } else {
    q = std::sqrt(-2.0 * std::log(1.0 - p));
    x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  return x;
}

CiBounds build_ci(double estimate, double var_hat, double alpha, CiSided sided) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("build_ci: invalid alpha");
  if (var_hat < 0.0) throw std::invalid_argument("build_ci: negative variance");
  const double sigma = std::sqrt(var_hat);
  if (sided == CiSided::Two) {
    const double z = normal_quantile(1.0 - alpha / 2.0);
    return {estimate - z * sigma, estimate + z * sigma};
  }
  const double z = normal_quantile(1.0 - alpha);
  return {estimate - z * sigma, std::numeric_limits<double>::infinity()};
}

double mean_variance_from_terms(std::span<const double> terms) {
  const int n = static_cast<int>(terms.size());
  if (n < 2) throw std::invalid_argument("variance estimator requires n >= 2");
  double mean = 0.0;
  for (double t : terms) mean += t;
  mean /= n;
  double ss = 0.0;
  for (double t : terms) ss += (t - mean) * (t - mean);
  const double v = ss / (static_cast<double>(n) * (n - 1));
  if (v < -1e-12) throw std::logic_error("variance estimator produced a large negative value");
  return v < 0.0 ? 0.0 : v;
}

double var_is(const IntervalDataset& data, const Policy& target) {
  std::vector<double> terms;
  terms.reserve(data.size());
  for (const auto& x : data.samples) terms.push_back(importance_weight(target, x) * x.reward);
  return mean_variance_from_terms(terms);
}

double var_wis(const IntervalDataset& data, const Policy& target) {
  const double t_wis = wis_estimate(data, target);
  std::vector<double> terms;
  terms.reserve(data.size());
  for (const auto& x : data.samples) {
    terms.push_back(importance_weight(target, x) * (x.reward - t_wis));
  }
  return mean_variance_from_terms(terms);
}

double var_diff(const IntervalDataset& data, const Population& pop, const Policy& target,
                const RewardModel& model) {
  const RewardTable proxy = model.predict_table(pop);
  std::vector<double> terms;
  terms.reserve(data.size());
  for (const auto& x : data.samples) {
    terms.push_back(importance_weight(target, x) * (x.reward - proxy.at(x.context, x.action)));
  }
  return mean_variance_from_terms(terms);
}

double var_dr(const IntervalDataset& data, const Population& pop, const Policy& target,
              const RewardModel& model) {
  const RewardTable proxy = model.predict_table(pop);
  std::vector<double> terms;
  terms.reserve(data.size());
  for (const auto& x : data.samples) {
    double dm = 0.0;
    for (int a = 0; a < target.num_actions(); ++a) {
      dm += target.prob(x.context, a) * proxy.at(x.context, a);
    }
    terms.push_back(dm + importance_weight(target, x) *
                             (x.reward - proxy.at(x.context, x.action)));
  }
  return mean_variance_from_terms(terms);
}

double var_reg(const IntervalDataset& data, const Population& pop, const Policy& target,
               const FeatureMap& features, const RegCoefficients& coeffs, bool g_weighted,
               const PopTotalMode& mode) {
  const int n = data.size();
  const int p = features.dim();
  if (static_cast<int>(coeffs.beta.size()) != p) {
    throw std::invalid_argument("var_reg: coefficient dimension mismatch");
  }

  std::vector<double> g_dir;
  if (g_weighted) {
    std::vector<double> t_x = feature_population_total(data, pop, target, features, mode);
    std::vector<double> phi(p);
    std::vector<double> t_x_hat(p, 0.0);
    for (const auto& x : data.samples) {
      const double w = importance_weight(target, x);
      features.eval(x.context, x.action, phi.data());
      for (int j = 0; j < p; ++j) t_x_hat[j] += w * phi[j] / n;
    }
    std::vector<double> delta(p);
    for (int j = 0; j < p; ++j) delta[j] = t_x[j] - t_x_hat[j];
    // (Gram/n)^-1 contraction, done once: u = Gram^-1 delta, g_i = 1 + n u.phi_i.
    g_dir = solve_spd(coeffs.gram, delta);
    for (double& v : g_dir) v *= n;
  }

  std::vector<double> phi(p);
  std::vector<double> terms;
  terms.reserve(n);
  for (int i = 0; i < n; ++i) {
    const auto& x = data.samples[i];
    const double w = importance_weight(target, x);
    features.eval(x.context, x.action, phi.data());
    double pred = 0.0;
    for (int j = 0; j < p; ++j) pred += phi[j] * coeffs.beta[j];
    double g = 1.0;
    if (g_weighted) {
      double corr = 0.0;
      for (int j = 0; j < p; ++j) corr += g_dir[j] * phi[j];
      g = 1.0 + corr;
    }
    terms.push_back(w * g * (x.reward - pred));
  }
  return mean_variance_from_terms(terms);
}

double var_dm_model_based(const IntervalDataset& data, const Population& pop,
                          const Policy& target, const FeatureMap& features) {
  const int n = data.size();
  const int p = features.dim();
  if (n <= p) throw std::invalid_argument("var_dm_model_based: requires n > p");

  DenseMatrix gram(p, p);
  std::vector<double> rhs(p, 0.0);
  std::vector<double> phi(p);
  for (const auto& x : data.samples) {
    features.eval(x.context, x.action, phi.data());
    for (int i = 0; i < p; ++i) {
      for (int j = i; j < p; ++j) gram(i, j) += phi[i] * phi[j];
      rhs[i] += phi[i] * x.reward;
    }
  }
  for (int i = 0; i < p; ++i) {
    for (int j = 0; j < i; ++j) gram(i, j) = gram(j, i);
  }
  const std::vector<double> beta = solve_spd(gram, rhs);

  double rss = 0.0;
  for (const auto& x : data.samples) {
    features.eval(x.context, x.action, phi.data());
    double pred = 0.0;
    for (int j = 0; j < p; ++j) pred += phi[j] * beta[j];
    rss += (x.reward - pred) * (x.reward - pred);
  }
  const double sigma2 = rss / (n - p);

  std::vector<double> t_x(p, 0.0);
  for (int s = 0; s < pop.num_contexts(); ++s) {
    for (int a = 0; a < pop.num_actions(); ++a) {
      features.eval(s, a, phi.data());
      const double c = pop.context_prob(s) * target.prob(s, a);
      for (int j = 0; j < p; ++j) t_x[j] += c * phi[j];
    }
  }
  const std::vector<double> u = solve_spd(gram, t_x);
  double quad = 0.0;
  for (int j = 0; j < p; ++j) quad += t_x[j] * u[j];
  return sigma2 * quad;
}

double exact_variance_oracle(const Population& pop, const Policy& target, const Policy& behavior,
                             const std::function<double(int, int)>& transform, int n) {
  if (n < 1) throw std::invalid_argument("exact_variance_oracle: n must be >= 1");
  double sum_sq_over_p = 0.0;
  double total = 0.0;
  for (int s = 0; s < pop.num_contexts(); ++s) {
    for (int a = 0; a < pop.num_actions(); ++a) {
      const double y = pop.context_prob(s) * target.prob(s, a) * transform(s, a);
      const double p_cell = pop.context_prob(s) * behavior.prob(s, a);
      if (p_cell <= 0.0) {
        if (y != 0.0) {
          throw std::invalid_argument(
              "exact_variance_oracle: zero sampling probability on a nonzero cell");
        }
        continue;
      }
      sum_sq_over_p += y * y / p_cell;
      total += y;
    }
  }
  return (sum_sq_over_p - total * total) / n;
}

}  // namespace nsope
