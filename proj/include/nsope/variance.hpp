#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "nsope/estimators.hpp"

namespace nsope {

enum class CiSided { Two, Lower };

struct CiBounds {
  double lo = 0.0;
  double hi = 0.0;
};

enum class EstimatorKind { Is, Wis, Dm, Diff, Dr, Reg, TrajIs, TrajWis, Pdis, RegFqe };

const char* estimator_kind_name(EstimatorKind kind);

// One estimator's output for one interval: point estimate, variance estimate
// and the large-sample confidence interval at failure probability alpha.
struct EstimateReport {
  EstimatorKind kind = EstimatorKind::Is;
  int interval = 0;
  double estimate = 0.0;
  double var_hat = 0.0;
  double ci_lo = 0.0;
  double ci_hi = 0.0;
  double alpha = 0.05;
};

// Inverse standard normal CDF (Acklam's rational approximation, |relative
// error| < 1.2e-8). normal_quantile(0.975) = 1.959964.
double normal_quantile(double p);

// Two-sided: estimate +- z_{alpha/2} sigma. Lower: (estimate - z_alpha sigma, +inf).
CiBounds build_ci(double estimate, double var_hat, double alpha, CiSided sided);

// Shared core of all the variance estimators below: for per-draw terms t_i,
// returns sum (t_i - mean)^2 / (n(n-1)), the unbiased variance of the mean of
// i.i.d. terms. Requires n >= 2.
double mean_variance_from_terms(std::span<const double> terms);

double var_is(const IntervalDataset& data, const Policy& target);
double var_wis(const IntervalDataset& data, const Policy& target);
double var_diff(const IntervalDataset& data, const Population& pop, const Policy& target,
                const RewardModel& model);
double var_dr(const IntervalDataset& data, const Population& pop, const Policy& target,
              const RewardModel& model);

// Variance estimator for the assisted estimator. The plain form applies the
// per-draw formula to weighted residuals; the g-weighted form multiplies each
// residual by g_i = 1 + (t_x - t_x_hat)^T (Gram/n)^-1 phi_i, where t_x is the
// feature population total under the given mode.
double var_reg(const IntervalDataset& data, const Population& pop, const Policy& target,
               const FeatureMap& features, const RegCoefficients& coeffs, bool g_weighted,
               const PopTotalMode& mode);

// Model-based variance for the direct method: sigma2_hat * t_x^T (sum phi
// phi^T)^-1 t_x with sigma2_hat the unweighted OLS residual variance.
// Requires n > p.
double var_dm_model_based(const IntervalDataset& data, const Population& pop,
                          const Policy& target, const FeatureMap& features);

// Exact per-draw variance of the plain weighted estimator of the population
// total of P(s) pi(a|s) transform(s,a) under sampling p = P(s) pi_b(a|s),
// divided by n. Enumerates the universe; errors when some cell has zero
// sampling probability but a nonzero summand.
double exact_variance_oracle(const Population& pop, const Policy& target, const Policy& behavior,
                             const std::function<double(int, int)>& transform, int n);

}  // namespace nsope
