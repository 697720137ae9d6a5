#pragma once

#include <span>
#include <vector>

#include "nsope/core.hpp"
#include "nsope/linalg.hpp"
#include "nsope/reward_model.hpp"

namespace nsope {

// How the population total of the proxy value is obtained in the assisted
// estimators: enumerated over the known universe, estimated from the
// estimation sample's own contexts (all actions), or estimated from the
// contexts of independent past data (never their rewards).
struct PopTotalMode {
  enum class Kind { Known, SameSample, Independent };

  Kind kind = Kind::Known;
  std::vector<int> independent_contexts;

  static PopTotalMode known() { return {}; }
  static PopTotalMode same_sample() { return {Kind::SameSample, {}}; }
  static PopTotalMode independent(std::vector<int> contexts) {
    if (contexts.empty()) {
      throw std::invalid_argument("PopTotalMode::independent: empty context set");
    }
    return {Kind::Independent, std::move(contexts)};
  }
};

// Weighted-least-squares coefficients of the assisted regression, together
// with the (unridged) weighted Gram matrix they were solved against.
struct RegCoefficients {
  std::vector<double> beta;
  DenseMatrix gram;  // sum over the sample of w * phi phi^T
  int fitted_on_n = 0;
};

double is_estimate(const IntervalDataset& data, const Policy& target);
double wis_estimate(const IntervalDataset& data, const Policy& target);
double dm_estimate(const IntervalDataset& data, const Population& pop, const Policy& target,
                   const RewardModel& model);
double diff_estimate(const IntervalDataset& data, const Population& pop, const Policy& target,
                     const RewardModel& model);
double dr_estimate(const IntervalDataset& data, const Population& pop, const Policy& target,
                   const RewardModel& model);

// beta_hat = (sum w phi phi^T + lambda I)^-1 (sum w phi r). lambda = 0
// reproduces the plain weighted-least-squares solution or throws
// SingularDesignError when the Gram matrix is singular.
RegCoefficients fit_reg_coefficients(const IntervalDataset& data, const Policy& target,
                                     const FeatureMap& features, double ridge_lambda);

// Picks the ridge strength by 5-fold cross-validation over the grid
// 1e-4..1e1, minimizing held-out weighted squared error.
double choose_ridge_lambda_cv(const IntervalDataset& data, const Policy& target,
                              const FeatureMap& features);

// The regression-assisted estimator: proxy population total plus the
// weighted residual correction, with coefficients fit from the same data.
double reg_estimate(const IntervalDataset& data, const Population& pop, const Policy& target,
                    const FeatureMap& features, const PopTotalMode& mode, double ridge_lambda);

// Same estimator with externally supplied coefficients (fixed-beta variants
// reproduce the plain and difference estimators).
double reg_estimate_with(const IntervalDataset& data, const Population& pop, const Policy& target,
                         const FeatureMap& features, std::span<const double> beta,
                         const PopTotalMode& mode);

// Population total of phi^T beta under the given mode.
double proxy_population_total(const IntervalDataset& data, const Population& pop,
                              const Policy& target, const FeatureMap& features,
                              std::span<const double> beta, const PopTotalMode& mode);

// Population total of the feature vector itself (vector-valued analog of the
// above; used by the weighted-residual variance estimator).
std::vector<double> feature_population_total(const IntervalDataset& data, const Population& pop,
                                             const Policy& target, const FeatureMap& features,
                                             const PopTotalMode& mode);

// Concatenation of D_{k-B}..D_k. The current interval is always included, so
// B = 0 degenerates to the plain single-interval estimator.
IntervalDataset pool_window(std::span<const IntervalDataset> datasets, int k, int window);

}  // namespace nsope
