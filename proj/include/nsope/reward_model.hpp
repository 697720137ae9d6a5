#pragma once

#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "nsope/core.hpp"

namespace nsope {

// Per-action linear reward predictor r_hat(s,a) = w_a . (1, x_s), trained on
// a window of past interval data. Predictions are clamped to the reward
// bounds so the boundedness assumptions stay testable.
class RewardModel {
 public:
  RewardModel(std::vector<std::vector<double>> per_action_weights, RewardBounds bounds,
              std::vector<int> trained_on);

  int num_actions() const { return static_cast<int>(weights_.size()); }
  int weight_dim() const { return static_cast<int>(weights_.front().size()); }
  std::span<const double> weights(int a) const { return weights_[a]; }
  const std::vector<int>& trained_on() const { return trained_on_; }
  RewardBounds bounds() const { return bounds_; }

  double predict(const Population& pop, int s, int a) const;
  RewardTable predict_table(const Population& pop) const;

 private:
  std::vector<std::vector<double>> weights_;  // |A| rows of dimension d_x + 1
  RewardBounds bounds_;
  std::vector<int> trained_on_;
};

// Ordinary least squares per action over the pooled window. A rank-deficient
// per-action design falls back to that action's sample-mean reward; an action
// absent from the window falls back to the pooled global mean.
RewardModel fit_reward_model(const Population& pop, std::span<const IntervalDataset> window_data,
                             RewardBounds bounds = RewardBounds{});

enum class FeatureKind {
  Constant,          // phi = (1)
  Reg,               // phi = (1, r_hat(s,a)), one pooled model
  RegAr,             // phi = (1, r_hat_{k-B}, ..., r_hat_{k-1}), one model per interval
  RegFeature,        // phi = (1, x_s)
  RegPlusFeature,    // phi = (1, r_hat, x_s)
  RegArPlusFeature,  // phi = (1, r_hat_{k-B..k-1}, x_s)
};

const char* feature_kind_name(FeatureKind kind);

struct FeatureConfig {
  FeatureKind kind = FeatureKind::Reg;
  int window = 1;              // B, number of past reward models for the AR kinds
  double ridge_lambda = 0.0;   // ridge for the assisted-regression fit
  bool ridge_cv = false;       // pick lambda by 5-fold cross-validation instead
};

// Total function over S x A producing fixed-dimension feature vectors. The
// first entry is always the constant 1.
class FeatureMap {
 public:
  using EvalFn = std::function<void(int s, int a, double* out)>;

  FeatureMap(int dim, EvalFn eval) : dim_(dim), eval_(std::move(eval)) {}

  int dim() const { return dim_; }
  void eval(int s, int a, double* out) const { eval_(s, a, out); }

  std::vector<double> at(int s, int a) const {
    std::vector<double> out(dim_);
    eval_(s, a, out.data());
    return out;
  }

 private:
  int dim_;
  EvalFn eval_;
};

// Assembles the configured feature map from reward models. Required model
// counts: Constant/RegFeature 0, Reg/RegPlusFeature 1, AR kinds config.window.
// Model prediction tables are materialized once so evaluation is a lookup.
FeatureMap build_features(const FeatureConfig& config, const Population& pop,
                          std::span<const RewardModel> models);

}  // namespace nsope
