#include "nsope/reward_model.hpp"

#include <cmath>

#include "nsope/linalg.hpp"

namespace nsope {

RewardModel::RewardModel(std::vector<std::vector<double>> per_action_weights, RewardBounds bounds,
                         std::vector<int> trained_on)
    : weights_(std::move(per_action_weights)), bounds_(bounds), trained_on_(std::move(trained_on)) {
  if (weights_.empty()) throw std::invalid_argument("RewardModel: no actions");
  const std::size_t dim = weights_.front().size();
  for (const auto& w : weights_) {
    if (w.size() != dim) throw std::invalid_argument("RewardModel: ragged weights");
    for (double v : w) {
      if (!std::isfinite(v)) throw std::invalid_argument("RewardModel: non-finite weight");
    }
  }
}

double RewardModel::predict(const Population& pop, int s, int a) const {
  const auto& w = weights_[a];
  double y = w[0];
  const auto x = pop.features(s);
  for (std::size_t j = 0; j < x.size(); ++j) y += w[j + 1] * x[j];
  return bounds_.clamp(y);
}

RewardTable RewardModel::predict_table(const Population& pop) const {
  RewardTable table(pop.num_contexts(), pop.num_actions());
  for (int s = 0; s < pop.num_contexts(); ++s) {
    for (int a = 0; a < pop.num_actions(); ++a) table.at(s, a) = predict(pop, s, a);
  }
  return table;
}

RewardModel fit_reward_model(const Population& pop, std::span<const IntervalDataset> window_data,
                             RewardBounds bounds) {
  if (window_data.empty()) throw std::invalid_argument("fit_reward_model: empty window");
  std::size_t total = 0;
  for (const auto& d : window_data) total += d.samples.size();
  if (total == 0) throw std::invalid_argument("fit_reward_model: empty window");

  const int num_actions = pop.num_actions();
  const int dim = pop.feature_dim() + 1;

  double global_sum = 0.0;
  std::vector<DenseMatrix> gram(num_actions, DenseMatrix(dim, dim));
  std::vector<std::vector<double>> rhs(num_actions, std::vector<double>(dim, 0.0));
  std::vector<double> action_sum(num_actions, 0.0);
  std::vector<std::int64_t> action_count(num_actions, 0);
  std::vector<double> z(dim);

  std::vector<int> trained_on;
  for (const auto& d : window_data) {
    trained_on.push_back(d.interval);
    for (const auto& x : d.samples) {
      global_sum += x.reward;
      action_sum[x.action] += x.reward;
      action_count[x.action] += 1;
      z[0] = 1.0;
      const auto feat = pop.features(x.context);
      for (int j = 0; j < dim - 1; ++j) z[j + 1] = feat[j];
      DenseMatrix& g = gram[x.action];
      std::vector<double>& c = rhs[x.action];
      for (int i = 0; i < dim; ++i) {
        for (int j = i; j < dim; ++j) g(i, j) += z[i] * z[j];
        c[i] += z[i] * x.reward;
      }
    }
  }
  const double global_mean = global_sum / static_cast<double>(total);

  std::vector<std::vector<double>> weights(num_actions, std::vector<double>(dim, 0.0));
  for (int a = 0; a < num_actions; ++a) {
    if (action_count[a] == 0) {
      weights[a][0] = global_mean;  // action never logged: pooled global mean
      continue;
    }
    DenseMatrix& g = gram[a];
    for (int i = 0; i < dim; ++i) {
      for (int j = 0; j < i; ++j) g(i, j) = g(j, i);
    }
    try {
      weights[a] = solve_spd(g, rhs[a]);
    } catch (const SingularDesignError&) {
      weights[a].assign(dim, 0.0);
      weights[a][0] = action_sum[a] / static_cast<double>(action_count[a]);
    }
  }
  return RewardModel(std::move(weights), bounds, std::move(trained_on));
}

const char* feature_kind_name(FeatureKind kind) {
  switch (kind) {
    case FeatureKind::Constant: return "constant";
    case FeatureKind::Reg: return "reg";
    case FeatureKind::RegAr: return "reg_ar";
    case FeatureKind::RegFeature: return "reg_feature";
    case FeatureKind::RegPlusFeature: return "reg_plus_feature";
    case FeatureKind::RegArPlusFeature: return "reg_ar_plus_feature";
  }
  return "?";
}

FeatureMap build_features(const FeatureConfig& config, const Population& pop,
                          std::span<const RewardModel> models) {
  if (config.window < 0) throw std::invalid_argument("build_features: negative window");

  const int d_x = pop.feature_dim();
  int expected_models = 0;
  switch (config.kind) {
    case FeatureKind::Constant:
    case FeatureKind::RegFeature:
      expected_models = 0;
      break;
    case FeatureKind::Reg:
    case FeatureKind::RegPlusFeature:
      expected_models = 1;
      break;
    case FeatureKind::RegAr:
    case FeatureKind::RegArPlusFeature:
      expected_models = config.window;
      break;
  }
  if (static_cast<int>(models.size()) != expected_models) {
    throw std::invalid_argument("build_features: model list inconsistent with feature kind");
  }

  auto tables = std::make_shared<std::vector<RewardTable>>();
  tables->reserve(models.size());
  for (const auto& m : models) tables->push_back(m.predict_table(pop));

  // Contexts outlive the returned map in all callers, but copying keeps the
  // map self-contained.
  auto features = std::make_shared<std::vector<std::vector<double>>>();
  const bool with_x = config.kind == FeatureKind::RegFeature ||
                      config.kind == FeatureKind::RegPlusFeature ||
                      config.kind == FeatureKind::RegArPlusFeature;
  if (with_x) {
    features->reserve(pop.num_contexts());
    for (int s = 0; s < pop.num_contexts(); ++s) {
      const auto x = pop.features(s);
      features->emplace_back(x.begin(), x.end());
    }
  }

  const int num_models = static_cast<int>(models.size());
  const int dim = 1 + num_models + (with_x ? d_x : 0);
  return FeatureMap(dim, [tables, features, num_models, with_x](int s, int a, double* out) {
    int j = 0;
    out[j++] = 1.0;
    for (int m = 0; m < num_models; ++m) out[j++] = (*tables)[m].at(s, a);
    if (with_x) {
      for (double v : (*features)[s]) out[j++] = v;
    }
  });
}

}  // namespace nsope
