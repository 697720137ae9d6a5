#include "nsope/core.hpp"

#include <cmath>

namespace nsope {

namespace {

constexpr double kSimplexTol = 1e-12;

void check_simplex(std::span<const double> v, const char* what) {
  double sum = 0.0;
  for (double p : v) {
    if (!(p >= 0.0)) throw std::invalid_argument(std::string(what) + ": negative entry");
    sum += p;
  }
  if (std::abs(sum - 1.0) > kSimplexTol) {
    throw std::invalid_argument(std::string(what) + ": entries do not sum to 1");
  }
}

}  // namespace

Population::Population(std::vector<double> context_dist,
                       std::vector<std::vector<double>> context_features, int num_actions)
    : context_dist_(std::move(context_dist)),
      context_features_(std::move(context_features)),
      num_actions_(num_actions) {
  if (context_dist_.empty()) throw std::invalid_argument("Population: no contexts");
  if (num_actions_ < 1) throw std::invalid_argument("Population: no actions");
  check_simplex(context_dist_, "Population context_dist");
  if (context_features_.size() != context_dist_.size()) {
    throw std::invalid_argument("Population: one feature vector per context required");
  }
  feature_dim_ = static_cast<int>(context_features_.front().size());
  for (const auto& x : context_features_) {
    if (static_cast<int>(x.size()) != feature_dim_) {
      throw std::invalid_argument("Population: inconsistent feature dimension");
    }
    for (double v : x) {
      if (!std::isfinite(v)) throw std::invalid_argument("Population: non-finite feature");
    }
  }
}

Policy::Policy(std::vector<std::vector<double>> probs) : probs_(std::move(probs)) {
  if (probs_.empty()) throw std::invalid_argument("Policy: empty");
  num_actions_ = static_cast<int>(probs_.front().size());
  if (num_actions_ < 1) throw std::invalid_argument("Policy: no actions");
  for (const auto& row : probs_) {
    if (static_cast<int>(row.size()) != num_actions_) {
      throw std::invalid_argument("Policy: ragged rows");
    }
    check_simplex(row, "Policy row");
  }
}

Policy Policy::uniform(int num_contexts, int num_actions) {
  if (num_contexts < 1 || num_actions < 1) throw std::invalid_argument("Policy::uniform: bad size");
  std::vector<std::vector<double>> rows(
      num_contexts, std::vector<double>(num_actions, 1.0 / num_actions));
  return Policy(std::move(rows));
}

double true_value(const Population& pop, const Policy& target, const RewardTable& rewards) {
  if (target.num_contexts() != pop.num_contexts() || target.num_actions() != pop.num_actions() ||
      rewards.num_contexts() != pop.num_contexts() ||
      rewards.num_actions() != pop.num_actions()) {
    throw std::invalid_argument("true_value: dimension mismatch");
  }
  double total = 0.0;
  for (int s = 0; s < pop.num_contexts(); ++s) {
    double inner = 0.0;
    for (int a = 0; a < pop.num_actions(); ++a) inner += target.prob(s, a) * rewards.at(s, a);
    total += pop.context_prob(s) * inner;
  }
  return total;
}

double importance_weight(const Policy& target, const LoggedInteraction& sample) {
  if (!(sample.behavior_prob > 0.0)) {
    throw std::invalid_argument("importance_weight: behavior_prob must be > 0");
  }
  return target.prob(sample.context, sample.action) / sample.behavior_prob;
}

void validate_dataset(const Population& pop, const IntervalDataset& data,
                      const RewardBounds& bounds) {
  if (data.interval < 0) throw std::invalid_argument("dataset: negative interval");
  if (data.empty()) throw std::invalid_argument("dataset: empty");
  for (const auto& x : data.samples) {
    if (x.context < 0 || x.context >= pop.num_contexts()) {
      throw std::invalid_argument("dataset: context id out of range");
    }
    if (x.action < 0 || x.action >= pop.num_actions()) {
      throw std::invalid_argument("dataset: action id out of range");
    }
    if (!(x.behavior_prob > 0.0) || x.behavior_prob > 1.0) {
      throw std::invalid_argument("dataset: behavior_prob outside (0,1]");
    }
    if (!std::isfinite(x.reward) || !bounds.contains(x.reward)) {
      throw std::invalid_argument("dataset: reward outside configured bounds");
    }
  }
}

IntervalDataset sample_dataset(const Population& pop, const Policy& behavior,
                               const RewardTable& rewards, int interval, int n, Rng& rng) {
  if (n < 1) throw std::invalid_argument("sample_dataset: n must be >= 1");
  const CategoricalSampler context_sampler(pop.context_dist());
  IntervalDataset out;
  out.interval = interval;
  out.samples.reserve(n);
  for (int i = 0; i < n; ++i) {
    const int s = context_sampler.draw(rng);
    const int a = rng.categorical(behavior.row(s));
    out.samples.push_back({s, a, rewards.at(s, a), behavior.prob(s, a)});
  }
  return out;
}

}  // namespace nsope
