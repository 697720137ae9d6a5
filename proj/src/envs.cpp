#include "nsope/envs.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <numeric>
#include <sstream>

#include "nsope/linalg.hpp"

namespace nsope {

Policy softmax_policy(const RewardTable& scores, double temperature) {
  if (!(temperature > 0.0)) throw std::invalid_argument("softmax_policy: temperature must be > 0");
  std::vector<std::vector<double>> rows(scores.num_contexts(),
                                        std::vector<double>(scores.num_actions()));
  for (int s = 0; s < scores.num_contexts(); ++s) {
    double max_score = scores.at(s, 0);
    for (int a = 1; a < scores.num_actions(); ++a) max_score = std::max(max_score, scores.at(s, a));
    double sum = 0.0;
    for (int a = 0; a < scores.num_actions(); ++a) {
      rows[s][a] = std::exp((scores.at(s, a) - max_score) / temperature);
      sum += rows[s][a];
    }
    for (double& v : rows[s]) v /= sum;
  }
  return Policy(std::move(rows));
}

RewardTable mean_reward_table(const NonstationaryEnv& env) {
  const int total = env.num_intervals();
  RewardTable mean(env.population().num_contexts(), env.population().num_actions());
  for (int k = 0; k < total; ++k) {
    const RewardTable t = env.reward_at(k);
    for (int s = 0; s < mean.num_contexts(); ++s) {
      for (int a = 0; a < mean.num_actions(); ++a) mean.at(s, a) += t.at(s, a) / total;
    }
  }
  return mean;
}

// ---------------------------------------------------------------------------
// Sine-wave bandit

SineBanditEnv::SineBanditEnv(Population pop, std::vector<std::uint8_t> positive,
                             std::vector<double> amplitude, std::vector<double> frequency,
                             double base, double noise_scale, double inject_rate,
                             double inject_lo, double inject_hi, int num_intervals,
                             std::uint64_t seed)
    : pop_(std::move(pop)),
      positive_(std::move(positive)),
      amplitude_(std::move(amplitude)),
      frequency_(std::move(frequency)),
      base_(base),
      noise_scale_(noise_scale),
      inject_rate_(inject_rate),
      inject_lo_(inject_lo),
      inject_hi_(inject_hi),
      num_intervals_(num_intervals),
      seed_(seed) {
  const std::size_t cells =
      static_cast<std::size_t>(pop_.num_contexts()) * pop_.num_actions();
  if (positive_.size() != cells || amplitude_.size() != cells || frequency_.size() != cells) {
    throw std::invalid_argument("SineBanditEnv: table sizes disagree with population");
  }
  if (num_intervals_ < 1) throw std::invalid_argument("SineBanditEnv: need at least one interval");
  if (noise_scale_ < 0.0) throw std::invalid_argument("SineBanditEnv: negative noise scale");
}

RewardBounds SineBanditEnv::reward_bounds() const {
  double amp_max = 0.0;
  for (const double a : amplitude_) amp_max = std::max(amp_max, a);
  const double hi = std::max(base_ + amp_max, inject_hi_) + noise_scale_;
  const double lo = std::min(0.0, base_ - amp_max);
  return {lo, hi};
}

RewardTable SineBanditEnv::reward_at(int k) const {
  if (k < 0 || k >= num_intervals_) throw std::invalid_argument("reward_at: interval out of range");
  RewardTable table(pop_.num_contexts(), pop_.num_actions());
  for (int s = 0; s < pop_.num_contexts(); ++s) {
    for (int a = 0; a < pop_.num_actions(); ++a) {
      const std::size_t i = index(s, a);
      if (positive_[i]) {
        table.at(s, a) = base_ + amplitude_[i] * std::sin(k * frequency_[i]);
      }
    }
  }
  // Per-interval random positive pairs are part of the reward function, so
  // the true value moves with them and estimators are judged against it.
  if (inject_rate_ > 0.0) {
    Rng inject_rng(mix_seed(seed_, 0x1213ULL, static_cast<std::uint64_t>(k)));
    for (int s = 0; s < pop_.num_contexts(); ++s) {
      for (int a = 0; a < pop_.num_actions(); ++a) {
        const bool hit = inject_rng.uniform() < inject_rate_;
        const double value = inject_rng.uniform(inject_lo_, inject_hi_);
        if (hit && !positive_[index(s, a)]) table.at(s, a) = value;
      }
    }
  }
  return table;
}

IntervalDataset SineBanditEnv::sample(int k, const Policy& policy, int n, Rng& rng) const {
  IntervalDataset out = sample_dataset(pop_, policy, reward_at(k), k, n, rng);
  if (noise_scale_ > 0.0) {
    for (auto& x : out.samples) x.reward += noise_scale_ * rng.uniform();
  }
  return out;
}

namespace {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace

SineBanditEnv make_sine_bandit(const SineBanditConfig& config) {
  if (config.num_contexts < 1 || config.num_actions < 1 || config.num_intervals < 1) {
    throw std::invalid_argument("make_sine_bandit: bad dimensions");
  }
  if (config.amplitude_lo > config.amplitude_hi || config.frequency_lo > config.frequency_hi ||
      config.positive_value_lo > config.positive_value_hi) {
    throw std::invalid_argument("make_sine_bandit: empty sampling range");
  }
  if (config.positive_fraction < 0.0 || config.positive_fraction > 1.0 ||
      config.positive_pair_rate < 0.0 || config.positive_pair_rate > 1.0) {
    throw std::invalid_argument("make_sine_bandit: rates must lie in [0,1]");
  }

  const int s_count = config.num_contexts;
  const int a_count = config.num_actions;
  const std::size_t cells = static_cast<std::size_t>(s_count) * a_count;
  Rng rng(mix_seed(config.seed, 0x51BEULL));

  const int latent_dim = std::min(8, std::max(1, config.feature_dim));
  std::vector<std::vector<double>> latents(s_count, std::vector<double>(latent_dim));
  for (auto& u : latents) {
    for (double& v : u) v = rng.normal() / std::sqrt(static_cast<double>(latent_dim));
  }

  std::vector<std::vector<double>> features(s_count, std::vector<double>(config.feature_dim));
  for (int s = 0; s < s_count; ++s) {
    for (int j = 0; j < config.feature_dim; ++j) {
      features[s][j] = j < latent_dim ? latents[s][j] : 0.3 * rng.normal();
    }
  }

  std::vector<std::uint8_t> positive(cells, 0);
  std::vector<double> amplitude(cells);
  std::vector<double> frequency(cells);

  if (config.feature_linked) {
    std::vector<double> amp_dir(latent_dim);
    std::vector<double> pos_dir(latent_dim);
    std::vector<double> score(s_count);
    std::vector<int> order(s_count);
    for (int a = 0; a < a_count; ++a) {
      for (double& v : pos_dir) v = rng.normal();
      for (double& v : amp_dir) v = rng.normal();
      for (int s = 0; s < s_count; ++s) {
        double sp = 0.0;
        double sa = 0.0;
        for (int j = 0; j < latent_dim; ++j) {
          sp += latents[s][j] * pos_dir[j];
          sa += latents[s][j] * amp_dir[j];
        }
        score[s] = sp;
        amplitude[static_cast<std::size_t>(s) * a_count + a] =
            config.amplitude_lo + (config.amplitude_hi - config.amplitude_lo) * sigmoid(2.0 * sa);
      }
      // Top positive_fraction of contexts per action, ranked by latent score.
      std::iota(order.begin(), order.end(), 0);
      std::sort(order.begin(), order.end(),
                [&](int l, int r) { return score[l] > score[r] || (score[l] == score[r] && l < r); });
      const int n_pos = static_cast<int>(std::lround(config.positive_fraction * s_count));
      for (int i = 0; i < n_pos && i < s_count; ++i) {
        positive[static_cast<std::size_t>(order[i]) * a_count + a] = 1;
      }
    }
  } else {
    for (std::size_t i = 0; i < cells; ++i) {
      positive[i] = rng.uniform() < config.positive_fraction ? 1 : 0;
      amplitude[i] = rng.uniform(config.amplitude_lo, config.amplitude_hi);
    }
  }
  for (std::size_t i = 0; i < cells; ++i) {
    frequency[i] = rng.uniform(config.frequency_lo, config.frequency_hi);
  }

  Population pop(std::vector<double>(s_count, 1.0 / s_count), std::move(features), a_count);
  return SineBanditEnv(std::move(pop), std::move(positive), std::move(amplitude),
                       std::move(frequency), config.base, config.noise_scale,
                       config.positive_pair_rate, config.positive_value_lo,
                       config.positive_value_hi, config.num_intervals, config.seed);
}

// ---------------------------------------------------------------------------
// Multilabel parsing

std::vector<MultilabelRecord> parse_multilabel(std::istream& stream) {
  std::vector<MultilabelRecord> records;
  std::string line;
  int line_number = 0;
  while (std::getline(stream, line)) {
    ++line_number;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;

    MultilabelRecord record;
    std::size_t pos = 0;
    if (line[0] != ' ') {
      // Leading label list, comma separated, up to the first space.
      const std::size_t end = line.find(' ');
      const std::string label_part = line.substr(0, end);
      std::size_t start = 0;
      while (start <= label_part.size()) {
        const std::size_t comma = label_part.find(',', start);
        const std::string tok =
            label_part.substr(start, comma == std::string::npos ? comma : comma - start);
        if (tok.empty()) throw ParseError("empty label", line_number);
        std::size_t used = 0;
        int label = 0;
        try {
          label = std::stoi(tok, &used);
        } catch (const std::exception&) {
          throw ParseError("malformed label '" + tok + "'", line_number);
        }
        if (used != tok.size() || label < 0) {
          throw ParseError("malformed label '" + tok + "'", line_number);
        }
        record.labels.push_back(label);
        if (comma == std::string::npos) break;
        start = comma + 1;
      }
      pos = end == std::string::npos ? line.size() : end;
    }
    std::sort(record.labels.begin(), record.labels.end());
    record.labels.erase(std::unique(record.labels.begin(), record.labels.end()),
                        record.labels.end());

    std::istringstream feats(line.substr(pos));
    std::string tok;
    int prev_index = -1;
    while (feats >> tok) {
      const std::size_t colon = tok.find(':');
      if (colon == std::string::npos || colon == 0 || colon + 1 == tok.size()) {
        throw ParseError("malformed feature token '" + tok + "'", line_number);
      }
      int idx = 0;
      double value = 0.0;
      std::size_t used = 0;
      try {
        idx = std::stoi(tok.substr(0, colon), &used);
        if (used != colon) throw std::invalid_argument("trailing");
        value = std::stod(tok.substr(colon + 1), &used);
        if (used != tok.size() - colon - 1) throw std::invalid_argument("trailing");
      } catch (const std::exception&) {
        throw ParseError("malformed feature token '" + tok + "'", line_number);
      }
      if (idx < 0) throw ParseError("negative feature index", line_number);
      if (!std::isfinite(value)) throw ParseError("non-finite feature value", line_number);
      if (idx <= prev_index) {
        throw ParseError("feature indices must be strictly increasing", line_number);
      }
      prev_index = idx;
      record.features.emplace_back(idx, value);
    }
    records.push_back(std::move(record));
  }
  return records;
}

std::string serialize_multilabel(const MultilabelRecord& record) {
  std::string out;
  for (std::size_t i = 0; i < record.labels.size(); ++i) {
    if (i > 0) out += ',';
    out += std::to_string(record.labels[i]);
  }
  char buf[64];
  for (const auto& [idx, value] : record.features) {
    std::snprintf(buf, sizeof buf, " %d:%.17g", idx, value);
    out += buf;
  }
  return out;
}

std::string serialize_multilabel(const std::vector<MultilabelRecord>& records) {
  std::string out;
  for (const auto& r : records) {
    out += serialize_multilabel(r);
    out += '\n';
  }
  return out;
}

// ---------------------------------------------------------------------------
// Supervised-to-bandit conversion

namespace {

std::vector<std::vector<double>> densify(const std::vector<MultilabelRecord>& records, int dim) {
  std::vector<std::vector<double>> out(records.size(), std::vector<double>(dim, 0.0));
  for (std::size_t i = 0; i < records.size(); ++i) {
    for (const auto& [idx, value] : records[i].features) out[i][idx] = value;
  }
  return out;
}

}  // namespace

SupervisedBandit supervised_to_bandit(const std::vector<MultilabelRecord>& records,
                                      int num_actions, double target_subset_frac,
                                      std::uint64_t seed) {
  if (records.empty()) throw std::invalid_argument("supervised_to_bandit: no records");
  if (num_actions < 1) throw std::invalid_argument("supervised_to_bandit: no actions");
  if (!(target_subset_frac > 0.0 && target_subset_frac <= 1.0)) {
    throw std::invalid_argument("supervised_to_bandit: subset fraction outside (0,1]");
  }

  int dim = 0;
  for (const auto& r : records) {
    for (const auto l : r.labels) {
      if (l >= num_actions) {
        throw std::invalid_argument("supervised_to_bandit: label " + std::to_string(l) +
                                    " outside action range");
      }
    }
    if (!r.features.empty()) dim = std::max(dim, r.features.back().first + 1);
  }
  dim = std::max(dim, 1);

  const int n = static_cast<int>(records.size());
  std::vector<std::vector<double>> x = densify(records, dim);

  RewardTable base(n, num_actions);
  for (int s = 0; s < n; ++s) {
    for (const int l : records[s].labels) base.at(s, l) = 1.0;
  }

  // Seeded subset for the classifier behind the target policy.
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(mix_seed(seed, 0xC1A5ULL));
  for (int i = n - 1; i > 0; --i) std::swap(order[i], order[rng.uniform_int(i + 1)]);
  const int subset = std::max(1, static_cast<int>(std::lround(target_subset_frac * n)));

  // One-vs-rest least squares on (1, x); a small ridge keeps sparse designs
  // solvable without changing separable solutions materially.
  const int p = dim + 1;
  DenseMatrix gram(p, p);
  std::vector<double> z(p);
  for (int i = 0; i < subset; ++i) {
    const auto& xi = x[order[i]];
    z[0] = 1.0;
    for (int j = 0; j < dim; ++j) z[j + 1] = xi[j];
    for (int r = 0; r < p; ++r) {
      for (int c = r; c < p; ++c) gram(r, c) += z[r] * z[c];
    }
  }
  for (int r = 0; r < p; ++r) {
    for (int c = 0; c < r; ++c) gram(r, c) = gram(c, r);
  }

  RewardTable scores(n, num_actions);
  for (int a = 0; a < num_actions; ++a) {
    std::vector<double> rhs(p, 0.0);
    for (int i = 0; i < subset; ++i) {
      const int s = order[i];
      const double y = base.at(s, a);
      const auto& xi = x[s];
      rhs[0] += y;
      for (int j = 0; j < dim; ++j) rhs[j + 1] += xi[j] * y;
    }
    const std::vector<double> w = solve_ridge(gram, rhs, 1e-6 * subset);
    for (int s = 0; s < n; ++s) {
      double score = w[0];
      for (int j = 0; j < dim; ++j) score += w[j + 1] * x[s][j];
      scores.at(s, a) = score;
    }
  }

  Population pop(std::vector<double>(n, 1.0 / n), std::move(x), num_actions);
  Policy target = softmax_policy(scores, 1.0);
  return SupervisedBandit{std::move(pop), std::move(target), std::move(base)};
}

SineBanditEnv make_sine_bandit_from_records(const std::vector<MultilabelRecord>& records,
                                            int num_actions, const SineBanditConfig& wave) {
  if (records.empty()) throw std::invalid_argument("make_sine_bandit_from_records: no records");
  int dim = 0;
  for (const auto& r : records) {
    for (const int l : r.labels) {
      if (l >= num_actions) {
        throw std::invalid_argument("make_sine_bandit_from_records: label outside action range");
      }
    }
    if (!r.features.empty()) dim = std::max(dim, r.features.back().first + 1);
  }
  dim = std::max(dim, 1);

  const int n = static_cast<int>(records.size());
  const std::size_t cells = static_cast<std::size_t>(n) * num_actions;
  std::vector<std::uint8_t> positive(cells, 0);
  for (int s = 0; s < n; ++s) {
    for (const int l : records[s].labels) positive[static_cast<std::size_t>(s) * num_actions + l] = 1;
  }

  Rng rng(mix_seed(wave.seed, 0x5EEDULL));
  std::vector<double> amplitude(cells);
  std::vector<double> frequency(cells);
  for (std::size_t i = 0; i < cells; ++i) {
    amplitude[i] = rng.uniform(wave.amplitude_lo, wave.amplitude_hi);
    frequency[i] = rng.uniform(wave.frequency_lo, wave.frequency_hi);
  }

  Population pop(std::vector<double>(n, 1.0 / n), densify(records, dim), num_actions);
  return SineBanditEnv(std::move(pop), std::move(positive), std::move(amplitude),
                       std::move(frequency), wave.base, wave.noise_scale,
                       wave.positive_pair_rate, wave.positive_value_lo, wave.positive_value_hi,
                       wave.num_intervals, wave.seed);
}

// ---------------------------------------------------------------------------
// Synthetic ratings

SyntheticRatingsEnv::SyntheticRatingsEnv(const SyntheticRatingsConfig& config)
    : config_(config),
      pop_(
          [&] {
            if (config.num_users < 1 || config.num_genres < 1 || config.num_intervals < 1) {
              throw std::invalid_argument("SyntheticRatingsEnv: bad dimensions");
            }
            Rng rng(mix_seed(config.seed, 0x4A7EULL));
            const int latent = std::min(8, std::max(1, config.feature_dim));
            std::vector<std::vector<double>> features(config.num_users,
                                                      std::vector<double>(config.feature_dim));
            for (auto& f : features) {
              for (int j = 0; j < config.feature_dim; ++j) {
                f[j] = j < latent ? rng.normal() / std::sqrt(static_cast<double>(latent))
                                  : 0.3 * rng.normal();
              }
            }
            return Population(std::vector<double>(config.num_users, 1.0 / config.num_users),
                              std::move(features), config.num_genres);
          }()) {
  Rng rng(mix_seed(config.seed, 0x4A7FULL));
  const int latent = std::min(8, std::max(1, config_.feature_dim));
  const std::size_t cells =
      static_cast<std::size_t>(config_.num_users) * config_.num_genres;
  mean_.resize(cells);
  phase_.resize(cells);
  cycles_.resize(cells);
  std::vector<std::vector<double>> genre_dirs(config_.num_genres, std::vector<double>(latent));
  for (auto& g : genre_dirs) {
    for (double& v : g) v = rng.normal();
  }
  for (int u = 0; u < config_.num_users; ++u) {
    const auto feat = pop_.features(u);
    for (int g = 0; g < config_.num_genres; ++g) {
      double affinity = 0.0;
      for (int j = 0; j < latent; ++j) affinity += feat[j] * genre_dirs[g][j];
      const std::size_t i = static_cast<std::size_t>(u) * config_.num_genres + g;
      mean_[i] = 2.75 + 1.25 * std::tanh(affinity);
      phase_[i] = rng.uniform(0.0, 2.0 * M_PI);
      cycles_[i] = rng.uniform(0.5, 2.0);
    }
  }
}

RewardTable SyntheticRatingsEnv::reward_at(int k) const {
  if (k < 0 || k >= config_.num_intervals) {
    throw std::invalid_argument("reward_at: interval out of range");
  }
  RewardTable table(config_.num_users, config_.num_genres);
  const double denom = std::max(1, config_.num_intervals - 1);
  for (int u = 0; u < config_.num_users; ++u) {
    for (int g = 0; g < config_.num_genres; ++g) {
      const std::size_t i = static_cast<std::size_t>(u) * config_.num_genres + g;
      const double wave =
          config_.drift * std::sin(2.0 * M_PI * cycles_[i] * k / denom + phase_[i]);
      table.at(u, g) = std::clamp(mean_[i] + wave, 0.0, 5.0);
    }
  }
  return table;
}

IntervalDataset SyntheticRatingsEnv::sample(int k, const Policy& policy, int n, Rng& rng) const {
  IntervalDataset out = sample_dataset(pop_, policy, reward_at(k), k, n, rng);
  if (config_.noise_scale > 0.0) {
    for (auto& x : out.samples) x.reward += config_.noise_scale * rng.uniform();
  }
  return out;
}

SyntheticRatingsEnv make_synthetic_ratings(int num_users, int num_genres, int num_intervals,
                                           std::uint64_t seed) {
  SyntheticRatingsConfig config;
  config.num_users = num_users;
  config.num_genres = num_genres;
  config.num_intervals = num_intervals;
  config.seed = seed;
  return SyntheticRatingsEnv(config);
}

SyntheticRatingsEnv make_synthetic_ratings(const SyntheticRatingsConfig& config) {
  return SyntheticRatingsEnv(config);
}

// ---------------------------------------------------------------------------
// Binary-tree MDP

TreeMdpEnv::TreeMdpEnv(const TreeMdpConfig& config) : config_(config) {
  if (config_.horizon < 1) throw std::invalid_argument("TreeMdpEnv: horizon must be >= 1");
  if (config_.horizon > 20) throw std::invalid_argument("TreeMdpEnv: horizon too deep");
  if (config_.num_intervals < 1) throw std::invalid_argument("TreeMdpEnv: bad interval count");
  num_states_ = (1 << config_.horizon) - 1;
  if (config_.frequency_hi < 0.0) {
    config_.frequency_hi = M_PI / std::max(1, config_.num_intervals - 1);
  }

  Rng rng(mix_seed(config_.seed, 0x7EEEULL));
  const std::size_t cells = static_cast<std::size_t>(num_states_) * 2;
  mu_.resize(cells);
  frequency_.resize(cells);
  for (std::size_t i = 0; i < cells; ++i) {
    mu_[i] = rng.uniform();
    frequency_[i] = rng.uniform(config_.frequency_lo, config_.frequency_hi);
  }
  initial_dist_.assign(num_states_, 0.0);
  initial_dist_[0] = 1.0;
}

RewardTable TreeMdpEnv::reward_at(int k) const {
  if (k < 0 || k >= config_.num_intervals) {
    throw std::invalid_argument("reward_at: interval out of range");
  }
  RewardTable table(num_states_, 2);
  for (int s = 0; s < num_states_; ++s) {
    for (int a = 0; a < 2; ++a) {
      const std::size_t i = index(s, a);
      table.at(s, a) = mu_[i] + config_.amplitude * std::sin(k * frequency_[i]);
    }
  }
  return table;
}

TrajectoryDataset TreeMdpEnv::sample_trajectories(int k, const Policy& behavior, int n,
                                                  Rng& rng) const {
  if (n < 1) throw std::invalid_argument("sample_trajectories: n must be >= 1");
  if (behavior.num_contexts() != num_states_ || behavior.num_actions() != 2) {
    throw std::invalid_argument("sample_trajectories: policy shape mismatch");
  }
  const RewardTable rewards = reward_at(k);
  TrajectoryDataset out;
  out.interval = k;
  out.horizon = config_.horizon;
  out.trajectories.resize(n);
  for (auto& tau : out.trajectories) {
    tau.steps.reserve(config_.horizon);
    int s = root_state();
    for (int h = 0; h < config_.horizon; ++h) {
      const int a = rng.categorical(behavior.row(s));
      double r = rewards.at(s, a);
      if (config_.noise_scale > 0.0) r += config_.noise_scale * rng.uniform();
      tau.steps.push_back({s, a, r, behavior.prob(s, a)});
      s = child(s, a);
    }
  }
  return out;
}

Policy TreeMdpEnv::target_policy(double temperature) const {
  // Time-averaged mean reward, including the mean of the sampling noise.
  const int total = config_.num_intervals;
  std::vector<double> mean(mu_.size());
  for (int s = 0; s < num_states_; ++s) {
    for (int a = 0; a < 2; ++a) {
      const std::size_t i = index(s, a);
      double sine_sum = 0.0;
      for (int k = 0; k < total; ++k) sine_sum += std::sin(k * frequency_[i]);
      mean[i] = mu_[i] + config_.amplitude * sine_sum / total + 0.5 * config_.noise_scale;
    }
  }
  // Optimal values bottom-up: leaves are ordered after all internal states.
  std::vector<double> q(mu_.size());
  RewardTable scores(num_states_, 2);
  for (int s = num_states_ - 1; s >= 0; --s) {
    for (int a = 0; a < 2; ++a) {
      const int next = child(s, a);
      double v_next = 0.0;
      if (next < num_states_) v_next = std::max(q[index(next, 0)], q[index(next, 1)]);
      q[index(s, a)] = mean[index(s, a)] + v_next;
      scores.at(s, a) = q[index(s, a)];
    }
  }
  return softmax_policy(scores, temperature);
}

double TreeMdpEnv::true_value(int k, const Policy& target) const {
  const RewardTable rewards = reward_at(k);
  std::vector<double> v(num_states_, 0.0);
  for (int s = num_states_ - 1; s >= 0; --s) {
    double value = 0.0;
    for (int a = 0; a < 2; ++a) {
      const int next = child(s, a);
      const double v_next = next < num_states_ ? v[next] : 0.0;
      value += target.prob(s, a) * (rewards.at(s, a) + v_next);
    }
    v[s] = value;
  }
  return v[root_state()];
}

TreeMdpEnv make_tree_mdp(const TreeMdpConfig& config) { return TreeMdpEnv(config); }

}  // namespace nsope
