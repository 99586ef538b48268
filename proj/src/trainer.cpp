#include "otf/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "otf/error.hpp"
#include "otf/rng.hpp"

namespace otf {

double RolloutBatch::mean_reward() const {
  if (steps.empty()) return 0.0;
  double total = 0.0;
  for (const auto& s : steps) total += s.reward;
  return total / static_cast<double>(steps.size());
}

std::string_view to_string(Objective objective) {
  return objective == Objective::kPpoClip ? "ppo_clip" : "vanilla_pg";
}

Objective parse_objective(std::string_view name) {
  if (name == "ppo_clip") return Objective::kPpoClip;
  if (name == "vanilla_pg") return Objective::kVanillaPg;
  throw InvalidInput("unknown objective '" + std::string(name) + "'");
}

void TrainConfig::validate() const {
  if (episodes_per_batch < 1) throw InvalidInput("train.episodes_per_batch must be >= 1");
  if (inner_epochs < 1) throw InvalidInput("train.inner_epochs must be >= 1");
  if (!(clip_epsilon > 0.0 && clip_epsilon < 1.0)) throw InvalidInput("train.clip_epsilon must be in (0, 1)");
  if (!(lr_initial >= 0.0) || !(lr_final >= 0.0)) throw InvalidInput("train learning rates must be >= 0");
  if (!(sigma_min > 0.0)) throw InvalidInput("train.sigma_min must be > 0");
  if (!(sigma_init >= sigma_min)) throw InvalidInput("train.sigma_init must be >= train.sigma_min");
  adam.validate();
}

double TrainConfig::learning_rate(std::size_t epoch) const {
  return epoch <= lr_drop_epoch ? lr_initial : lr_final;
}

RolloutBatch collect_rollouts(const GaussianPolicy& policy,
                              std::span<const SketchEpisode> episodes, const Gallery& gallery,
                              const RewardConfig& reward, Rng& rng, DistanceMetric metric) {
  reward.validate();
  RolloutBatch batch;
  for (const auto& episode : episodes) {
    if (episode.states.empty()) throw InvalidInput("episode '" + episode.id + "' is empty");
    const std::size_t target = gallery.index_of(episode.paired_photo_id);
    std::vector<RankList> lists;
    std::vector<std::size_t> ranks;
    for (const auto& state : episode.states) {
      const SampledAction action = sample_action(policy, state, rng);
      RankList list = rank_list(action.normalized, gallery, metric);
      const auto it = std::find(list.begin(), list.end(), target);
      ranks.push_back(static_cast<std::size_t>(it - list.begin()) + 1);
      lists.push_back(std::move(list));
      RolloutStep step;
      step.state = state;
      step.old_log_prob = log_prob(policy, state, action.raw);
      step.raw_action = action.raw;
      step.rank = ranks.back();
      batch.steps.push_back(std::move(step));
    }
    const Vector rewards = episode_rewards(lists, ranks, reward);
    const std::size_t offset = batch.episode_offsets.back();
    for (std::size_t t = 0; t < rewards.size(); ++t) {
      if (!std::isfinite(rewards[t])) throw NumericError("non-finite reward");
      batch.steps[offset + t].reward = rewards[t];
    }
    batch.episode_offsets.push_back(batch.steps.size());
  }
  return batch;
}

namespace {

double clamped_log_ratio(double log_ratio, bool& clamped) {
  clamped = std::abs(log_ratio) > kLogRatioClamp;
  return std::clamp(log_ratio, -kLogRatioClamp, kLogRatioClamp);
}

}  // namespace

double importance_ratio(const GaussianPolicy& policy, std::span<const double> state,
                        std::span<const double> raw_action, double old_log_prob) {
  bool clamped = false;
  return std::exp(clamped_log_ratio(log_prob(policy, state, raw_action) - old_log_prob, clamped));
}

ObjectiveValue ppo_clip_objective(const RolloutBatch& batch, const GaussianPolicy& policy,
                                  double clip_epsilon) {
  if (batch.steps.empty()) throw InvalidInput("empty rollout batch");
  ObjectiveValue value{0.0, PolicyGradient::zeros_like(policy)};
  for (const auto& step : batch.steps) {
    bool clamped = false;
    const double ratio = std::exp(
        clamped_log_ratio(log_prob(policy, step.state, step.raw_action) - step.old_log_prob, clamped));
    const double unclipped = ratio * step.reward;
    const double clipped =
        std::clamp(ratio, 1.0 - clip_epsilon, 1.0 + clip_epsilon) * step.reward;
    value.objective += std::min(unclipped, clipped);
    // dm/dtheta = m dlog(pi)/dtheta on the unclipped branch.
    if (unclipped <= clipped && !clamped && step.reward != 0.0) {
      value.gradient.add_scaled(log_prob_grad(policy, step.state, step.raw_action),
                                step.reward * ratio);
    }
  }
  const double inv = 1.0 / static_cast<double>(batch.steps.size());
  value.objective *= inv;
  value.gradient.scale(inv);
  return value;
}

ObjectiveValue vanilla_pg_objective(const RolloutBatch& batch, const GaussianPolicy& policy) {
  if (batch.steps.empty()) throw InvalidInput("empty rollout batch");
  ObjectiveValue value{0.0, PolicyGradient::zeros_like(policy)};
  for (const auto& step : batch.steps) {
    value.objective += log_prob(policy, step.state, step.raw_action) * step.reward;
    if (step.reward != 0.0) {
      value.gradient.add_scaled(log_prob_grad(policy, step.state, step.raw_action), step.reward);
    }
  }
  const double inv = 1.0 / static_cast<double>(batch.steps.size());
  value.objective *= inv;
  value.gradient.scale(inv);
  return value;
}

std::size_t parameter_count(const GaussianPolicy& policy) {
  return policy.mean_head.weight.size() + policy.mean_head.bias.size() + policy.sigma.size();
}

void adam_step(GaussianPolicy& policy, const PolicyGradient& ascent_direction, AdamState& state,
               double lr, double sigma_min) {
  if (ascent_direction.d_weight.rows() != policy.mean_head.weight.rows() ||
      ascent_direction.d_weight.cols() != policy.mean_head.weight.cols() ||
      ascent_direction.d_bias.size() != policy.mean_head.bias.size() ||
      ascent_direction.d_sigma.size() != policy.sigma.size()) {
    throw InvalidInput("gradient shape does not match policy");
  }
  if (state.parameter_count() != parameter_count(policy)) {
    throw InvalidInput("optimizer state does not match policy");
  }
  const std::size_t weight_size = policy.mean_head.weight.size();
  const std::size_t bias_size = policy.mean_head.bias.size();
  state.begin_step();
  state.update(policy.mean_head.weight.flat(), ascent_direction.d_weight.flat(), 0, lr, true);
  state.update(policy.mean_head.bias, ascent_direction.d_bias, weight_size, lr, true);
  state.update(policy.sigma, ascent_direction.d_sigma, weight_size + bias_size, lr, true);
  policy.clamp_sigma(sigma_min);
  for (double v : policy.mean_head.weight.flat()) {
    if (!std::isfinite(v)) throw NumericError("policy weight became non-finite");
  }
}

TrainResult train(const TrainConfig& config, const LinearHead& pretrained_head,
                  std::span<const SketchEpisode> train_episodes, const Gallery& gallery,
                  const RewardConfig& reward, std::span<const SketchEpisode> eval_episodes) {
  config.validate();
  reward.validate();
  if (train_episodes.empty() && config.epochs > 0) throw InvalidInput("no training episodes");
  if (pretrained_head.out_dim() != gallery.dim()) {
    throw InvalidInput("head output dimension does not match the gallery");
  }
  for (const auto& episode : train_episodes) gallery.index_of(episode.paired_photo_id);

  TrainResult result{GaussianPolicy::from_head(pretrained_head, config.sigma_init), {}};
  GaussianPolicy& policy = result.policy;
  AdamState adam(parameter_count(policy), config.adam);
  Rng rng(derive_seed(config.seed, "train"));

  const auto record = [&](std::size_t epoch, double batch_reward) {
    EpochRecord row;
    row.epoch = epoch;
    row.batch_reward = batch_reward;
    if (!eval_episodes.empty()) {
      row.eval = evaluate(policy.mean_head, eval_episodes, gallery, reward, config.metric);
    }
    result.history.push_back(std::move(row));
  };
  record(0, 0.0);

  std::vector<std::size_t> queue;
  std::vector<SketchEpisode> batch_episodes;
  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    batch_episodes.clear();
    while (batch_episodes.size() < config.episodes_per_batch) {
      if (queue.empty()) {
        // Refill with a fresh permutation, consumed from the back.
        queue.resize(train_episodes.size());
        std::iota(queue.begin(), queue.end(), std::size_t{0});
        for (std::size_t i = queue.size() - 1; i > 0; --i) std::swap(queue[i], queue[rng.below(i + 1)]);
      }
      batch_episodes.push_back(train_episodes[queue.back()]);
      queue.pop_back();
    }
    const RolloutBatch batch =
        collect_rollouts(policy, batch_episodes, gallery, reward, rng, config.metric);
    const double lr = config.learning_rate(epoch);
    for (std::size_t k = 0; k < config.inner_epochs; ++k) {
      const ObjectiveValue value = config.objective == Objective::kPpoClip
                                       ? ppo_clip_objective(batch, policy, config.clip_epsilon)
                                       : vanilla_pg_objective(batch, policy);
      adam_step(policy, value.gradient, adam, lr, config.sigma_min);
    }
    record(epoch, batch.mean_reward());
  }
  return result;
}

}  // namespace otf
