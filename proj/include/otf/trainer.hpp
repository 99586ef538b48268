#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "otf/adam.hpp"
#include "otf/dataset.hpp"
#include "otf/evaluation.hpp"
#include "otf/policy.hpp"
#include "otf/rewards.hpp"

namespace otf {

class Rng;

struct RolloutStep {
  Vector state;
  Vector raw_action;
  double old_log_prob = 0.0;
  double reward = 0.0;
  std::size_t rank = 0;
};

// Steps of several episodes collected under one policy snapshot. Episode e
// occupies steps [episode_offsets[e], episode_offsets[e + 1]).
struct RolloutBatch {
  std::vector<RolloutStep> steps;
  std::vector<std::size_t> episode_offsets{0};

  std::size_t size() const { return steps.size(); }
  std::size_t episode_count() const { return episode_offsets.size() - 1; }
  double mean_reward() const;
};

enum class Objective { kPpoClip, kVanillaPg };

std::string_view to_string(Objective objective);
Objective parse_objective(std::string_view name);

struct TrainConfig {
  std::size_t epochs = 2000;
  std::size_t episodes_per_batch = 16;
  std::size_t inner_epochs = 4;
  double clip_epsilon = 0.2;
  double lr_initial = 1e-3;
  double lr_final = 1e-4;
  // Epochs 1..lr_drop_epoch use lr_initial, later epochs lr_final.
  std::size_t lr_drop_epoch = 100;
  Objective objective = Objective::kPpoClip;
  AdamConfig adam;
  double sigma_init = 1.0;
  double sigma_min = kSigmaMin;
  DistanceMetric metric = DistanceMetric::kEuclidean;
  std::uint64_t seed = 0;

  void validate() const;
  double learning_rate(std::size_t epoch) const;
};

// Plays every episode once under `policy`: samples an action per step, ranks
// the gallery against the normalized action, scores the step with `reward`
// and stores the log-density of the raw action under `policy`.
RolloutBatch collect_rollouts(const GaussianPolicy& policy,
                              std::span<const SketchEpisode> episodes, const Gallery& gallery,
                              const RewardConfig& reward, Rng& rng,
                              DistanceMetric metric = DistanceMetric::kEuclidean);

inline constexpr double kLogRatioClamp = 30.0;

// exp(log pi(a|s) - old_log_prob), with the log-ratio clamped to +-30.
double importance_ratio(const GaussianPolicy& policy, std::span<const double> state,
                        std::span<const double> raw_action, double old_log_prob);

struct ObjectiveValue {
  double objective = 0.0;
  PolicyGradient gradient;
};

// mean_t min(m_t R_t, clip(m_t, 1 - eps, 1 + eps) R_t) and its exact gradient;
// steps where the clipped term is selected and strictly smaller contribute no
// gradient.
ObjectiveValue ppo_clip_objective(const RolloutBatch& batch, const GaussianPolicy& policy,
                                  double clip_epsilon);

// mean_t log pi(a_t|s_t) R_t and its gradient.
ObjectiveValue vanilla_pg_objective(const RolloutBatch& batch, const GaussianPolicy& policy);

// Number of scalar parameters in `policy` (weight, bias, sigma).
std::size_t parameter_count(const GaussianPolicy& policy);

// One Adam ascent step along `ascent_direction`, then sigma is clamped to
// `sigma_min`.
void adam_step(GaussianPolicy& policy, const PolicyGradient& ascent_direction,
               AdamState& state, double lr, double sigma_min = kSigmaMin);

struct EpochRecord {
  std::size_t epoch = 0;
  double batch_reward = 0.0;  // mean reward of the collected batch; 0 at epoch 0
  EvalSummary eval;           // deterministic evaluation after this epoch
};

struct TrainResult {
  GaussianPolicy policy;
  std::vector<EpochRecord> history;  // epochs + 1 rows, starting with epoch 0
};

// Fine-tunes a Gaussian policy whose mean head starts as a copy of
// `pretrained_head`. Each epoch collects `episodes_per_batch` episodes under
// the current (old) policy and applies `inner_epochs` ascent steps of the
// configured objective on that batch. The gallery is read-only.
TrainResult train(const TrainConfig& config, const LinearHead& pretrained_head,
                  std::span<const SketchEpisode> train_episodes, const Gallery& gallery,
                  const RewardConfig& reward, std::span<const SketchEpisode> eval_episodes);

}  // namespace otf
