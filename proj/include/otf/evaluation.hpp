#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "otf/dataset.hpp"
#include "otf/embedding.hpp"
#include "otf/ranking.hpp"
#include "otf/rewards.hpp"

namespace otf {

// Deterministic retrieval over one episode: the query at step t is
// embed(query_head, s_t), i.e. the normalized policy mean.
struct EpisodeEvaluation {
  std::string episode_id;
  EpisodeRankTrace trace;
  std::vector<RankList> rank_lists;
  Vector taus;     // tau(L_{t-1}, L_t), T - 1 values
  Vector rewards;  // per-step rewards under the evaluation reward config
};

EpisodeEvaluation evaluate_episode(const LinearHead& query_head, const SketchEpisode& episode,
                                   const Gallery& gallery, const RewardConfig& reward,
                                   DistanceMetric metric = DistanceMetric::kEuclidean);

struct EvalSummary {
  std::size_t episodes = 0;
  double mean_reward = 0.0;  // over all steps of all episodes
  double m_at_a = 0.0;
  double m_at_b = 0.0;
  // Accuracies use the final-step (complete sketch) rank.
  double acc1 = 0.0;
  double acc5 = 0.0;
  double acc10 = 0.0;
  // Stroke-backlash index of the mean percentile curve.
  double sbi = 0.0;
  // Mean of the per-episode stroke-backlash indices.
  double episode_sbi = 0.0;
  StepCurves curves;
};

EvalSummary summarize(std::span<const EpisodeEvaluation> evaluations);

EvalSummary evaluate(const LinearHead& query_head, std::span<const SketchEpisode> episodes,
                     const Gallery& gallery, const RewardConfig& reward,
                     DistanceMetric metric = DistanceMetric::kEuclidean);

}  // namespace otf
