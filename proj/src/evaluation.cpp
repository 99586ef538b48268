#include "otf/evaluation.hpp"

#include "otf/error.hpp"

namespace otf {

EpisodeEvaluation evaluate_episode(const LinearHead& query_head, const SketchEpisode& episode,
                                   const Gallery& gallery, const RewardConfig& reward,
                                   DistanceMetric metric) {
  if (episode.states.empty()) throw InvalidInput("episode '" + episode.id + "' has no states");
  const std::size_t target = gallery.index_of(episode.paired_photo_id);
  EpisodeEvaluation result;
  result.episode_id = episode.id;
  std::vector<std::size_t> ranks;
  for (const auto& state : episode.states) {
    const Vector query = embed(query_head, state);
    RankList list = rank_list(query, gallery, metric);
    std::size_t position = 0;
    while (list[position] != target) ++position;
    ranks.push_back(position + 1);
    result.rank_lists.push_back(std::move(list));
  }
  result.taus = successive_kendall_tau(result.rank_lists);
  result.rewards = episode_rewards_from_taus(result.taus, ranks, reward);
  result.trace = EpisodeRankTrace::from_ranks(std::move(ranks), gallery.size());
  return result;
}

EvalSummary summarize(std::span<const EpisodeEvaluation> evaluations) {
  if (evaluations.empty()) throw InvalidInput("nothing to summarize");
  EvalSummary summary;
  summary.episodes = evaluations.size();
  std::vector<EpisodeRankTrace> traces;
  std::vector<std::size_t> final_ranks;
  double reward_total = 0.0;
  std::size_t reward_count = 0;
  for (const auto& e : evaluations) {
    traces.push_back(e.trace);
    final_ranks.push_back(e.trace.ranks.back());
    for (double r : e.rewards) reward_total += r;
    reward_count += e.rewards.size();
  }
  const auto areas = mean_episode_curves(traces);
  summary.m_at_a = areas.mean_percentile_area;
  summary.m_at_b = areas.mean_inverse_rank_area;
  summary.mean_reward = reward_total / static_cast<double>(reward_count);
  summary.acc1 = acc_at_q(final_ranks, 1);
  summary.acc5 = acc_at_q(final_ranks, 5);
  summary.acc10 = acc_at_q(final_ranks, 10);
  summary.curves = step_curves(traces);
  if (summary.curves.mean_percentile.size() >= 2) {
    summary.sbi = stroke_backlash_index(summary.curves.mean_percentile);
    for (const auto& t : traces) summary.episode_sbi += stroke_backlash_index(t.percentiles);
    summary.episode_sbi /= static_cast<double>(traces.size());
  }
  return summary;
}

EvalSummary evaluate(const LinearHead& query_head, std::span<const SketchEpisode> episodes,
                     const Gallery& gallery, const RewardConfig& reward, DistanceMetric metric) {
  std::vector<EpisodeEvaluation> evaluations;
  evaluations.reserve(episodes.size());
  for (const auto& episode : episodes) {
    evaluations.push_back(evaluate_episode(query_head, episode, gallery, reward, metric));
  }
  return summarize(evaluations);
}

}  // namespace otf
