#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>

#include "otf/embedding.hpp"
#include "otf/ranking.hpp"

namespace otf {

enum class RewardScheme { kInverseRank, kInverseSqrtRank, kNegRank, kThreshold };

std::string_view to_string(RewardScheme scheme);
// Accepts "inverse_rank", "inverse_sqrt_rank", "neg_rank", "threshold".
RewardScheme parse_reward_scheme(std::string_view name);

struct RewardConfig {
  RewardScheme scheme = RewardScheme::kInverseRank;
  std::size_t threshold_q = 1;  // used by kThreshold only
  double gamma1 = 1.0;
  double gamma2 = 1e-4;
  // Replace each per-step reward by the undiscounted sum of itself and all
  // later rewards in the episode.
  bool reward_to_go = false;

  void validate() const;
  // Short label such as "threshold(5)" for reports.
  std::string label() const;
};

// Local reward for a 1-based rank under `config`'s scheme.
double local_reward(std::size_t rank, const RewardConfig& config);

// -max(0, tau_curr - tau_prev), where tau_prev = tau(L_{t-1}, L_t) and
// tau_curr = tau(L_t, L_{t+1}).
double global_reward(double tau_prev, double tau_curr);

// Kendall-Tau distances between consecutive rank lists; T - 1 values.
Vector successive_kendall_tau(std::span<const RankList> rank_lists);

// Per-step rewards gamma1 * local + gamma2 * global. The global term is zero at
// the first and the last step.
Vector episode_rewards(std::span<const RankList> rank_lists,
                       std::span<const std::size_t> ranks, const RewardConfig& config);

// Same, with the consecutive Kendall-Tau distances already computed.
Vector episode_rewards_from_taus(std::span<const double> taus,
                                 std::span<const std::size_t> ranks,
                                 const RewardConfig& config);

}  // namespace otf
