#include "otf/rewards.hpp"

#include <cmath>

#include "otf/error.hpp"

namespace otf {

std::string_view to_string(RewardScheme scheme) {
  switch (scheme) {
    case RewardScheme::kInverseRank:
      return "inverse_rank";
    case RewardScheme::kInverseSqrtRank:
      return "inverse_sqrt_rank";
    case RewardScheme::kNegRank:
      return "neg_rank";
    case RewardScheme::kThreshold:
      return "threshold";
  }
  return "unknown";
}

RewardScheme parse_reward_scheme(std::string_view name) {
  if (name == "inverse_rank") return RewardScheme::kInverseRank;
  if (name == "inverse_sqrt_rank") return RewardScheme::kInverseSqrtRank;
  if (name == "neg_rank") return RewardScheme::kNegRank;
  if (name == "threshold") return RewardScheme::kThreshold;
  throw InvalidInput("unknown reward scheme '" + std::string(name) + "'");
}

void RewardConfig::validate() const {
  if (!(gamma1 >= 0.0) || !std::isfinite(gamma1)) throw InvalidInput("reward.gamma1 must be >= 0");
  if (!(gamma2 >= 0.0) || !std::isfinite(gamma2)) throw InvalidInput("reward.gamma2 must be >= 0");
  if (scheme == RewardScheme::kThreshold && threshold_q < 1) {
    throw InvalidInput("reward.threshold_q must be >= 1");
  }
}

std::string RewardConfig::label() const {
  if (scheme == RewardScheme::kThreshold) {
    return "threshold(" + std::to_string(threshold_q) + ")";
  }
  return std::string(to_string(scheme));
}

double local_reward(std::size_t rank, const RewardConfig& config) {
  if (rank < 1) throw InvalidInput("rank must be >= 1");
  const double r = static_cast<double>(rank);
  switch (config.scheme) {
    case RewardScheme::kInverseRank:
      return 1.0 / r;
    case RewardScheme::kInverseSqrtRank:
      return 1.0 / std::sqrt(r);
    case RewardScheme::kNegRank:
      return -r;
    case RewardScheme::kThreshold:
      return rank <= config.threshold_q ? 1.0 : 0.0;
  }
  throw InvalidInput("unknown reward scheme");
}

double global_reward(double tau_prev, double tau_curr) {
  const auto in_unit = [](double tau) { return tau >= 0.0 && tau <= 1.0; };
  if (!in_unit(tau_prev) || !in_unit(tau_curr)) {
    throw InvalidInput("Kendall-Tau distance outside [0, 1]");
  }
  return -std::max(0.0, tau_curr - tau_prev);
}

Vector successive_kendall_tau(std::span<const RankList> rank_lists) {
  Vector taus;
  if (rank_lists.size() < 2) return taus;
  taus.reserve(rank_lists.size() - 1);
  for (std::size_t t = 1; t < rank_lists.size(); ++t) {
    taus.push_back(kendall_tau_normalized(rank_lists[t - 1], rank_lists[t]));
  }
  return taus;
}

Vector episode_rewards_from_taus(std::span<const double> taus,
                                 std::span<const std::size_t> ranks,
                                 const RewardConfig& config) {
  config.validate();
  const std::size_t steps = ranks.size();
  if (steps == 0) throw InvalidInput("episode has no steps");
  if (taus.size() + 1 != steps) {
    throw InvalidInput("expected " + std::to_string(steps - 1) +
                       " consecutive Kendall-Tau values, got " + std::to_string(taus.size()));
  }
  Vector rewards(steps);
  for (std::size_t t = 0; t < steps; ++t) {
    double global = 0.0;
    // Interior steps only: taus[t - 1] = tau(L_{t-1}, L_t), taus[t] = tau(L_t, L_{t+1}).
    if (t > 0 && t + 1 < steps) global = global_reward(taus[t - 1], taus[t]);
    rewards[t] = config.gamma1 * local_reward(ranks[t], config);
    if (config.gamma2 != 0.0) rewards[t] += config.gamma2 * global;
  }
  if (config.reward_to_go) {
    for (std::size_t t = steps - 1; t-- > 0;) rewards[t] += rewards[t + 1];
  }
  return rewards;
}

Vector episode_rewards(std::span<const RankList> rank_lists,
                       std::span<const std::size_t> ranks, const RewardConfig& config) {
  if (rank_lists.size() != ranks.size()) {
    throw InvalidInput("rank list count does not match rank count");
  }
  if (config.gamma2 == 0.0 && ranks.size() >= 1) {
    // The global term vanishes; skip the Kendall-Tau work.
    return episode_rewards_from_taus(Vector(ranks.size() - 1, 0.0), ranks, config);
  }
  return episode_rewards_from_taus(successive_kendall_tau(rank_lists), ranks, config);
}

}  // namespace otf
