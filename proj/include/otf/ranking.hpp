#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "otf/embedding.hpp"

namespace otf {

// Gallery indices ordered by ascending distance to a query. Equidistant rows
// keep ascending index order.
using RankList = std::vector<std::size_t>;

RankList rank_list(std::span<const double> query, const Gallery& gallery,
                   DistanceMetric metric = DistanceMetric::kEuclidean);

// 1-based rank of gallery row `target`:
//   1 + #{strictly closer rows} + #{equidistant rows with a lower index}.
std::size_t rank_of_index(std::span<const double> query, const Gallery& gallery,
                          std::size_t target,
                          DistanceMetric metric = DistanceMetric::kEuclidean);

std::size_t rank_of(std::span<const double> query, const Gallery& gallery,
                    std::string_view target_id,
                    DistanceMetric metric = DistanceMetric::kEuclidean);

// Number of item pairs ordered differently by the two lists, counted as
// inversions with a merge sort in O(M log M). Both lists must be permutations
// of the same set of indices.
std::uint64_t count_discordant_pairs(std::span<const std::size_t> first,
                                     std::span<const std::size_t> second);

// Discordant pairs / (M (M - 1) / 2); 0 for identical lists, 1 for reversed.
double kendall_tau_normalized(std::span<const std::size_t> first,
                              std::span<const std::size_t> second);

// Fraction of ranks <= q.
double acc_at_q(std::span<const std::size_t> ranks, std::size_t q);

// 100 (M - rank) / (M - 1): rank 1 maps to 100, rank M to 0.
double ranking_percentile(std::size_t rank, std::size_t gallery_size);

// Per-step retrieval record of one episode.
struct EpisodeRankTrace {
  std::vector<std::size_t> ranks;  // 1-based
  Vector percentiles;              // [0, 100]

  static EpisodeRankTrace from_ranks(std::vector<std::size_t> ranks,
                                     std::size_t gallery_size);
  std::size_t steps() const { return ranks.size(); }
};

struct EpisodeCurveSummary {
  double mean_percentile_area = 0.0;    // m@A, in [0, 100]
  double mean_inverse_rank_area = 0.0;  // m@B, in (0, 1]
};

// Mean over episodes of the per-step averages of RP_t and 1/rank_t. All traces
// must have the same length.
EpisodeCurveSummary mean_episode_curves(std::span<const EpisodeRankTrace> traces);

// Per-step means across episodes of RP_t and 1/rank_t.
struct StepCurves {
  Vector mean_percentile;
  Vector mean_inverse_rank;
};
StepCurves step_curves(std::span<const EpisodeRankTrace> traces);

// sum_{t>=2} |min(RP_t - RP_{t-1}, 0)| / (T - 1). Requires T >= 2.
double stroke_backlash_index(std::span<const double> percentiles);

}  // namespace otf
