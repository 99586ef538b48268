#include "otf/ranking.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "otf/error.hpp"

namespace otf {

namespace {

Vector distances_to(std::span<const double> query, const Gallery& gallery,
                    DistanceMetric metric) {
  if (query.size() != gallery.dim()) {
    throw InvalidInput("query dimension " + std::to_string(query.size()) +
                       " does not match gallery dimension " + std::to_string(gallery.dim()));
  }
  Vector d(gallery.size());
  for (std::size_t i = 0; i < gallery.size(); ++i) d[i] = distance(metric, query, gallery.row(i));
  return d;
}

// Counts inversions of `seq[lo, hi)` while sorting it; `scratch` is reused.
std::uint64_t merge_count(std::vector<std::size_t>& seq, std::vector<std::size_t>& scratch,
                          std::size_t lo, std::size_t hi) {
  if (hi - lo < 2) return 0;
  const std::size_t mid = lo + (hi - lo) / 2;
  std::uint64_t count = merge_count(seq, scratch, lo, mid) + merge_count(seq, scratch, mid, hi);
  std::size_t i = lo;
  std::size_t j = mid;
  std::size_t k = lo;
  while (i < mid && j < hi) {
    if (seq[j] < seq[i]) {
      count += mid - i;
      scratch[k++] = seq[j++];
    } else {
      scratch[k++] = seq[i++];
    }
  }
  while (i < mid) scratch[k++] = seq[i++];
  while (j < hi) scratch[k++] = seq[j++];
  std::copy(scratch.begin() + static_cast<std::ptrdiff_t>(lo),
            scratch.begin() + static_cast<std::ptrdiff_t>(hi),
            seq.begin() + static_cast<std::ptrdiff_t>(lo));
  return count;
}

}  // namespace

RankList rank_list(std::span<const double> query, const Gallery& gallery,
                   DistanceMetric metric) {
  const Vector d = distances_to(query, gallery, metric);
  RankList order(gallery.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&d](std::size_t a, std::size_t b) {
    return d[a] < d[b] || (d[a] == d[b] && a < b);
  });
  return order;
}

std::size_t rank_of_index(std::span<const double> query, const Gallery& gallery,
                          std::size_t target, DistanceMetric metric) {
  if (target >= gallery.size()) throw InvalidInput("target index out of range");
  const Vector d = distances_to(query, gallery, metric);
  std::size_t rank = 1;
  for (std::size_t j = 0; j < d.size(); ++j) {
    if (d[j] < d[target] || (d[j] == d[target] && j < target)) ++rank;
  }
  return rank;
}

std::size_t rank_of(std::span<const double> query, const Gallery& gallery,
                    std::string_view target_id, DistanceMetric metric) {
  return rank_of_index(query, gallery, gallery.index_of(target_id), metric);
}

std::uint64_t count_discordant_pairs(std::span<const std::size_t> first,
                                     std::span<const std::size_t> second) {
  if (first.size() != second.size()) throw InvalidInput("rank lists differ in length");
  const std::size_t n = first.size();
  if (n == 0) return 0;
  const std::size_t max_index = *std::max_element(first.begin(), first.end());
  // position_in_second[item] + 1, zero meaning absent.
  std::vector<std::size_t> position(max_index + 1, 0);
  for (std::size_t k = 0; k < n; ++k) {
    if (first[k] <= max_index) {
      if (position[first[k]] != 0) throw InvalidInput("rank list contains a duplicate index");
      position[first[k]] = 1;
    }
  }
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t item = second[k];
    if (item > max_index || position[item] != 1) {
      throw InvalidInput("rank lists are not permutations of the same index set");
    }
    position[item] = k + 2;
  }
  std::vector<std::size_t> seq(n);
  for (std::size_t k = 0; k < n; ++k) seq[k] = position[first[k]] - 2;
  std::vector<std::size_t> scratch(n);
  return merge_count(seq, scratch, 0, n);
}

double kendall_tau_normalized(std::span<const std::size_t> first,
                              std::span<const std::size_t> second) {
  if (first.size() < 2) throw InvalidInput("Kendall-Tau distance needs at least 2 items");
  const double n = static_cast<double>(first.size());
  return static_cast<double>(count_discordant_pairs(first, second)) / (n * (n - 1.0) / 2.0);
}

double acc_at_q(std::span<const std::size_t> ranks, std::size_t q) {
  if (ranks.empty()) throw InvalidInput("acc@q of an empty rank list");
  if (q < 1) throw InvalidInput("acc@q requires q >= 1");
  const auto hits = std::count_if(ranks.begin(), ranks.end(),
                                  [q](std::size_t r) { return r <= q; });
  return static_cast<double>(hits) / static_cast<double>(ranks.size());
}

double ranking_percentile(std::size_t rank, std::size_t gallery_size) {
  if (gallery_size < 2) throw InvalidInput("ranking percentile needs a gallery of >= 2");
  if (rank < 1 || rank > gallery_size) {
    throw InvalidInput("rank " + std::to_string(rank) + " outside [1, " +
                       std::to_string(gallery_size) + "]");
  }
  return 100.0 * static_cast<double>(gallery_size - rank) /
         static_cast<double>(gallery_size - 1);
}

EpisodeRankTrace EpisodeRankTrace::from_ranks(std::vector<std::size_t> ranks,
                                              std::size_t gallery_size) {
  EpisodeRankTrace trace;
  trace.percentiles.reserve(ranks.size());
  for (std::size_t r : ranks) trace.percentiles.push_back(ranking_percentile(r, gallery_size));
  trace.ranks = std::move(ranks);
  return trace;
}

StepCurves step_curves(std::span<const EpisodeRankTrace> traces) {
  if (traces.empty()) throw InvalidInput("no episode traces");
  const std::size_t steps = traces.front().steps();
  if (steps == 0) throw InvalidInput("episode trace has no steps");
  StepCurves curves{Vector(steps, 0.0), Vector(steps, 0.0)};
  for (const auto& trace : traces) {
    if (trace.steps() != steps || trace.percentiles.size() != steps) {
      throw InvalidInput("episode traces have different lengths");
    }
    for (std::size_t t = 0; t < steps; ++t) {
      curves.mean_percentile[t] += trace.percentiles[t];
      curves.mean_inverse_rank[t] += 1.0 / static_cast<double>(trace.ranks[t]);
    }
  }
  const double n = static_cast<double>(traces.size());
  for (std::size_t t = 0; t < steps; ++t) {
    curves.mean_percentile[t] /= n;
    curves.mean_inverse_rank[t] /= n;
  }
  return curves;
}

EpisodeCurveSummary mean_episode_curves(std::span<const EpisodeRankTrace> traces) {
  // The mean of per-episode step averages equals the step average of the
  // per-step means when every trace has the same length.
  const StepCurves curves = step_curves(traces);
  const double steps = static_cast<double>(curves.mean_percentile.size());
  EpisodeCurveSummary summary;
  for (double v : curves.mean_percentile) summary.mean_percentile_area += v;
  for (double v : curves.mean_inverse_rank) summary.mean_inverse_rank_area += v;
  summary.mean_percentile_area /= steps;
  summary.mean_inverse_rank_area /= steps;
  return summary;
}

double stroke_backlash_index(std::span<const double> percentiles) {
  if (percentiles.size() < 2) throw InvalidInput("stroke-backlash index needs T >= 2");
  double total = 0.0;
  for (std::size_t t = 1; t < percentiles.size(); ++t) {
    total += std::abs(std::min(percentiles[t] - percentiles[t - 1], 0.0));
  }
  return total / static_cast<double>(percentiles.size() - 1);
}

}  // namespace otf
