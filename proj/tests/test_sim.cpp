#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "otf/error.hpp"
#include "otf/pretrain.hpp"
#include "otf/ranking.hpp"
#include "otf/rng.hpp"
#include "otf/sim.hpp"

using namespace otf;

namespace {

StrokeSketch random_sketch(Rng& rng, std::size_t strokes, std::size_t points) {
  StrokeSketch s;
  for (std::size_t k = 0; k < strokes; ++k) {
    for (std::size_t p = 0; p < points; ++p) s.points.push_back({rng.uniform(), rng.uniform(), p + 1 == points});
  }
  return s;
}

using Segment = std::pair<std::pair<double, double>, std::pair<double, double>>;

std::multiset<Segment> segments(const StrokeSketch& s) {
  std::multiset<Segment> out;
  for (std::size_t i = 1; i < s.points.size(); ++i) {
    if (s.points[i - 1].pen_lift) continue;
    out.insert({{s.points[i - 1].x, s.points[i - 1].y}, {s.points[i].x, s.points[i].y}});
  }
  return out;
}

long cell(double v, std::size_t g) { return std::lround(v * double(g - 1)); }

}  // namespace

TEST(Rasterize, EmptyPrefixIsBlank) {
  Rng rng(1);
  EXPECT_EQ(rasterize(random_sketch(rng, 2, 4), 0, 16).count(), 0u);
}

TEST(Rasterize, DiagonalOnFourGrid) {
  const StrokeSketch s{{{0.0, 0.0, false}, {1.0, 1.0, true}}};
  const BinaryGrid g = rasterize(s, 2, 4);
  EXPECT_EQ(g.count(), 4u);
  for (std::size_t i = 0; i < 4; ++i) EXPECT_TRUE(g.at(i, i));
}

TEST(Rasterize, RowIsYAndColumnIsX) {
  const StrokeSketch s{{{0.0, 1.0, false}, {1.0, 1.0, true}}};
  const BinaryGrid g = rasterize(s, 2, 5);
  for (std::size_t c = 0; c < 5; ++c) EXPECT_TRUE(g.at(4, c));
  EXPECT_EQ(g.count(), 5u);
}

TEST(Rasterize, SingleSegmentsFollowTheIdealLine) {
  Rng rng(2);
  for (int trial = 0; trial < 500; ++trial) {
    const std::size_t gs = 2 + rng.below(40);
    const StrokeSketch s{{{rng.uniform(), rng.uniform(), false}, {rng.uniform(), rng.uniform(), true}}};
    const long x0 = cell(s.points[0].x, gs), y0 = cell(s.points[0].y, gs);
    const long x1 = cell(s.points[1].x, gs), y1 = cell(s.points[1].y, gs);
    const BinaryGrid g = rasterize(s, 2, gs);
    const long dx = x1 - x0, dy = y1 - y0;
    const long major = std::max(std::labs(dx), std::labs(dy));
    ASSERT_EQ(g.count(), static_cast<std::size_t>(major + 1));
    ASSERT_TRUE(g.at(y0, x0));
    ASSERT_TRUE(g.at(y1, x1));
    for (std::size_t r = 0; r < gs; ++r) {
      for (std::size_t c = 0; c < gs; ++c) {
        if (!g.at(r, c)) continue;
        // Distance along the minor axis from the exact line stays within half a cell.
        if (std::labs(dx) >= std::labs(dy)) {
          const double ideal = dx == 0 ? y0 : y0 + double(dy) * double(long(c) - x0) / double(dx);
          ASSERT_LE(std::abs(double(r) - ideal), 0.5 + 1e-12);
        } else {
          const double ideal = x0 + double(dx) * double(long(r) - y0) / double(dy);
          ASSERT_LE(std::abs(double(c) - ideal), 0.5 + 1e-12);
        }
      }
    }
  }
}

TEST(Rasterize, PenLiftBreaksTheLine) {
  const StrokeSketch s{{{0.0, 0.0, false}, {0.0, 1.0, true}, {1.0, 0.0, false}, {1.0, 1.0, true}}};
  const BinaryGrid g = rasterize(s, 4, 8);
  EXPECT_EQ(g.count(), 16u);
  for (std::size_t c = 1; c < 7; ++c) EXPECT_FALSE(g.at(0, c));
}

TEST(Rasterize, PureAndMonotoneInPrefix) {
  Rng rng(3);
  for (int trial = 0; trial < 100; ++trial) {
    const StrokeSketch s = random_sketch(rng, 1 + rng.below(4), 2 + rng.below(6));
    const StrokeSketch copy = s;
    EXPECT_EQ(rasterize(s, s.points.size(), 24), rasterize(copy, copy.points.size(), 24));
    BinaryGrid prev = rasterize(s, 0, 24);
    for (std::size_t k = 1; k <= s.points.size(); ++k) {
      const BinaryGrid next = rasterize(s, k, 24);
      for (std::size_t r = 0; r < 24; ++r) {
        for (std::size_t c = 0; c < 24; ++c) {
          if (prev.at(r, c)) {
            ASSERT_TRUE(next.at(r, c));
          }
        }
      }
      prev = next;
    }
  }
}

TEST(Rasterize, Errors) {
  const StrokeSketch s{{{0.0, 0.0, false}, {1.0, 1.0, true}}};
  EXPECT_THROW(rasterize(s, 3, 4), InvalidInput);
  EXPECT_THROW(rasterize(s, 2, 0), InvalidInput);
}

TEST(GridFeatures, EmptyFullAndCheckerboard) {
  const auto empty = grid_features(BinaryGrid(8), 4);
  EXPECT_TRUE(empty.degenerate);
  EXPECT_EQ(empty.values[0], 1.0);

  BinaryGrid full(8);
  for (std::size_t r = 0; r < 8; ++r) {
    for (std::size_t c = 0; c < 8; ++c) full.set(r, c);
  }
  for (double v : grid_features(full, 2).values) EXPECT_NEAR(v, 1.0 / 4.0, 1e-15);  // 16 blocks

  BinaryGrid checker(4);
  for (std::size_t r = 0; r < 4; ++r) {
    for (std::size_t c = 0; c < 4; ++c) {
      if ((r + c) % 2 == 0) checker.set(r, c);
    }
  }
  // Every 2x2 block holds two cells: 0.5 each, and the four 0.5s already have unit norm.
  for (double v : grid_features(checker, 2).values) EXPECT_DOUBLE_EQ(v, 0.5);
  EXPECT_THROW(grid_features(checker, 3), InvalidInput);
}

TEST(PrefixLength, FloorSpacingWithFullFinalStep) {
  EXPECT_EQ(prefix_length(1, 20, 24), 1u);
  EXPECT_EQ(prefix_length(19, 20, 24), 19u);
  EXPECT_EQ(prefix_length(20, 20, 24), 24u);
  EXPECT_EQ(prefix_length(3, 4, 30), 21u);
  EXPECT_EQ(prefix_length(1, 1, 5), 5u);
  EXPECT_THROW(prefix_length(0, 4, 30), InvalidInput);
  EXPECT_THROW(prefix_length(5, 4, 30), InvalidInput);
}

TEST(ShuffleStrokes, SingleStrokeUnchanged) {
  Rng rng(4);
  const StrokeSketch s = random_sketch(rng, 1, 5);
  const ShuffleResult r = shuffle_strokes(s, rng);
  EXPECT_FALSE(r.shuffled);
  EXPECT_EQ(r.sketch, s);
}

TEST(ShuffleStrokes, TwoStrokesGiveBothOrders) {
  Rng gen(5);
  const StrokeSketch s = random_sketch(gen, 2, 3);
  const StrokeSketch swapped{{s.points[3], s.points[4], s.points[5], s.points[0], s.points[1], s.points[2]}};
  bool saw_same = false, saw_swapped = false;
  Rng rng(6);
  for (int i = 0; i < 100; ++i) {
    const ShuffleResult r = shuffle_strokes(s, rng);
    ASSERT_TRUE(r.sketch == s || r.sketch == swapped);
    saw_same = saw_same || r.sketch == s;
    saw_swapped = saw_swapped || r.sketch == swapped;
    EXPECT_EQ(rasterize(r.sketch, 6, 16), rasterize(s, 6, 16));
  }
  EXPECT_TRUE(saw_same);
  EXPECT_TRUE(saw_swapped);
}

TEST(ShuffleStrokes, PreservesSegmentsAndFullRender) {
  Rng rng(7);
  for (int trial = 0; trial < 300; ++trial) {
    const StrokeSketch s = random_sketch(rng, 2 + rng.below(5), 2 + rng.below(5));
    const ShuffleResult r = shuffle_strokes(s, rng);
    EXPECT_NO_THROW(r.sketch.validate());
    EXPECT_EQ(segments(r.sketch), segments(s));
    EXPECT_EQ(rasterize(r.sketch, r.sketch.points.size(), 32), rasterize(s, s.points.size(), 32));
  }
}

TEST(StrokeSketch, Validation) {
  EXPECT_THROW((StrokeSketch{{{0.1, 0.1, true}}}).validate(), InvalidInput);
  EXPECT_THROW((StrokeSketch{{{0.1, 0.1, false}, {0.2, 0.2, false}}}).validate(), InvalidInput);
  EXPECT_THROW((StrokeSketch{{{0.1, 0.1, false}, {1.2, 0.2, true}}}).validate(), InvalidInput);
  EXPECT_EQ((StrokeSketch{{{0.1, 0.1, true}, {0.2, 0.2, false}, {0.3, 0.3, true}}}).stroke_count(), 2u);
}

namespace {

SimConfig small_latent() {
  SimConfig c;
  c.num_photos = 20;
  c.n_train = 30;
  c.n_test = 10;
  c.steps = 8;
  c.feature_dim = 10;
  return c;
}

}  // namespace

TEST(GenSynthetic, NoiselessFinalStateIsTheTarget) {
  SimConfig c = small_latent();
  c.noise_scale = 0.0;
  const Dataset d = gen_synthetic_dataset(c);
  const LinearHead id{Matrix::identity(c.feature_dim), Vector(c.feature_dim, 0.0)};
  const Gallery g = build_gallery(id, d.photos);
  for (const auto& e : d.train) {
    const Vector& target = d.photos[g.index_of(e.paired_photo_id)].features;
    for (std::size_t k = 0; k < target.size(); ++k) EXPECT_NEAR(e.states.back()[k], target[k], 1e-12);
    EXPECT_EQ(rank_of(embed(id, e.states.back()), g, e.paired_photo_id), 1u);
  }
}

TEST(GenSynthetic, CertainOutlierPerturbsExactlyOneStep) {
  SimConfig clean = small_latent();
  SimConfig noisy = clean;
  noisy.outlier_prob = 1.0;
  const Dataset a = gen_synthetic_dataset(clean);
  const Dataset b = gen_synthetic_dataset(noisy);
  for (std::size_t e = 0; e < a.train.size(); ++e) {
    ASSERT_TRUE(b.train[e].outlier_step.has_value());
    EXPECT_FALSE(a.train[e].outlier_step.has_value());
    std::size_t changed = 0, where = 0;
    for (std::size_t t = 0; t < clean.steps; ++t) {
      if (a.train[e].states[t] != b.train[e].states[t]) {
        ++changed;
        where = t + 1;
      }
    }
    EXPECT_EQ(changed, 1u);
    EXPECT_EQ(where, *b.train[e].outlier_step);
    EXPECT_GE(where, clean.steps / 2);
    EXPECT_LT(where, clean.steps);
  }
}

TEST(GenSynthetic, DeterministicInSeed) {
  const SimConfig c = small_latent();
  const Dataset a = gen_synthetic_dataset(c);
  const Dataset b = gen_synthetic_dataset(c);
  ASSERT_EQ(a.train.size(), b.train.size());
  for (std::size_t e = 0; e < a.train.size(); ++e) EXPECT_EQ(a.train[e].states, b.train[e].states);
  for (std::size_t i = 0; i < a.photos.size(); ++i) EXPECT_EQ(a.photos[i].features, b.photos[i].features);
  SimConfig other = c;
  other.seed = c.seed + 1;
  EXPECT_NE(gen_synthetic_dataset(other).photos[0].features, a.photos[0].features);
}

TEST(GenSynthetic, MeanDistanceToTargetShrinksOverSteps) {
  SimConfig c;
  c.num_photos = 50;
  c.n_train = 1000;
  c.n_test = 0;
  c.steps = 10;
  const Dataset d = gen_synthetic_dataset(c);
  std::map<std::string, const Vector*> photo;
  for (const auto& p : d.photos) photo[p.id] = &p.features;
  Vector mean(c.steps, 0.0);
  for (const auto& e : d.train) {
    for (std::size_t t = 0; t < c.steps; ++t) mean[t] += euclidean_distance(e.states[t], *photo[e.paired_photo_id]);
  }
  for (std::size_t t = 1; t < c.steps; ++t) EXPECT_LE(mean[t], mean[t - 1] + 1e-6 * d.train.size());
}

TEST(GenSynthetic, IsotropicNoiseOption) {
  SimConfig c = small_latent();
  c.noise_rank = 0;
  const Dataset d = gen_synthetic_dataset(c);
  EXPECT_EQ(d.train.size(), 30u);
  c.noise_rank = 11;
  EXPECT_THROW(gen_synthetic_dataset(c), InvalidInput);
}

TEST(GenSynthetic, GeometricModeRendersStrokes) {
  SimConfig c;
  c.mode = SimMode::kGeometric;
  c.num_photos = 8;
  c.n_train = 6;
  c.n_test = 4;
  c.steps = 5;
  const Dataset d = gen_synthetic_dataset(c);
  EXPECT_EQ(d.feature_dim, 64u);
  EXPECT_NO_THROW(d.validate());
  for (const auto& e : d.test) {
    ASSERT_TRUE(e.strokes.has_value());
    EXPECT_EQ(e.states.size(), 5u);
    EXPECT_EQ(e.states.back(), render_episode_states(*e.strokes, 5, 32, 4).back());
  }
  PretrainConfig pc;
  pc.embed_dim = 8;
  EXPECT_NO_THROW(build_gallery(initial_head(pc, d.feature_dim), d.photos));
}

TEST(GenSynthetic, ShuffledEpisodeKeepsFinalState) {
  SimConfig c;
  c.mode = SimMode::kGeometric;
  c.num_photos = 6;
  c.n_train = 0;
  c.n_test = 10;
  const Dataset d = gen_synthetic_dataset(c);
  Rng rng(8);
  for (const auto& e : d.test) {
    const SketchEpisode s = shuffle_episode_strokes(e, c.grid_size, c.pool_size, rng);
    EXPECT_EQ(s.states.back(), e.states.back());
  }
}

TEST(SimConfig, Validation) {
  SimConfig c;
  c.num_photos = 1;
  EXPECT_THROW(c.validate(), InvalidInput);
  c = SimConfig{};
  c.outlier_prob = 1.5;
  EXPECT_THROW(c.validate(), InvalidInput);
  c = SimConfig{};
  c.mode = SimMode::kGeometric;
  c.pool_size = 5;
  EXPECT_THROW(c.validate(), InvalidInput);
  EXPECT_EQ(parse_sim_mode("geometric"), SimMode::kGeometric);
  EXPECT_THROW(parse_sim_mode("photo"), InvalidInput);
}
