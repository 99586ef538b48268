#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "otf/dataset.hpp"
#include "otf/embedding.hpp"

namespace otf {

class Rng;

enum class SimMode { kLatent, kGeometric };

std::string_view to_string(SimMode mode);
SimMode parse_sim_mode(std::string_view name);

struct SimConfig {
  SimMode mode = SimMode::kLatent;
  std::size_t num_photos = 100;  // M
  std::size_t n_train = 200;
  std::size_t n_test = 50;
  std::size_t steps = 20;        // T
  std::size_t feature_dim = 32;  // latent mode; geometric uses (grid/pool)^2
  double noise_scale = 0.5;
  // Dimension of the nuisance subspace shared by all partial-sketch noise;
  // 0 draws isotropic noise over all feature dimensions.
  std::size_t noise_rank = 2;
  double outlier_prob = 0.0;
  double outlier_magnitude = 0.8;
  std::size_t grid_size = 32;
  std::size_t pool_size = 4;
  std::size_t strokes_per_sketch = 4;
  std::size_t points_per_stroke = 6;
  double jitter = 0.02;
  std::uint64_t seed = 7;

  void validate() const;
};

// Square occupancy grid, row-major, row = y and column = x.
class BinaryGrid {
 public:
  explicit BinaryGrid(std::size_t size) : size_(size), cells_(size * size, 0) {}

  std::size_t size() const { return size_; }
  bool at(std::size_t row, std::size_t col) const { return cells_[row * size_ + col] != 0; }
  void set(std::size_t row, std::size_t col) { cells_[row * size_ + col] = 1; }
  std::size_t count() const;

  bool operator==(const BinaryGrid&) const = default;

 private:
  std::size_t size_;
  std::vector<unsigned char> cells_;
};

// Renders the first K points of `sketch`: 1-cell Bresenham segments between
// consecutive retained points, skipping the jump after a pen lift. Points map
// to cells by rounding x * (grid_size - 1), y * (grid_size - 1).
BinaryGrid rasterize(const StrokeSketch& sketch, std::size_t K, std::size_t grid_size);

// Non-overlapping pool_size x pool_size average pooling, flattened row-major,
// then l2-normalized.
NormalizedVector grid_features(const BinaryGrid& grid, std::size_t pool_size);

// Prefix length K_t = t * floor(N / T) for t < T and K_T = N.
std::size_t prefix_length(std::size_t step, std::size_t steps, std::size_t points);

// Features of the T progressive renders of `sketch`.
std::vector<Vector> render_episode_states(const StrokeSketch& sketch, std::size_t steps,
                                          std::size_t grid_size, std::size_t pool_size);

struct ShuffleResult {
  StrokeSketch sketch;
  bool shuffled = false;  // false when the sketch has a single stroke
};

// Uniformly permutes the strokes (maximal pen-down runs) of `sketch`.
ShuffleResult shuffle_strokes(const StrokeSketch& sketch, Rng& rng);

// Copy of a stroke-carrying episode with its strokes shuffled and its states
// re-rendered on the given grid.
SketchEpisode shuffle_episode_strokes(const SketchEpisode& episode, std::size_t grid_size,
                                      std::size_t pool_size, Rng& rng);

// Synthetic photos plus train/test episodes. Generation is a pure function of
// the config: each photo, episode and the nuisance basis draw from their own
// stream seeded by derive_seed(config.seed, tag).
Dataset gen_synthetic_dataset(const SimConfig& config);

// Uniform random direction on the unit sphere.
Vector random_unit_vector(std::size_t dim, Rng& rng);

}  // namespace otf
