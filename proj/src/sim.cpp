#include "otf/sim.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <numbers>
#include <string>

#include "otf/error.hpp"
#include "otf/rng.hpp"

namespace otf {

namespace {

std::size_t to_cell(double coord, std::size_t grid_size) {
  return static_cast<std::size_t>(std::lround(coord * static_cast<double>(grid_size - 1)));
}

void draw_line(BinaryGrid& grid, long x0, long y0, long x1, long y1) {
  const long dx = std::labs(x1 - x0);
  const long dy = -std::labs(y1 - y0);
  const long sx = x0 < x1 ? 1 : -1;
  const long sy = y0 < y1 ? 1 : -1;
  long err = dx + dy;
  while (true) {
    grid.set(static_cast<std::size_t>(y0), static_cast<std::size_t>(x0));
    if (x0 == x1 && y0 == y1) break;
    const long e2 = 2 * err;
    if (e2 >= dy) {
      err += dy;
      x0 += sx;
    }
    if (e2 <= dx) {
      err += dx;
      y0 += sy;
    }
  }
}

// Splits a sketch into its strokes; each stroke ends with a pen lift.
std::vector<std::vector<StrokePoint>> split_strokes(const StrokeSketch& sketch) {
  std::vector<std::vector<StrokePoint>> strokes;
  std::vector<StrokePoint> current;
  for (const auto& p : sketch.points) {
    current.push_back(p);
    if (p.pen_lift) {
      strokes.push_back(std::move(current));
      current.clear();
    }
  }
  if (!current.empty()) strokes.push_back(std::move(current));
  return strokes;
}

double clamp_unit(double v) { return std::clamp(v, 0.0, 1.0); }

// Random-walk polyline shape used as a geometric-mode photo.
StrokeSketch random_shape(const SimConfig& config, Rng& rng) {
  StrokeSketch shape;
  for (std::size_t s = 0; s < config.strokes_per_sketch; ++s) {
    double x = rng.uniform(0.1, 0.9);
    double y = rng.uniform(0.1, 0.9);
    double heading = rng.uniform(0.0, 2.0 * std::numbers::pi);
    for (std::size_t p = 0; p < config.points_per_stroke; ++p) {
      shape.points.push_back({x, y, p + 1 == config.points_per_stroke});
      heading += rng.uniform(-1.0, 1.0);
      const double step = rng.uniform(0.08, 0.2);
      x = clamp_unit(x + step * std::cos(heading));
      y = clamp_unit(y + step * std::sin(heading));
    }
  }
  return shape;
}

StrokeSketch jittered_copy(const StrokeSketch& shape, double jitter, Rng& rng) {
  StrokeSketch copy = shape;
  for (auto& p : copy.points) {
    p.x = clamp_unit(p.x + rng.uniform(-jitter, jitter));
    p.y = clamp_unit(p.y + rng.uniform(-jitter, jitter));
  }
  return copy;
}

// Orthonormal columns spanning a random `rank`-dimensional subspace,
// returned as `rank` vectors of length `dim`.
std::vector<Vector> random_orthonormal_basis(std::size_t dim, std::size_t rank, Rng& rng) {
  std::vector<Vector> basis;
  while (basis.size() < rank) {
    Vector v(dim);
    for (double& x : v) x = rng.normal();
    for (const auto& b : basis) {
      double dot = 0.0;
      for (std::size_t i = 0; i < dim; ++i) dot += v[i] * b[i];
      for (std::size_t i = 0; i < dim; ++i) v[i] -= dot * b[i];
    }
    const double norm = l2_norm(v);
    if (norm < 1e-8) continue;
    for (double& x : v) x /= norm;
    basis.push_back(std::move(v));
  }
  return basis;
}

Vector nuisance_direction(std::size_t dim, const std::vector<Vector>& basis, Rng& rng) {
  if (basis.empty()) return random_unit_vector(dim, rng);
  Vector v(dim, 0.0);
  for (const auto& b : basis) {
    const double c = rng.normal();
    for (std::size_t i = 0; i < dim; ++i) v[i] += c * b[i];
  }
  return l2_normalize(v).values;
}

std::string numbered(std::string_view prefix, std::size_t index) {
  std::string digits = std::to_string(index);
  if (digits.size() < 4) digits.insert(0, 4 - digits.size(), '0');
  return std::string(prefix) + digits;
}

SketchEpisode latent_episode(const SimConfig& config, const std::vector<Photo>& photos,
                             const std::vector<Vector>& basis, std::string id, Rng& rng) {
  SketchEpisode episode;
  episode.id = std::move(id);
  const std::size_t target = rng.below(photos.size());
  episode.paired_photo_id = photos[target].id;
  const Vector& z = photos[target].features;
  const std::size_t dim = config.feature_dim;
  const double steps = static_cast<double>(config.steps);
  for (std::size_t t = 1; t <= config.steps; ++t) {
    const double alpha = static_cast<double>(t) / steps;
    const Vector u = nuisance_direction(dim, basis, rng);
    Vector state(dim);
    for (std::size_t i = 0; i < dim; ++i) {
      state[i] = alpha * z[i] + (1.0 - alpha) * config.noise_scale * u[i];
    }
    episode.states.push_back(l2_normalize(state).values);
  }
  const bool inject = rng.uniform() < config.outlier_prob;
  if (inject && config.steps >= 2) {
    const std::size_t lo = std::max<std::size_t>(1, config.steps / 2);
    const std::size_t hi = config.steps - 1;
    const std::size_t step = lo + rng.below(hi - lo + 1);
    std::size_t distractor = rng.below(photos.size() - 1);
    if (distractor >= target) ++distractor;
    const Vector& zd = photos[distractor].features;
    Vector& state = episode.states[step - 1];
    const double w = config.outlier_magnitude;
    for (std::size_t i = 0; i < dim; ++i) state[i] = (1.0 - w) * state[i] + w * zd[i];
    state = l2_normalize(state).values;
    episode.outlier_step = step;
  }
  return episode;
}

}  // namespace

std::string_view to_string(SimMode mode) {
  return mode == SimMode::kLatent ? "latent" : "geometric";
}

SimMode parse_sim_mode(std::string_view name) {
  if (name == "latent") return SimMode::kLatent;
  if (name == "geometric") return SimMode::kGeometric;
  throw InvalidInput("unknown sim mode '" + std::string(name) + "'");
}

void SimConfig::validate() const {
  if (num_photos < 2) throw InvalidInput("sim.num_photos must be >= 2");
  if (steps < 1) throw InvalidInput("sim.T must be >= 1");
  if (!(outlier_prob >= 0.0 && outlier_prob <= 1.0)) throw InvalidInput("sim.outlier_prob must be in [0, 1]");
  if (!(outlier_magnitude >= 0.0 && outlier_magnitude <= 1.0)) {
    throw InvalidInput("sim.outlier_magnitude must be in [0, 1]");
  }
  if (!(noise_scale >= 0.0) || !std::isfinite(noise_scale)) throw InvalidInput("sim.noise_scale must be >= 0");
  if (mode == SimMode::kLatent) {
    if (feature_dim < 1) throw InvalidInput("sim.feature_dim must be >= 1");
    if (noise_rank > feature_dim) throw InvalidInput("sim.noise_rank exceeds sim.feature_dim");
  } else {
    if (grid_size < 1 || pool_size < 1 || grid_size % pool_size != 0) {
      throw InvalidInput("sim.grid_size must be a positive multiple of sim.pool_size");
    }
    if (strokes_per_sketch < 1 || points_per_stroke < 2) {
      throw InvalidInput("geometric sketches need >= 1 stroke of >= 2 points");
    }
    if (!(jitter >= 0.0)) throw InvalidInput("sim.jitter must be >= 0");
  }
}

std::size_t BinaryGrid::count() const {
  return static_cast<std::size_t>(std::count(cells_.begin(), cells_.end(), 1));
}

BinaryGrid rasterize(const StrokeSketch& sketch, std::size_t K, std::size_t grid_size) {
  if (grid_size < 1) throw InvalidInput("grid_size must be >= 1");
  if (K > sketch.points.size()) throw InvalidInput("prefix length exceeds sketch length");
  BinaryGrid grid(grid_size);
  for (std::size_t i = 1; i < K; ++i) {
    const auto& a = sketch.points[i - 1];
    if (a.pen_lift) continue;
    const auto& b = sketch.points[i];
    draw_line(grid, static_cast<long>(to_cell(a.x, grid_size)),
              static_cast<long>(to_cell(a.y, grid_size)),
              static_cast<long>(to_cell(b.x, grid_size)),
              static_cast<long>(to_cell(b.y, grid_size)));
  }
  return grid;
}

NormalizedVector grid_features(const BinaryGrid& grid, std::size_t pool_size) {
  if (pool_size < 1 || grid.size() % pool_size != 0) {
    throw InvalidInput("grid size must be divisible by pool size");
  }
  const std::size_t blocks = grid.size() / pool_size;
  Vector pooled(blocks * blocks, 0.0);
  const double area = static_cast<double>(pool_size * pool_size);
  for (std::size_t br = 0; br < blocks; ++br) {
    for (std::size_t bc = 0; bc < blocks; ++bc) {
      std::size_t filled = 0;
      for (std::size_t r = 0; r < pool_size; ++r) {
        for (std::size_t c = 0; c < pool_size; ++c) {
          filled += grid.at(br * pool_size + r, bc * pool_size + c) ? 1 : 0;
        }
      }
      pooled[br * blocks + bc] = static_cast<double>(filled) / area;
    }
  }
  return l2_normalize(pooled);
}

std::size_t prefix_length(std::size_t step, std::size_t steps, std::size_t points) {
  if (step < 1 || step > steps) throw InvalidInput("render step out of range");
  if (step == steps) return points;
  return std::min(points, step * (points / steps));
}

std::vector<Vector> render_episode_states(const StrokeSketch& sketch, std::size_t steps,
                                          std::size_t grid_size, std::size_t pool_size) {
  std::vector<Vector> states;
  states.reserve(steps);
  for (std::size_t t = 1; t <= steps; ++t) {
    const std::size_t K = prefix_length(t, steps, sketch.points.size());
    states.push_back(grid_features(rasterize(sketch, K, grid_size), pool_size).values);
  }
  return states;
}

ShuffleResult shuffle_strokes(const StrokeSketch& sketch, Rng& rng) {
  auto strokes = split_strokes(sketch);
  if (strokes.size() < 2) return {sketch, false};
  for (std::size_t i = strokes.size() - 1; i > 0; --i) {
    const std::size_t j = rng.below(i + 1);
    std::swap(strokes[i], strokes[j]);
  }
  ShuffleResult result;
  result.shuffled = true;
  for (auto& stroke : strokes) {
    for (auto& p : stroke) result.sketch.points.push_back(p);
  }
  // A trailing stroke without a pen lift only occurs in malformed input.
  result.sketch.points.back().pen_lift = true;
  return result;
}

Vector random_unit_vector(std::size_t dim, Rng& rng) {
  while (true) {
    Vector v(dim);
    for (double& x : v) x = rng.normal();
    if (l2_norm(v) > 1e-8) return l2_normalize(v).values;
  }
}

SketchEpisode shuffle_episode_strokes(const SketchEpisode& episode, std::size_t grid_size,
                                      std::size_t pool_size, Rng& rng) {
  if (!episode.strokes) throw InvalidInput("episode '" + episode.id + "' has no strokes");
  SketchEpisode out = episode;
  out.strokes = shuffle_strokes(*episode.strokes, rng).sketch;
  out.states = render_episode_states(*out.strokes, episode.steps(), grid_size, pool_size);
  return out;
}

Dataset gen_synthetic_dataset(const SimConfig& config) {
  config.validate();
  Dataset data;
  data.steps = config.steps;
  std::vector<StrokeSketch> shapes;
  Rng photo_rng(derive_seed(config.seed, "photos"));
  if (config.mode == SimMode::kLatent) {
    data.feature_dim = config.feature_dim;
    for (std::size_t i = 0; i < config.num_photos; ++i) {
      data.photos.push_back({numbered("photo_", i), random_unit_vector(config.feature_dim, photo_rng)});
    }
  } else {
    const std::size_t blocks = config.grid_size / config.pool_size;
    data.feature_dim = blocks * blocks;
    for (std::size_t i = 0; i < config.num_photos; ++i) {
      StrokeSketch shape = random_shape(config, photo_rng);
      Vector features = grid_features(rasterize(shape, shape.points.size(), config.grid_size),
                                      config.pool_size)
                            .values;
      data.photos.push_back({numbered("photo_", i), std::move(features)});
      shapes.push_back(std::move(shape));
    }
  }

  std::vector<Vector> basis;
  if (config.mode == SimMode::kLatent && config.noise_rank > 0) {
    Rng basis_rng(derive_seed(config.seed, "nuisance"));
    basis = random_orthonormal_basis(config.feature_dim, config.noise_rank, basis_rng);
  }

  const std::size_t total = config.n_train + config.n_test;
  for (std::size_t e = 0; e < total; ++e) {
    Rng rng(derive_seed(config.seed, std::to_string(e)));
    const bool is_train = e < config.n_train;
    std::string id = is_train ? numbered("train_", e) : numbered("test_", e - config.n_train);
    SketchEpisode episode;
    if (config.mode == SimMode::kLatent) {
      episode = latent_episode(config, data.photos, basis, std::move(id), rng);
    } else {
      const std::size_t target = rng.below(config.num_photos);
      episode.id = std::move(id);
      episode.paired_photo_id = data.photos[target].id;
      StrokeSketch sketch = jittered_copy(shapes[target], config.jitter, rng);
      episode.states = render_episode_states(sketch, config.steps, config.grid_size, config.pool_size);
      episode.strokes = std::move(sketch);
    }
    (is_train ? data.train : data.test).push_back(std::move(episode));
  }
  return data;
}

}  // namespace otf
