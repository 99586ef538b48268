#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "otf/embedding.hpp"

namespace otf {

// One pen sample in the unit square. `pen_lift` marks the last point of a
// stroke.
struct StrokePoint {
  double x = 0.0;
  double y = 0.0;
  bool pen_lift = false;

  bool operator==(const StrokePoint&) const = default;
};

// Ordered pen samples; at least 2 points and the last one lifts the pen.
struct StrokeSketch {
  std::vector<StrokePoint> points;

  void validate() const;
  // Number of maximal pen-down runs.
  std::size_t stroke_count() const;

  bool operator==(const StrokeSketch&) const = default;
};

struct Photo {
  std::string id;
  Vector features;
};

// One drawing session: T backbone-feature states linked to the paired photo.
struct SketchEpisode {
  std::string id;
  std::string paired_photo_id;
  std::vector<Vector> states;
  std::optional<StrokeSketch> strokes;
  // 1-based step that received an injected outlier stroke, if any.
  std::optional<std::size_t> outlier_step;

  std::size_t steps() const { return states.size(); }
};

struct Dataset {
  std::size_t feature_dim = 0;
  std::size_t steps = 0;  // T
  std::vector<Photo> photos;
  std::vector<SketchEpisode> train;
  std::vector<SketchEpisode> test;

  // Checks dimensions, step counts and photo references.
  void validate() const;
  const SketchEpisode& find_episode(const std::string& id) const;
};

}  // namespace otf
