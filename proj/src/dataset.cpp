#include "otf/dataset.hpp"

#include <string>
#include <unordered_set>

#include "otf/error.hpp"

namespace otf {

void StrokeSketch::validate() const {
  if (points.size() < 2) throw InvalidInput("stroke sketch needs at least 2 points");
  if (!points.back().pen_lift) throw InvalidInput("stroke sketch must end with a pen lift");
  for (const auto& p : points) {
    if (!(p.x >= 0.0 && p.x <= 1.0 && p.y >= 0.0 && p.y <= 1.0)) {
      throw InvalidInput("stroke point outside the unit square");
    }
  }
}

std::size_t StrokeSketch::stroke_count() const {
  std::size_t count = 0;
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (points[i].pen_lift || i + 1 == points.size()) ++count;
  }
  return count;
}

void Dataset::validate() const {
  if (feature_dim == 0) throw InvalidInput("dataset feature_dim must be positive");
  if (steps == 0) throw InvalidInput("dataset T must be positive");
  std::unordered_set<std::string> photo_ids;
  for (const auto& photo : photos) {
    if (photo.features.size() != feature_dim) {
      throw InvalidInput("photo '" + photo.id + "' has " + std::to_string(photo.features.size()) +
                         " features, expected " + std::to_string(feature_dim));
    }
    require_finite(photo.features, "photo features");
    if (!photo_ids.insert(photo.id).second) throw InvalidInput("duplicate photo id '" + photo.id + "'");
  }
  std::unordered_set<std::string> episode_ids;
  for (const auto* split : {&train, &test}) {
    for (const auto& episode : *split) {
      if (!episode_ids.insert(episode.id).second) {
        throw InvalidInput("duplicate episode id '" + episode.id + "'");
      }
      if (!photo_ids.contains(episode.paired_photo_id)) {
        throw InvalidInput("episode '" + episode.id + "' references unknown photo '" +
                           episode.paired_photo_id + "'");
      }
      if (episode.states.size() != steps) {
        throw InvalidInput("episode '" + episode.id + "' has " +
                           std::to_string(episode.states.size()) + " states, expected " +
                           std::to_string(steps));
      }
      for (const auto& state : episode.states) {
        if (state.size() != feature_dim) {
          throw InvalidInput("episode '" + episode.id + "' has a state of wrong dimension");
        }
        require_finite(state, "episode state");
      }
      if (episode.strokes) episode.strokes->validate();
    }
  }
}

const SketchEpisode& Dataset::find_episode(const std::string& id) const {
  for (const auto* split : {&train, &test}) {
    for (const auto& episode : *split) {
      if (episode.id == id) return episode;
    }
  }
  throw InvalidInput("unknown episode id '" + id + "'");
}

}  // namespace otf
