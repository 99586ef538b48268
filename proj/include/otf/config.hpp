#pragma once

#include <cstdint>
#include <string>
#include <string_view>

#include <json.hpp>

#include "otf/embedding.hpp"
#include "otf/pretrain.hpp"
#include "otf/rewards.hpp"
#include "otf/sim.hpp"
#include "otf/trainer.hpp"

namespace otf {

enum class EvalSplit { kTest, kTrain };

struct EvalConfig {
  DistanceMetric distance = DistanceMetric::kEuclidean;
  EvalSplit split = EvalSplit::kTest;
  std::uint64_t seed = 0;  // stroke shuffling
};

std::string_view to_string(DistanceMetric metric);
DistanceMetric parse_distance(std::string_view name);

struct RunConfig {
  SimConfig sim;
  PretrainConfig pretrain;
  RewardConfig reward;
  TrainConfig train;
  EvalConfig eval;

  void validate() const;
};

// Strict parse: missing keys keep their defaults, unknown keys and wrongly
// typed values throw InvalidInput naming the key. train.metric follows
// eval.distance.
RunConfig parse_run_config(const nlohmann::ordered_json& document);
RunConfig parse_run_config_text(std::string_view text);
RunConfig load_run_config(const std::string& path);

// Every key with its current value, in documentation order.
nlohmann::ordered_json to_json(const RunConfig& config);

}  // namespace otf
