#pragma once

#include <cstddef>
#include <cstdint>
#include <span>

#include "otf/embedding.hpp"

namespace otf {

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  void validate() const;
};

// Moment accumulators for a flat parameter vector. Parameter groups are
// addressed by offset so one state can serve several tensors.
class AdamState {
 public:
  AdamState() = default;
  AdamState(std::size_t parameter_count, AdamConfig config);

  std::size_t parameter_count() const { return first_moment_.size(); }
  std::uint64_t step_count() const { return steps_; }
  const AdamConfig& config() const { return config_; }
  std::span<const double> first_moment() const { return first_moment_; }
  std::span<const double> second_moment() const { return second_moment_; }

  // Starts a new step; must be called once before updating the groups of that
  // step.
  void begin_step() { ++steps_; }

  // Bias-corrected Adam update of `params`, whose moments live at
  // [offset, offset + params.size()). `direction` is added (ascent) when
  // `ascent` is true and subtracted otherwise.
  void update(std::span<double> params, std::span<const double> direction,
              std::size_t offset, double lr, bool ascent);

 private:
  AdamConfig config_;
  Vector first_moment_;
  Vector second_moment_;
  std::uint64_t steps_ = 0;
};

}  // namespace otf
