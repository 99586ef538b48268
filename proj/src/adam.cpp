#include "otf/adam.hpp"

#include <cmath>

#include "otf/error.hpp"

namespace otf {

void AdamConfig::validate() const {
  if (!(beta1 >= 0.0 && beta1 < 1.0)) throw InvalidInput("adam beta1 must be in [0, 1)");
  if (!(beta2 >= 0.0 && beta2 < 1.0)) throw InvalidInput("adam beta2 must be in [0, 1)");
  if (!(eps > 0.0)) throw InvalidInput("adam eps must be positive");
}

AdamState::AdamState(std::size_t parameter_count, AdamConfig config)
    : config_(config),
      first_moment_(parameter_count, 0.0),
      second_moment_(parameter_count, 0.0) {
  config_.validate();
}

void AdamState::update(std::span<double> params, std::span<const double> direction,
                       std::size_t offset, double lr, bool ascent) {
  if (params.size() != direction.size()) throw InvalidInput("adam: gradient shape mismatch");
  if (offset + params.size() > first_moment_.size()) {
    throw InvalidInput("adam: parameter group exceeds optimizer state");
  }
  if (steps_ == 0) throw InvalidInput("adam: update called before begin_step");
  const double t = static_cast<double>(steps_);
  const double correction1 = 1.0 - std::pow(config_.beta1, t);
  const double correction2 = 1.0 - std::pow(config_.beta2, t);
  const double sign = ascent ? 1.0 : -1.0;
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double g = direction[i];
    double& m = first_moment_[offset + i];
    double& v = second_moment_[offset + i];
    m = config_.beta1 * m + (1.0 - config_.beta1) * g;
    v = config_.beta2 * v + (1.0 - config_.beta2) * g * g;
    const double m_hat = m / correction1;
    const double v_hat = v / correction2;
    if (lr != 0.0) params[i] += sign * lr * m_hat / (std::sqrt(v_hat) + config_.eps);
  }
}

}  // namespace otf
