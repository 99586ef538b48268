#include "otf/policy.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "otf/error.hpp"
#include "otf/rng.hpp"

namespace otf {

namespace {

void require_action_dim(const GaussianPolicy& policy, std::span<const double> action) {
  if (action.size() != policy.action_dim()) {
    throw InvalidInput("action dimension " + std::to_string(action.size()) +
                       " does not match policy dimension " +
                       std::to_string(policy.action_dim()));
  }
}

}  // namespace

GaussianPolicy GaussianPolicy::from_head(const LinearHead& head, double sigma_init) {
  head.validate();
  if (!(sigma_init >= kSigmaMin)) throw InvalidInput("sigma_init must be >= sigma_min");
  return GaussianPolicy{head, Vector(head.out_dim(), sigma_init)};
}

void GaussianPolicy::clamp_sigma(double floor) {
  for (double& s : sigma) s = std::max(s, floor);
}

void GaussianPolicy::validate() const {
  mean_head.validate();
  if (sigma.size() != mean_head.out_dim()) throw InvalidInput("sigma length does not match out_dim");
  require_finite(sigma, "policy sigma");
  for (double s : sigma) {
    if (s < kSigmaMin) throw InvalidInput("policy sigma below sigma_min");
  }
}

PolicyGradient PolicyGradient::zeros_like(const GaussianPolicy& policy) {
  return PolicyGradient{Matrix(policy.action_dim(), policy.state_dim()),
                        Vector(policy.action_dim(), 0.0), Vector(policy.action_dim(), 0.0)};
}

void PolicyGradient::add_scaled(const PolicyGradient& other, double scale) {
  auto dst = d_weight.flat();
  const auto src = other.d_weight.flat();
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += scale * src[i];
  for (std::size_t i = 0; i < d_bias.size(); ++i) d_bias[i] += scale * other.d_bias[i];
  for (std::size_t i = 0; i < d_sigma.size(); ++i) d_sigma[i] += scale * other.d_sigma[i];
}

void PolicyGradient::scale(double factor) {
  for (double& v : d_weight.flat()) v *= factor;
  for (double& v : d_bias) v *= factor;
  for (double& v : d_sigma) v *= factor;
}

Vector policy_mean(const GaussianPolicy& policy, std::span<const double> state) {
  return affine(policy.mean_head, state);
}

SampledAction sample_action(const GaussianPolicy& policy, std::span<const double> state,
                            Rng& rng) {
  Vector xi(policy.action_dim());
  for (double& x : xi) x = rng.normal();
  return action_from_noise(policy, state, xi);
}

SampledAction action_from_noise(const GaussianPolicy& policy,
                                std::span<const double> state,
                                std::span<const double> xi) {
  require_action_dim(policy, xi);
  SampledAction action;
  action.raw = policy_mean(policy, state);
  for (std::size_t i = 0; i < action.raw.size(); ++i) action.raw[i] += xi[i] * policy.sigma[i];
  auto normalized = l2_normalize(action.raw);
  action.normalized = std::move(normalized.values);
  action.degenerate = normalized.degenerate;
  return action;
}

SampledAction deterministic_action(const GaussianPolicy& policy,
                                   std::span<const double> state) {
  SampledAction action;
  action.raw = policy_mean(policy, state);
  auto normalized = l2_normalize(action.raw);
  action.normalized = std::move(normalized.values);
  action.degenerate = normalized.degenerate;
  return action;
}

double log_prob(const GaussianPolicy& policy, std::span<const double> state,
                std::span<const double> raw_action) {
  require_action_dim(policy, raw_action);
  const Vector mu = policy_mean(policy, state);
  const double d = static_cast<double>(mu.size());
  double result = -0.5 * d * std::log(2.0 * std::numbers::pi);
  for (std::size_t i = 0; i < mu.size(); ++i) {
    const double s = policy.sigma[i];
    if (!(s > 0.0)) throw NumericError("non-positive sigma in log_prob");
    const double z = (raw_action[i] - mu[i]) / s;
    result -= std::log(s) + 0.5 * z * z;
  }
  return result;
}

PolicyGradient log_prob_grad(const GaussianPolicy& policy, std::span<const double> state,
                             std::span<const double> raw_action) {
  require_action_dim(policy, raw_action);
  const Vector mu = policy_mean(policy, state);
  PolicyGradient grad = PolicyGradient::zeros_like(policy);
  for (std::size_t i = 0; i < mu.size(); ++i) {
    const double s = policy.sigma[i];
    if (!(s > 0.0)) throw NumericError("non-positive sigma in log_prob_grad");
    const double diff = raw_action[i] - mu[i];
    grad.d_bias[i] = diff / (s * s);
    grad.d_sigma[i] = (diff * diff - s * s) / (s * s * s);
    auto row = grad.d_weight.row(i);
    for (std::size_t j = 0; j < state.size(); ++j) row[j] = grad.d_bias[i] * state[j];
  }
  return grad;
}

}  // namespace otf
