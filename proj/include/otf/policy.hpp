#pragma once

#include <span>

#include "otf/embedding.hpp"

namespace otf {

class Rng;

inline constexpr double kSigmaMin = 1e-3;

// Diagonal Gaussian policy over D-dimensional actions. The mean is the raw
// linear output of `mean_head`; `sigma` holds per-coordinate standard
// deviations.
struct GaussianPolicy {
  LinearHead mean_head;
  Vector sigma;

  // Copies `head` as the mean head and fills sigma with `sigma_init`.
  static GaussianPolicy from_head(const LinearHead& head, double sigma_init = 1.0);

  std::size_t state_dim() const { return mean_head.in_dim(); }
  std::size_t action_dim() const { return mean_head.out_dim(); }

  // Raises every sigma below `floor` to `floor`.
  void clamp_sigma(double floor = kSigmaMin);
  void validate() const;

  bool operator==(const GaussianPolicy&) const = default;
};

// Carrier for d(log pi)/d(params) and objective gradients.
struct PolicyGradient {
  Matrix d_weight;
  Vector d_bias;
  Vector d_sigma;

  static PolicyGradient zeros_like(const GaussianPolicy& policy);
  // this += scale * other
  void add_scaled(const PolicyGradient& other, double scale);
  void scale(double factor);
};

Vector policy_mean(const GaussianPolicy& policy, std::span<const double> state);

struct SampledAction {
  Vector raw;         // mu + xi * sigma; log-densities are taken of this
  Vector normalized;  // l2_normalize(raw); used for retrieval
  bool degenerate = false;
};

SampledAction sample_action(const GaussianPolicy& policy, std::span<const double> state,
                            Rng& rng);
// Same as sample_action with the standard-normal draw supplied by the caller.
SampledAction action_from_noise(const GaussianPolicy& policy,
                                std::span<const double> state,
                                std::span<const double> xi);
// Evaluation-mode action: l2_normalize(mu), no sampling.
SampledAction deterministic_action(const GaussianPolicy& policy,
                                   std::span<const double> state);

// log N(raw_action; mu(state), diag(sigma^2)).
double log_prob(const GaussianPolicy& policy, std::span<const double> state,
                std::span<const double> raw_action);

// Analytic gradient of log_prob with respect to (W, b, sigma):
//   d_bias_i  = (a_i - mu_i) / sigma_i^2
//   d_weight  = d_bias (x) state
//   d_sigma_i = ((a_i - mu_i)^2 - sigma_i^2) / sigma_i^3
PolicyGradient log_prob_grad(const GaussianPolicy& policy, std::span<const double> state,
                             std::span<const double> raw_action);

}  // namespace otf
