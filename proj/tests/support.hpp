#pragma once

#include <algorithm>
#include <cmath>
#include <functional>

#include "otf/embedding.hpp"
#include "otf/policy.hpp"
#include "otf/pretrain.hpp"
#include "otf/rng.hpp"

namespace otf::testing {

inline Vector random_vector(std::size_t n, Rng& rng, double scale = 1.0) {
  Vector v(n);
  for (auto& x : v) x = scale * rng.normal();
  return v;
}

inline LinearHead random_head(std::size_t out, std::size_t in, Rng& rng, double scale = 1.0) {
  LinearHead head = LinearHead::zeros(out, in);
  for (auto& w : head.weight.flat()) w = scale * rng.normal();
  for (auto& b : head.bias) b = scale * rng.normal();
  return head;
}

inline GaussianPolicy random_policy(std::size_t out, std::size_t in, Rng& rng) {
  GaussianPolicy p{random_head(out, in, rng, 0.5), Vector(out)};
  for (auto& s : p.sigma) s = rng.uniform(0.3, 1.5);
  return p;
}

// Error of an analytic gradient group against a numeric one, scaled by the
// largest magnitude in either; tiny groups fall back to absolute error.
inline double group_error(std::span<const double> analytic, std::span<const double> numeric) {
  double diff = 0.0, scale = 0.0;
  for (std::size_t i = 0; i < analytic.size(); ++i) {
    diff = std::max(diff, std::abs(analytic[i] - numeric[i]));
    scale = std::max({scale, std::abs(analytic[i]), std::abs(numeric[i])});
  }
  return diff / std::max(scale, 1e-6);
}

// Central differences of f over every (W, b, sigma) entry of `policy`.
inline PolicyGradient numeric_policy_gradient(GaussianPolicy policy,
                                              const std::function<double(const GaussianPolicy&)>& f,
                                              double h = 1e-5) {
  PolicyGradient g = PolicyGradient::zeros_like(policy);
  const auto sweep = [&](std::span<double> params, std::span<double> out) {
    for (std::size_t i = 0; i < params.size(); ++i) {
      const double saved = params[i];
      params[i] = saved + h;
      const double up = f(policy);
      params[i] = saved - h;
      const double down = f(policy);
      params[i] = saved;
      out[i] = (up - down) / (2.0 * h);
    }
  };
  sweep(policy.mean_head.weight.flat(), g.d_weight.flat());
  sweep(policy.mean_head.bias, g.d_bias);
  sweep(policy.sigma, g.d_sigma);
  return g;
}

inline double policy_gradient_error(const PolicyGradient& analytic, const PolicyGradient& numeric) {
  return std::max({group_error(analytic.d_weight.flat(), numeric.d_weight.flat()),
                   group_error(analytic.d_bias, numeric.d_bias),
                   group_error(analytic.d_sigma, numeric.d_sigma)});
}

inline HeadGradient numeric_head_gradient(LinearHead head, const std::function<double(const LinearHead&)>& f,
                                          double h = 1e-5) {
  HeadGradient g = HeadGradient::zeros_like(head);
  const auto sweep = [&](std::span<double> params, std::span<double> out) {
    for (std::size_t i = 0; i < params.size(); ++i) {
      const double saved = params[i];
      params[i] = saved + h;
      const double up = f(head);
      params[i] = saved - h;
      const double down = f(head);
      params[i] = saved;
      out[i] = (up - down) / (2.0 * h);
    }
  };
  sweep(head.weight.flat(), g.d_weight.flat());
  sweep(head.bias, g.d_bias);
  return g;
}

inline double head_gradient_error(const HeadGradient& analytic, const HeadGradient& numeric) {
  return std::max(group_error(analytic.d_weight.flat(), numeric.d_weight.flat()),
                  group_error(analytic.d_bias, numeric.d_bias));
}

}  // namespace otf::testing
