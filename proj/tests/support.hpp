#pragma once

// Shared fixtures and independent oracles for the unit and acceptance tests.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "pwmopt/env.hpp"
#include "pwmopt/policy.hpp"
#include "pwmopt/trainer.hpp"

namespace pwmopt::testing {

/// One 1 h period, setpoint equal to the biomass reached with duty `d_star`
/// from the nominal state, so the optimal duty cycle is interior.
inline ScenarioConfig one_period_scenario(double d_star = 0.4) {
  ScenarioConfig s;
  s.grid = {1.0, 1};
  const PlantState x1 = simulate_period(s.nominal_initial, d_star, 0, s, ModelParams{});
  s.reference = {{{1.0, x1.b}}};
  return s;
}

struct GridOptimum {
  double duty = 0.0;
  double ret = -1e300;
};

/// Brute-force sweep of a constant duty cycle over [0, 1] with the given
/// resolution, for an n_T = 1 scenario at nominal conditions.
inline GridOptimum brute_force_one_period(const ScenarioConfig& s, double step = 1e-3) {
  GridOptimum best;
  const int n = static_cast<int>(std::lround(1.0 / step));
  for (int i = 0; i <= n; ++i) {
    const double d = i * step;
    const PlantState x1 = simulate_period(s.nominal_initial, d, 0, s, ModelParams{});
    const double r = stage_reward(x1, 0, s);
    if (r > best.ret) best = {d, r};
  }
  return best;
}

/// Central finite differences of log pi(raw | z, theta) with step h.
inline std::vector<double> fd_grad_log_prob(std::span<const double> z, double raw,
                                            PolicyParams theta, double h = 1e-5) {
  std::vector<double> g(theta.size());
  auto values = theta.values();
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double saved = values[i];
    values[i] = saved + h;
    const PolicyOutput up = forward(z, theta);
    const double lp_up = gaussian_log_prob(raw, up.mean, up.std);
    values[i] = saved - h;
    const PolicyOutput dn = forward(z, theta);
    const double lp_dn = gaussian_log_prob(raw, dn.mean, dn.std);
    values[i] = saved;
    g[i] = (lp_up - lp_dn) / (2.0 * h);
  }
  return g;
}

/// Smallest |pre-activation| over the hidden layers. Central differences
/// are only meaningful when no Leaky ReLU kink lies within the stencil.
inline double kink_margin(std::span<const double> z, const PolicyParams& theta) {
  ForwardCache cache;
  forward(z, theta, cache);
  double m = 1e300;
  for (std::size_t l = 0; l + 1 < cache.pre.size(); ++l) {
    for (double v : cache.pre[l]) m = std::min(m, std::abs(v));
  }
  return m;
}

inline double norm2(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

inline double relative_error(std::span<const double> a, std::span<const double> b) {
  double diff = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) diff += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(diff) / std::max(norm2(b), 1e-300);
}

/// Hill activation written out independently: x^n / (x^n + 1) with x = I/k_I.
inline double hill_oracle(double I, double q_p_max, double n, double k_I) {
  if (I == 0.0) return 0.0;
  const double xn = std::exp(n * std::log(I / k_I));
  return q_p_max * xn / (xn + 1.0);
}

}  // namespace pwmopt::testing
