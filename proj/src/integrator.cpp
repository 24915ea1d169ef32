#include "pwmopt/integrator.hpp"

#include <algorithm>
#include <array>
#include <cmath>

namespace pwmopt {

namespace {

using Vec3 = std::array<double, 3>;
using Mat3 = std::array<Vec3, 3>;

Vec3 to_vec(const PlantState& x) { return {x.b, x.g, x.p}; }
PlantState to_state(const Vec3& v) { return {v[0], v[1], v[2]}; }

Mat3 jacobian(const PlantState& x, const ModelParams& m) {
  const double gsat = x.g / (x.g + m.k_g);
  const double lys = m.f_c * x.p;
  const double psat = lys / (lys + m.k_p);
  const double mu = m.mu_max * gsat * psat;
  const double dmu_dg = m.mu_max * psat * m.k_g / ((x.g + m.k_g) * (x.g + m.k_g));
  const double dmu_dp = m.mu_max * gsat * m.f_c * m.k_p / ((lys + m.k_p) * (lys + m.k_p));
  return {{
      {mu - m.d_l, x.b * dmu_dg, x.b * dmu_dp},
      {-m.Y_gb * mu, -m.Y_gb * x.b * dmu_dg - m.d_l, -m.Y_gb * x.b * dmu_dp},
      {0.0, -x.p * dmu_dg, -(m.d_p + mu) - x.p * dmu_dp},
  }};
}

// Solves A v = r by Gaussian elimination with partial pivoting.
bool solve3(Mat3 a, Vec3 r, Vec3& v) {
  for (int col = 0; col < 3; ++col) {
    int piv = col;
    for (int row = col + 1; row < 3; ++row) {
      if (std::abs(a[row][col]) > std::abs(a[piv][col])) piv = row;
    }
    if (a[piv][col] == 0.0 || !std::isfinite(a[piv][col])) return false;
    std::swap(a[col], a[piv]);
    std::swap(r[col], r[piv]);
    for (int row = col + 1; row < 3; ++row) {
      const double f = a[row][col] / a[col][col];
      for (int c = col; c < 3; ++c) a[row][c] -= f * a[col][c];
      r[row] -= f * r[col];
    }
  }
  for (int row = 2; row >= 0; --row) {
    double s = r[row];
    for (int c = row + 1; c < 3; ++c) s -= a[row][c] * v[c];
    v[row] = s / a[row][row];
  }
  return std::isfinite(v[0]) && std::isfinite(v[1]) && std::isfinite(v[2]);
}

constexpr double kGamma = 0.43586652150845899941601945;
constexpr double kA21 = (1.0 - kGamma) / 2.0;
constexpr double kB1 = -1.5 * kGamma * kGamma + 4.0 * kGamma - 0.25;
constexpr double kB2 = 1.5 * kGamma * kGamma - 5.0 * kGamma + 1.25;

// Solves Y = base + h*gamma*f(Y) for one implicit stage.
bool solve_stage(const Vec3& base, const Vec3& guess, double q_p, double h,
                 const ModelParams& m, Vec3& y) {
  y = guess;
  const double hg = h * kGamma;
  for (int iter = 0; iter < 30; ++iter) {
    const PlantState ys = to_state(y);
    const Vec3 f = to_vec(rhs_with_synthesis(ys, q_p, m));
    const Mat3 j = jacobian(ys, m);
    Mat3 a{};
    Vec3 resid{};
    for (int r = 0; r < 3; ++r) {
      for (int c = 0; c < 3; ++c) a[r][c] = (r == c ? 1.0 : 0.0) - hg * j[r][c];
      resid[r] = -(y[r] - base[r] - hg * f[r]);
    }
    Vec3 delta{};
    if (!solve3(a, resid, delta)) return false;
    bool converged = true;
    for (int r = 0; r < 3; ++r) {
      double next = y[r] + delta[r];
      // Iterates stay in the physical orthant where the rate laws are defined.
      if (next < 0.0) next = 0.0;
      if (std::abs(next - y[r]) > 1e-12 * std::abs(next) + 1e-18) converged = false;
      y[r] = next;
    }
    if (converged) return true;
  }
  return false;
}

}  // namespace

PlantState rk4_step(const PlantState& x, double q_p, double h, const ModelParams& params) {
  auto axpy = [](const PlantState& a, double s, const PlantState& d) {
    return PlantState{a.b + s * d.b, a.g + s * d.g, a.p + s * d.p};
  };
  const PlantState k1 = rhs_with_synthesis(x, q_p, params);
  const PlantState k2 = rhs_with_synthesis(axpy(x, h / 2, k1), q_p, params);
  const PlantState k3 = rhs_with_synthesis(axpy(x, h / 2, k2), q_p, params);
  const PlantState k4 = rhs_with_synthesis(axpy(x, h, k3), q_p, params);
  const double w = h / 6.0;
  return {x.b + w * (k1.b + 2.0 * k2.b + 2.0 * k3.b + k4.b),
          x.g + w * (k1.g + 2.0 * k2.g + 2.0 * k3.g + k4.g),
          x.p + w * (k1.p + 2.0 * k2.p + 2.0 * k3.p + k4.p)};
}

bool sdirk3_step(const PlantState& x, double q_p, double h, const ModelParams& params,
                 PlantState& out) {
  const Vec3 x0 = to_vec(x);
  Vec3 y1{}, y2{}, y3{};
  if (!solve_stage(x0, x0, q_p, h, params, y1)) return false;
  const Vec3 k1 = to_vec(rhs_with_synthesis(to_state(y1), q_p, params));

  Vec3 base{};
  for (int r = 0; r < 3; ++r) base[r] = x0[r] + h * kA21 * k1[r];
  if (!solve_stage(base, y1, q_p, h, params, y2)) return false;
  const Vec3 k2 = to_vec(rhs_with_synthesis(to_state(y2), q_p, params));

  for (int r = 0; r < 3; ++r) base[r] = x0[r] + h * (kB1 * k1[r] + kB2 * k2[r]);
  if (!solve_stage(base, y2, q_p, h, params, y3)) return false;
  // Stiffly accurate: the last stage is the step result.
  out = to_state(y3);
  return true;
}

double stiffness_estimate(const PlantState& x, const ModelParams& params) {
  const Mat3 j = jacobian(x, params);
  return std::max({std::abs(j[0][0]), std::abs(j[1][1]), std::abs(j[2][2])});
}

PlantIntegrator::PlantIntegrator(const ModelParams& params, double max_step)
    : params_(params), max_step_(max_step) {
  if (!(std::isfinite(max_step) && max_step > 0.0)) {
    throw std::invalid_argument("integrator step must be finite and > 0");
  }
}

int PlantIntegrator::step_count(double length, double max_step) {
  if (length <= 0.0) return 0;
  // Tolerate round-off so that e.g. 1.0 / 0.01 yields 100 steps, not 101.
  return std::max(1, static_cast<int>(std::ceil(length / max_step - 1e-9)));
}

namespace {
// RK4's real stability interval is about [-2.785, 0]; stay clear of its edge.
constexpr double kExplicitLimit = 2.5;
constexpr int kMaxBisections = 24;
}  // namespace

PlantState PlantIntegrator::step(const PlantState& x, double q_p, double t, double h, int depth) {
  if (h * stiffness_estimate(x, params_) <= kExplicitLimit) {
    const PlantState y = rk4_step(x, q_p, h, params_);
    if (y.finite() && y.nonnegative() && h * stiffness_estimate(y, params_) <= kExplicitLimit) {
      ++stats_.explicit_steps;
      return y;
    }
  }
  PlantState y;
  if (sdirk3_step(x, q_p, h, params_, y) && y.finite() && y.nonnegative()) {
    ++stats_.implicit_steps;
    return y;
  }
  if (depth >= kMaxBisections) {
    throw EpisodeFailure(t, "plant integration failed to produce a finite nonnegative state");
  }
  ++stats_.refinements;
  const PlantState mid = step(x, q_p, t, h / 2, depth + 1);
  return step(mid, q_p, t + h / 2, h / 2, depth + 1);
}

PlantState PlantIntegrator::advance(const PlantState& x, const LightSegment& seg,
                                    std::vector<TrajectorySample>* dense) {
  const double length = seg.t1 - seg.t0;
  const int n = step_count(length, max_step_);
  if (n == 0) return x;
  const double h = length / n;
  const double q_p = hill_activation(seg.intensity, params_);
  PlantState cur = x;
  for (int i = 0; i < n; ++i) {
    const double t = seg.t0 + i * h;
    if (dense) dense->push_back({t, cur.b, cur.g, cur.p, seg.intensity});
    cur = step(cur, q_p, t, h, 0);
  }
  return cur;
}

}  // namespace pwmopt
