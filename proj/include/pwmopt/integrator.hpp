#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "pwmopt/model.hpp"
#include "pwmopt/pwm.hpp"

namespace pwmopt {

/// Raised when the plant state cannot be advanced to a finite, nonnegative
/// value. Carries the process time at which integration broke down.
class EpisodeFailure : public std::runtime_error {
 public:
  EpisodeFailure(double time, const std::string& what)
      : std::runtime_error(what + " (t = " + std::to_string(time) + " h)"), time_(time) {}
  double time() const { return time_; }

 private:
  double time_;
};

struct TrajectorySample {
  double t = 0.0;
  double b = 0.0;
  double g = 0.0;
  double p = 0.0;
  double intensity = 0.0;  // light applied from t onwards
};

/// Step-kind counters, useful for checking which path integrated a segment.
struct IntegratorStats {
  long explicit_steps = 0;
  long implicit_steps = 0;
  long refinements = 0;
};

/// Classical fourth-order Runge-Kutta step of size h at constant synthesis
/// rate q_p.
PlantState rk4_step(const PlantState& x, double q_p, double h, const ModelParams& params);

/// Three-stage L-stable SDIRK step (order 3) solved by Newton iteration with
/// the analytic Jacobian. Returns false if Newton fails to converge.
bool sdirk3_step(const PlantState& x, double q_p, double h, const ModelParams& params,
                 PlantState& out);

/// Largest diagonal magnitude of the Jacobian, a cheap proxy for the fastest
/// local time scale. Glucose becomes stiff as it approaches k_g.
double stiffness_estimate(const PlantState& x, const ModelParams& params);

/// Fixed-step integrator for piecewise-constant light.
///
/// Each constant-light segment is divided into ceil(length / max_step)
/// equal steps, so no step ever straddles a switching time. Steps use RK4
/// while h * stiffness stays inside its stability interval; otherwise (or if
/// RK4 leaves the nonnegative orthant) the step is redone with SDIRK3, and
/// failing that, bisected. EpisodeFailure is thrown when bisection bottoms
/// out.
class PlantIntegrator {
 public:
  PlantIntegrator(const ModelParams& params, double max_step);

  /// Advances x across seg. When dense is non-null, appends one sample per
  /// step start (the segment's end point is left to the next segment).
  PlantState advance(const PlantState& x, const LightSegment& seg,
                     std::vector<TrajectorySample>* dense = nullptr);

  const IntegratorStats& stats() const { return stats_; }
  double max_step() const { return max_step_; }

  /// Number of equal steps used for an interval of the given length.
  static int step_count(double length, double max_step);

 private:
  PlantState step(const PlantState& x, double q_p, double t, double h, int depth);

  ModelParams params_;
  double max_step_;
  IntegratorStats stats_;
};

}  // namespace pwmopt
