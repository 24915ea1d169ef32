#pragma once

#include <cstddef>
#include <iosfwd>
#include <string_view>
#include <vector>

#include "pwmopt/model.hpp"

namespace pwmopt {

/// Fixed-length forcing periods [kT, (k+1)T), k = 0..n_periods-1.
struct ForcingGrid {
  double period = 1.0;    // T, h
  int n_periods = 24;     // n_T

  double horizon() const { return period * n_periods; }
  double period_start(int k) const { return k * period; }
  double period_end(int k) const { return (k + 1) * period; }
  void validate() const;

  bool operator==(const ForcingGrid&) const = default;
};

/// How the policy output is turned into light.
enum class ActuationMode {
  Pwm,        // action is a duty cycle in [0, 1], light is I_max or 0
  Intensity,  // action is a constant intensity in [0, I_max] for the period
};

std::string_view to_string(ActuationMode mode);
ActuationMode parse_actuation_mode(std::string_view text);

/// One period's ON-then-OFF schedule for one light channel.
struct PwmPeriodPlan {
  int k = 0;
  double duty = 0.0;
  double switch_time = 0.0;  // tau = (k + D) T
  int channel = 0;
};

/// Plans of all light channels for one period; the case study uses one.
using PeriodPlans = std::vector<PwmPeriodPlan>;

/// tau = (k + D) T. Throws std::domain_error for D outside [0, 1] or k
/// outside the grid.
double duty_to_switch_time(int k, double duty, const ForcingGrid& grid);

PwmPeriodPlan make_plan(int k, double duty, const ForcingGrid& grid, int channel = 0);

/// I_max on [kT, tau), 0 on [tau, (k+1)T). Throws std::domain_error if t is
/// outside the plan's period.
double intensity_at(double t, const PwmPeriodPlan& plan, const ForcingGrid& grid, double I_max);

/// Period-averaged lysine synthesis rate under duty cycle D: D * q_p(I_max).
double period_avg_activation(double duty, const ModelParams& params);

/// A time interval of constant light.
struct LightSegment {
  double t0 = 0.0;
  double t1 = 0.0;
  double intensity = 0.0;
};

/// Splits period k into its constant-light pieces. PWM yields the ON piece
/// [kT, tau) and the OFF piece [tau, (k+1)T), dropping whichever is empty;
/// INTENSITY yields a single piece at the given intensity.
std::vector<LightSegment> period_segments(int k, double action, ActuationMode mode,
                                          const ForcingGrid& grid, double I_max);

struct DoseResponseRow {
  ActuationMode mode;
  double input;       // I / I_max or D
  double activation;  // period-average q_p / q_p_max
};

/// n_points rows per mode over a uniform grid on [0, 1]; intensity rows
/// first, then PWM rows.
std::vector<DoseResponseRow> dose_response_table(std::size_t n_points, const ModelParams& params);

/// CSV with header `mode,input_normalized,activation_normalized`.
void write_dose_response_csv(std::ostream& out, const std::vector<DoseResponseRow>& rows);

}  // namespace pwmopt
