#include "pwmopt/pwm.hpp"

#include <cmath>
#include <ostream>
#include <stdexcept>
#include <string>

#include "pwmopt/csv.hpp"

namespace pwmopt {

void ForcingGrid::validate() const {
  if (!(std::isfinite(period) && period > 0.0)) {
    throw std::invalid_argument("forcing period must be finite and > 0");
  }
  if (n_periods < 1) throw std::invalid_argument("number of forcing periods must be >= 1");
}

std::string_view to_string(ActuationMode mode) {
  return mode == ActuationMode::Pwm ? "pwm" : "intensity";
}

ActuationMode parse_actuation_mode(std::string_view text) {
  if (text == "pwm" || text == "PWM") return ActuationMode::Pwm;
  if (text == "intensity" || text == "INTENSITY") return ActuationMode::Intensity;
  throw std::invalid_argument("unknown actuation mode '" + std::string(text) +
                              "' (expected 'pwm' or 'intensity')");
}

double duty_to_switch_time(int k, double duty, const ForcingGrid& grid) {
  if (!(duty >= 0.0 && duty <= 1.0)) throw std::domain_error("duty cycle must lie in [0, 1]");
  if (k < 0 || k >= grid.n_periods) throw std::domain_error("period index outside forcing grid");
  return (k + duty) * grid.period;
}

PwmPeriodPlan make_plan(int k, double duty, const ForcingGrid& grid, int channel) {
  return {k, duty, duty_to_switch_time(k, duty, grid), channel};
}

double intensity_at(double t, const PwmPeriodPlan& plan, const ForcingGrid& grid, double I_max) {
  if (!(t >= grid.period_start(plan.k) && t < grid.period_end(plan.k))) {
    throw std::domain_error("time outside the plan's forcing period");
  }
  return t < plan.switch_time ? I_max : 0.0;
}

double period_avg_activation(double duty, const ModelParams& params) {
  if (!(duty >= 0.0 && duty <= 1.0)) throw std::domain_error("duty cycle must lie in [0, 1]");
  return duty * hill_activation(params.I_max, params);
}

std::vector<LightSegment> period_segments(int k, double action, ActuationMode mode,
                                          const ForcingGrid& grid, double I_max) {
  const double start = grid.period_start(k);
  const double end = grid.period_end(k);
  std::vector<LightSegment> out;
  if (mode == ActuationMode::Intensity) {
    if (!(action >= 0.0 && action <= I_max)) {
      throw std::domain_error("intensity action must lie in [0, I_max]");
    }
    out.push_back({start, end, action});
    return out;
  }
  const double tau = duty_to_switch_time(k, action, grid);
  if (tau > start) out.push_back({start, tau, I_max});
  if (tau < end) out.push_back({tau, end, 0.0});
  return out;
}

std::vector<DoseResponseRow> dose_response_table(std::size_t n_points, const ModelParams& params) {
  if (n_points < 2) throw std::invalid_argument("dose-response table needs at least 2 points");
  std::vector<DoseResponseRow> rows;
  rows.reserve(2 * n_points);
  const double last = static_cast<double>(n_points - 1);
  for (std::size_t j = 0; j < n_points; ++j) {
    const double u = static_cast<double>(j) / last;
    rows.push_back({ActuationMode::Intensity, u,
                    hill_activation(u * params.I_max, params) / params.q_p_max});
  }
  const double full_on = hill_activation(params.I_max, params) / params.q_p_max;
  for (std::size_t j = 0; j < n_points; ++j) {
    const double d = static_cast<double>(j) / last;
    rows.push_back({ActuationMode::Pwm, d, d * full_on});
  }
  return rows;
}

void write_dose_response_csv(std::ostream& out, const std::vector<DoseResponseRow>& rows) {
  out << "mode,input_normalized,activation_normalized\n";
  for (const auto& r : rows) {
    out << to_string(r.mode) << ',' << csv::number(r.input) << ',' << csv::number(r.activation)
        << '\n';
  }
}

}  // namespace pwmopt
