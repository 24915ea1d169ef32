#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <iosfwd>
#include <span>
#include <vector>

#include "pwmopt/integrator.hpp"
#include "pwmopt/model.hpp"
#include "pwmopt/pwm.hpp"
#include "pwmopt/rng.hpp"

namespace pwmopt {

struct ReferenceSegment {
  double end = 0.0;       // h
  double setpoint = 0.0;  // g/L

  bool operator==(const ReferenceSegment&) const = default;
};

/// Piecewise-constant biomass reference. Segment i covers [end_{i-1}, end_i);
/// the last one is closed at the horizon.
struct ReferenceTrajectory {
  std::vector<ReferenceSegment> segments;

  double at(double t) const;
  void validate(double horizon) const;

  /// 3 g/L on [0, 8), 5 g/L on [8, 16), 7 g/L on [16, 24].
  static ReferenceTrajectory three_setpoint();

  bool operator==(const ReferenceTrajectory&) const = default;
};

/// Which quantities are perturbed per episode.
struct RandomizationMask {
  bool b = true;
  bool g = true;
  bool p = true;
  bool q_p_max = true;

  bool operator==(const RandomizationMask&) const = default;
};

struct ScenarioConfig {
  ActuationMode actuation_mode = ActuationMode::Pwm;
  double uncertainty_level = 0.0;  // relative standard deviation
  PlantState nominal_initial{3.0, 50.0, 1.0752e-4};
  ForcingGrid grid{};
  ReferenceTrajectory reference = ReferenceTrajectory::three_setpoint();
  double q_s = 1.0;
  double q_t = 1.0;
  double integrator_step = 0.01;  // h
  RandomizationMask randomize{};

  void validate() const;

  bool operator==(const ScenarioConfig&) const = default;
};

struct EpisodeRandomization {
  PlantState initial;
  double q_p_max = 0.0;
};

/// Draws the episode's initial state and q_p_max from normals centred on the
/// nominal values with relative SD uncertainty_level, redrawing any value
/// below 1e-9 x nominal. Level 0 returns the nominal values exactly.
EpisodeRandomization sample_episode_randomization(const ScenarioConfig& cfg,
                                                  const ModelParams& params, Rng& rng);

/// Integrates period k under the given physical action (duty cycle for PWM,
/// intensity in W/m^2 for INTENSITY). Throws EpisodeFailure on breakdown.
PlantState simulate_period(const PlantState& x, double action, int k, const ScenarioConfig& cfg,
                           const ModelParams& params,
                           std::vector<TrajectorySample>* dense = nullptr);

/// Reward r_{k+1} collected at t_{k+1} = (k+1)T after period k.
double stage_reward(const PlantState& x_next, int k, const ScenarioConfig& cfg);

inline constexpr std::size_t kObservationDim = 9;
using Observation = std::array<double, kObservationDim>;

/// Process-time embedding e_k = 2k/(n_T-1) - 1 in [-1, 1].
double time_embedding(int k, const ForcingGrid& grid);

/// z_k = [x_k, D_{k-1}, x_{k-1}, D_{k-2}, e_k] with states scaled by
/// (1/10, 1/g_in, 1/1e-3). `states` holds x_0..x_k and `actions` the
/// normalized actions D_0..D_{k-1}; missing history is padded with x_0 and 0.
Observation build_observation(std::span<const PlantState> states, std::span<const double> actions,
                              int k, const ForcingGrid& grid, const ModelParams& params);

struct PeriodRecord {
  int k = 0;
  Observation observation{};
  double action = 0.0;      // applied physical action
  double raw_action = 0.0;  // unclipped policy draw
  double reward = 0.0;
  PlantState state_after;
};

struct EpisodeTrace {
  PlantState initial;
  double q_p_max = 0.0;
  std::vector<PeriodRecord> periods;
  std::vector<TrajectorySample> dense;
  std::vector<int> dense_period;  // period index of each dense sample
  bool complete = false;          // dense samples end with the t_f sample

  double total_return() const;
};

/// CSV `t,b,g,p,I,period,action,reward`; the reward r_{k} sits on the row at
/// t_k and is empty elsewhere.
void write_trace_csv(std::ostream& out, const EpisodeTrace& trace);

/// One episode of the period-level decision process.
class Environment {
 public:
  struct Step {
    Observation observation{};
    double reward = 0.0;
    bool done = false;
  };

  Environment(ScenarioConfig cfg, ModelParams params, bool record_dense = false);

  /// Starts an episode from explicitly given conditions.
  Observation reset(const EpisodeRandomization& start);
  /// Starts an episode with conditions drawn from rng.
  Observation reset(Rng& rng);

  /// Applies `action` (physical units) over the current period.
  Step step(double action, double raw_action);

  int period() const { return k_; }
  bool done() const { return k_ >= cfg_.grid.n_periods; }
  const PlantState& state() const { return states_.back(); }
  const Observation& observation() const { return obs_; }
  const ScenarioConfig& scenario() const { return cfg_; }
  const ModelParams& episode_params() const { return episode_params_; }
  const EpisodeTrace& trace() const { return trace_; }
  EpisodeTrace take_trace() { return std::move(trace_); }

  /// Maps a physical action onto [0, 1] for the observation history.
  double normalized_action(double action) const;

 private:
  ScenarioConfig cfg_;
  ModelParams params_;
  ModelParams episode_params_;
  bool record_dense_;
  int k_ = 0;
  std::vector<PlantState> states_;
  std::vector<double> actions_;
  Observation obs_{};
  EpisodeTrace trace_;
};

}  // namespace pwmopt
