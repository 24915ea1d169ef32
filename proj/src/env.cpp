#include "pwmopt/env.hpp"

#include <cmath>
#include <ostream>
#include <stdexcept>

#include "pwmopt/csv.hpp"

namespace pwmopt {

double ReferenceTrajectory::at(double t) const {
  for (const auto& seg : segments) {
    if (t < seg.end) return seg.setpoint;
  }
  return segments.back().setpoint;
}

void ReferenceTrajectory::validate(double horizon) const {
  if (segments.empty()) throw std::invalid_argument("reference trajectory has no segments");
  double prev = 0.0;
  for (const auto& seg : segments) {
    if (!(seg.end > prev)) {
      throw std::invalid_argument("reference segment end times must be strictly increasing");
    }
    if (!(std::isfinite(seg.setpoint) && seg.setpoint > 0.0)) {
      throw std::invalid_argument("reference setpoints must be finite and > 0");
    }
    prev = seg.end;
  }
  if (std::abs(prev - horizon) > 1e-9 * horizon) {
    throw std::invalid_argument("last reference segment must end at the process horizon");
  }
}

ReferenceTrajectory ReferenceTrajectory::three_setpoint() {
  return {{{8.0, 3.0}, {16.0, 5.0}, {24.0, 7.0}}};
}

void ScenarioConfig::validate() const {
  grid.validate();
  if (!(uncertainty_level >= 0.0) || !std::isfinite(uncertainty_level)) {
    throw std::invalid_argument("uncertainty_level must be finite and >= 0");
  }
  nominal_initial.validate();
  reference.validate(grid.horizon());
  if (!(q_s >= 0.0) || !(q_t >= 0.0)) throw std::invalid_argument("q_s and q_t must be >= 0");
  if (!(integrator_step > 0.0) || integrator_step > grid.period / 10.0 * (1.0 + 1e-12)) {
    throw std::invalid_argument("integrator_step must lie in (0, T/10]");
  }
}

namespace {

double draw_truncated(double nominal, double rel_sd, Rng& rng) {
  std::normal_distribution<double> normal(nominal, rel_sd * nominal);
  const double floor = 1e-9 * nominal;
  for (;;) {
    const double v = normal(rng);
    if (v >= floor) return v;
  }
}

}  // namespace

EpisodeRandomization sample_episode_randomization(const ScenarioConfig& cfg,
                                                  const ModelParams& params, Rng& rng) {
  EpisodeRandomization out{cfg.nominal_initial, params.q_p_max};
  const double level = cfg.uncertainty_level;
  if (level == 0.0) return out;
  const auto& mask = cfg.randomize;
  if (mask.b) out.initial.b = draw_truncated(cfg.nominal_initial.b, level, rng);
  if (mask.g) out.initial.g = draw_truncated(cfg.nominal_initial.g, level, rng);
  if (mask.p) out.initial.p = draw_truncated(cfg.nominal_initial.p, level, rng);
  if (mask.q_p_max) out.q_p_max = draw_truncated(params.q_p_max, level, rng);
  return out;
}

PlantState simulate_period(const PlantState& x, double action, int k, const ScenarioConfig& cfg,
                           const ModelParams& params, std::vector<TrajectorySample>* dense) {
  if (k < 0 || k >= cfg.grid.n_periods) throw std::domain_error("period index outside grid");
  PlantIntegrator integrator(params, cfg.integrator_step);
  PlantState cur = x;
  for (const auto& seg :
       period_segments(k, action, cfg.actuation_mode, cfg.grid, params.I_max)) {
    cur = integrator.advance(cur, seg, dense);
  }
  return cur;
}

double stage_reward(const PlantState& x_next, int k, const ScenarioConfig& cfg) {
  const int n = cfg.grid.n_periods;
  if (k < 0 || k >= n) throw std::domain_error("period index outside grid");
  const double t = cfg.grid.period_end(k);
  const double weight = (k + 1 < n) ? cfg.q_s : cfg.q_t;
  const double err = x_next.b - cfg.reference.at(t);
  return -weight * err * err;
}

double time_embedding(int k, const ForcingGrid& grid) {
  // A single-period grid has no span to embed; it sits at the start point.
  if (grid.n_periods <= 1) return -1.0;
  return 2.0 * k / (grid.n_periods - 1) - 1.0;
}

Observation build_observation(std::span<const PlantState> states, std::span<const double> actions,
                              int k, const ForcingGrid& grid, const ModelParams& params) {
  if (states.empty()) throw std::invalid_argument("observation needs at least the initial state");
  const auto uk = static_cast<std::size_t>(k);
  const PlantState& cur = states[std::min(uk, states.size() - 1)];
  const PlantState& prev = k >= 1 ? states[std::min(uk - 1, states.size() - 1)] : states.front();
  const double d1 = (k >= 1 && uk - 1 < actions.size()) ? actions[uk - 1] : 0.0;
  const double d2 = (k >= 2 && uk - 2 < actions.size()) ? actions[uk - 2] : 0.0;
  const double sb = 1.0 / 10.0;
  const double sg = 1.0 / params.g_in;
  const double sp = 1.0 / 1e-3;
  return {cur.b * sb,  cur.g * sg,  cur.p * sp, d1, prev.b * sb,
          prev.g * sg, prev.p * sp, d2,         time_embedding(k, grid)};
}

double EpisodeTrace::total_return() const {
  double sum = 0.0;
  for (const auto& r : periods) sum += r.reward;
  return sum;
}

void write_trace_csv(std::ostream& out, const EpisodeTrace& trace) {
  out << "t,b,g,p,I,period,action,reward\n";
  const std::size_t n = trace.dense.size();
  for (std::size_t i = 0; i < n; ++i) {
    const auto& s = trace.dense[i];
    const int k = trace.dense_period[i];
    std::optional<double> reward;
    const bool first_of_period = i > 0 && trace.dense_period[i - 1] != k;
    if (first_of_period && k >= 1 && static_cast<std::size_t>(k - 1) < trace.periods.size()) {
      reward = trace.periods[static_cast<std::size_t>(k - 1)].reward;
    } else if (i + 1 == n && trace.complete && !trace.periods.empty()) {
      reward = trace.periods.back().reward;
    }
    const double action =
        static_cast<std::size_t>(k) < trace.periods.size() ? trace.periods[k].action : 0.0;
    out << csv::number(s.t) << ',' << csv::number(s.b) << ',' << csv::number(s.g) << ','
        << csv::number(s.p) << ',' << csv::number(s.intensity) << ',' << k << ','
        << csv::number(action) << ',' << csv::optional_number(reward) << '\n';
  }
}

Environment::Environment(ScenarioConfig cfg, ModelParams params, bool record_dense)
    : cfg_(std::move(cfg)), params_(params), episode_params_(params), record_dense_(record_dense) {
  cfg_.validate();
  params_.validate();
}

Observation Environment::reset(const EpisodeRandomization& start) {
  start.initial.validate();
  episode_params_ = params_;
  episode_params_.q_p_max = start.q_p_max;
  k_ = 0;
  states_.assign(1, start.initial);
  actions_.clear();
  trace_ = EpisodeTrace{};
  trace_.initial = start.initial;
  trace_.q_p_max = start.q_p_max;
  trace_.periods.reserve(static_cast<std::size_t>(cfg_.grid.n_periods));
  obs_ = build_observation(states_, actions_, 0, cfg_.grid, episode_params_);
  return obs_;
}

Observation Environment::reset(Rng& rng) {
  return reset(sample_episode_randomization(cfg_, params_, rng));
}

double Environment::normalized_action(double action) const {
  return cfg_.actuation_mode == ActuationMode::Intensity ? action / params_.I_max : action;
}

Environment::Step Environment::step(double action, double raw_action) {
  if (done()) throw std::logic_error("episode already finished");
  std::vector<TrajectorySample>* dense = record_dense_ ? &trace_.dense : nullptr;
  const PlantState next = simulate_period(states_.back(), action, k_, cfg_, episode_params_, dense);
  if (dense) trace_.dense_period.resize(trace_.dense.size(), k_);

  const double reward = stage_reward(next, k_, cfg_);
  trace_.periods.push_back({k_, obs_, action, raw_action, reward, next});
  states_.push_back(next);
  actions_.push_back(normalized_action(action));
  ++k_;

  if (done()) {
    if (dense) {
      const double last_i = trace_.dense.empty() ? 0.0 : trace_.dense.back().intensity;
      trace_.dense.push_back({cfg_.grid.horizon(), next.b, next.g, next.p, last_i});
      trace_.dense_period.push_back(k_ - 1);
      trace_.complete = true;
    }
  } else {
    obs_ = build_observation(states_, actions_, k_, cfg_.grid, episode_params_);
  }
  return {obs_, reward, done()};
}

}  // namespace pwmopt
