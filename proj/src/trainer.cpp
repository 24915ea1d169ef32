#include "pwmopt/trainer.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <ostream>
#include <thread>

#include "pwmopt/csv.hpp"
#include "pwmopt/kernels.hpp"

namespace pwmopt {

std::string_view to_string(OptimizerKind kind) {
  return kind == OptimizerKind::Adam ? "adam" : "gradient_ascent";
}

OptimizerKind parse_optimizer(std::string_view text) {
  if (text == "gradient_ascent" || text == "sgd") return OptimizerKind::GradientAscent;
  if (text == "adam") return OptimizerKind::Adam;
  throw std::invalid_argument("unknown optimizer '" + std::string(text) +
                              "' (expected 'gradient_ascent' or 'adam')");
}

void TrainConfig::validate() const {
  if (n_epochs < 1) throw std::invalid_argument("train.epochs must be >= 1");
  if (n_mc < 1) throw std::invalid_argument("train.rollouts must be >= 1");
  if (patience < 1) throw std::invalid_argument("train.patience must be >= 1");
  if (threads < 1) throw std::invalid_argument("train.threads must be >= 1");
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
    throw std::invalid_argument("train.learning_rate must be finite and > 0");
  }
  if (!(epsilon_baseline > 0.0)) throw std::invalid_argument("train.epsilon_baseline must be > 0");
}

RolloutResult rollout(const PolicyParams& theta, const ScenarioConfig& scenario,
                      const ModelParams& params, Rng& rng, const RolloutOptions& options) {
  Environment env(scenario, params, options.record_dense);
  RolloutResult result;
  env.reset(rng);
  const auto n = static_cast<std::size_t>(scenario.grid.n_periods);
  result.observations.reserve(n);
  result.raw_actions.reserve(n);
  const double I_max = params.I_max;
  try {
    while (!env.done()) {
      const Observation z = env.observation();
      const PolicyOutput out = forward(z, theta);
      const ActionSample a =
          options.deterministic
              ? mean_action(out.mean, out.std, scenario.actuation_mode, I_max)
              : sample_action(out.mean, out.std, rng, scenario.actuation_mode, I_max);
      result.observations.push_back(z);
      result.raw_actions.push_back(a.raw);
      env.step(a.applied, a.raw);
    }
    result.ret = env.trace().total_return();
  } catch (const EpisodeFailure& e) {
    result.failed = true;
    result.failure_time = e.time();
    result.ret = kFailedReturn;
  }
  result.trace = env.take_trace();
  return result;
}

ReturnMoments return_moments(std::span<const double> returns) {
  ReturnMoments m;
  if (returns.empty()) return m;
  double sum = 0.0;
  for (double r : returns) sum += r;
  m.mean = sum / static_cast<double>(returns.size());
  if (std::all_of(returns.begin(), returns.end(), [&](double r) { return r == returns.front(); })) {
    m.mean = returns.front();
    return m;
  }
  double ss = 0.0;
  for (double r : returns) ss += (r - m.mean) * (r - m.mean);
  m.sd = std::sqrt(ss / static_cast<double>(returns.size()));
  return m;
}

std::vector<double> normalized_advantages(std::span<const double> returns, double epsilon) {
  const ReturnMoments m = return_moments(returns);
  std::vector<double> adv(returns.size());
  for (std::size_t j = 0; j < returns.size(); ++j) {
    adv[j] = (returns[j] - m.mean) / (m.sd + epsilon);
  }
  return adv;
}

std::vector<double> estimate_gradient_from_scores(std::span<const double> returns,
                                                  std::span<const std::vector<double>> scores,
                                                  double epsilon) {
  if (returns.size() != scores.size() || returns.empty()) {
    throw std::invalid_argument("returns and scores must be non-empty and equally sized");
  }
  const std::vector<double> adv = normalized_advantages(returns, epsilon);
  std::vector<double> grad(scores.front().size(), 0.0);
  const double inv_n = 1.0 / static_cast<double>(returns.size());
  for (std::size_t j = 0; j < scores.size(); ++j) {
    kernels::axpy(adv[j] * inv_n, scores[j], grad);
  }
  return grad;
}

std::vector<double> estimate_gradient(std::span<const RolloutResult> batch,
                                      const PolicyParams& theta, double epsilon) {
  std::vector<double> returns;
  returns.reserve(batch.size());
  for (const auto& r : batch) returns.push_back(r.ret);
  const std::vector<double> adv = normalized_advantages(returns, epsilon);
  std::vector<double> grad(theta.size(), 0.0);
  const double inv_n = 1.0 / static_cast<double>(batch.size());
  // Rollout-index order keeps the reduction reproducible.
  for (std::size_t j = 0; j < batch.size(); ++j) {
    const double w = adv[j] * inv_n;
    if (w == 0.0) continue;
    const auto& r = batch[j];
    for (std::size_t k = 0; k < r.raw_actions.size(); ++k) {
      accumulate_grad_log_prob(r.observations[k], r.raw_actions[k], theta, grad, w);
    }
  }
  return grad;
}

ParameterUpdater::ParameterUpdater(OptimizerKind kind, double learning_rate, std::size_t n_params)
    : kind_(kind), lr_(learning_rate) {
  if (kind_ == OptimizerKind::Adam) {
    m_.assign(n_params, 0.0);
    v_.assign(n_params, 0.0);
  }
}

std::vector<double> ParameterUpdater::step(std::span<const double> grad) {
  std::vector<double> delta(grad.size(), 0.0);
  if (kind_ == OptimizerKind::GradientAscent) {
    kernels::axpy(lr_, grad, delta);
    return delta;
  }
  constexpr double beta1 = 0.9;
  constexpr double beta2 = 0.999;
  constexpr double eps = 1e-8;
  ++t_;
  const double c1 = 1.0 - std::pow(beta1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(beta2, static_cast<double>(t_));
  for (std::size_t i = 0; i < grad.size(); ++i) {
    m_[i] = beta1 * m_[i] + (1.0 - beta1) * grad[i];
    v_[i] = beta2 * v_[i] + (1.0 - beta2) * grad[i] * grad[i];
    delta[i] = lr_ * (m_[i] / c1) / (std::sqrt(v_[i] / c2) + eps);
  }
  return delta;
}

void ParameterUpdater::apply(PolicyParams& theta, std::span<const double> grad) {
  const std::vector<double> delta = step(grad);
  kernels::axpy(1.0, delta, theta.values());
}

std::vector<RolloutResult> run_epoch_rollouts(const PolicyParams& theta, const TrainConfig& cfg,
                                              const ScenarioConfig& scenario,
                                              const ModelParams& params, int epoch) {
  const auto n = static_cast<std::size_t>(cfg.n_mc);
  std::vector<RolloutResult> batch(n);
  std::vector<std::exception_ptr> errors(n);
  auto run_one = [&](std::size_t j) {
    try {
      Rng rng(derive_seed(cfg.master_seed, static_cast<std::uint64_t>(epoch), j));
      batch[j] = rollout(theta, scenario, params, rng);
    } catch (...) {
      errors[j] = std::current_exception();
    }
  };

  const auto workers = std::min<std::size_t>(static_cast<std::size_t>(cfg.threads), n);
  if (workers <= 1) {
    for (std::size_t j = 0; j < n; ++j) run_one(j);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t j = next++; j < n; j = next++) run_one(j);
      });
    }
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return batch;
}

TrainResult train(const TrainConfig& cfg, const ScenarioConfig& scenario,
                  const ModelParams& params, PolicyParams theta0,
                  const TrainCallbacks& callbacks) {
  cfg.validate();
  scenario.validate();
  params.validate();
  if (theta0.size() == 0 || theta0.input_dim() != kObservationDim) {
    throw std::invalid_argument("initial policy does not match the observation dimension");
  }

  TrainResult result;
  PolicyParams theta = std::move(theta0);
  ParameterUpdater updater(cfg.optimizer, cfg.learning_rate, theta.size());
  double best = -std::numeric_limits<double>::infinity();
  int since_best = 0;

  for (int epoch = 0; epoch < cfg.n_epochs; ++epoch) {
    std::vector<RolloutResult> batch;
    try {
      batch = run_epoch_rollouts(theta, cfg, scenario, params, epoch);
    } catch (const NumericalError& e) {
      throw TrainingAborted(epoch, theta.norm(), e.what());
    }

    std::vector<double> returns;
    returns.reserve(batch.size());
    int failed = 0;
    for (const auto& r : batch) {
      returns.push_back(r.ret);
      failed += r.failed ? 1 : 0;
    }
    const ReturnMoments m = return_moments(returns);
    EpochStats stats{epoch, m.mean, m.sd, m.mean > best, failed};
    if (stats.best_so_far) {
      best = m.mean;
      since_best = 0;
      result.best = theta;
      result.best_epoch = epoch;
      result.best_mean_return = m.mean;
      result.best_sd_return = m.sd;
    } else {
      ++since_best;
    }
    result.history.push_back(stats);
    if (callbacks.on_epoch) callbacks.on_epoch(stats);
    if (stats.best_so_far && callbacks.on_new_best) callbacks.on_new_best(theta, stats);

    if (since_best >= cfg.patience) {
      result.early_stopped = true;
      break;
    }
    if (epoch + 1 == cfg.n_epochs) break;

    std::vector<double> grad;
    try {
      grad = estimate_gradient(batch, theta, cfg.epsilon_baseline);
    } catch (const NumericalError& e) {
      throw TrainingAborted(epoch, theta.norm(), e.what());
    }
    if (!std::all_of(grad.begin(), grad.end(), [](double g) { return std::isfinite(g); })) {
      throw TrainingAborted(epoch, theta.norm(), "non-finite policy gradient");
    }
    updater.apply(theta, grad);
  }
  result.last = std::move(theta);
  return result;
}

PolicyParams initial_policy(std::uint64_t master_seed) {
  Rng rng(derive_seed(master_seed, kInitStream, 0));
  return initialize_policy(PolicyParams::default_widths(), rng);
}

void write_epoch_header(std::ostream& out) { out << "epoch,mean_return,sd_return,best_so_far\n"; }

void write_epoch_row(std::ostream& out, const EpochStats& s) {
  out << s.epoch << ',' << csv::number(s.mean_return) << ',' << csv::number(s.sd_return) << ','
      << (s.best_so_far ? 1 : 0) << '\n';
}

namespace {

struct MeanAccumulator {
  double sum = 0.0;
  long n = 0;
  void add(double v) {
    sum += v;
    ++n;
  }
  double mean() const { return n ? sum / static_cast<double>(n) : 0.0; }
};

}  // namespace

EvaluationResult evaluate(const PolicyParams& theta, const ScenarioConfig& scenario,
                          const ModelParams& params, const EvaluationOptions& options) {
  if (options.n_eval < 1) throw std::invalid_argument("n_eval must be >= 1");
  scenario.validate();
  const auto n_periods = static_cast<std::size_t>(scenario.grid.n_periods);
  EvaluationResult result;

  std::vector<std::vector<double>> b_vals(n_periods), a_vals(n_periods);
  MeanAccumulator tracking;
  for (int i = 0; i < options.n_eval; ++i) {
    Rng rng(derive_seed(options.seed, kEvalStream, static_cast<std::uint64_t>(i)));
    RolloutResult r = rollout(theta, scenario, params, rng,
                              {options.deterministic, options.record_dense});
    result.returns.push_back(r.ret);
    if (r.failed) {
      ++result.failed;
    } else {
      for (const auto& rec : r.trace.periods) {
        const auto k = static_cast<std::size_t>(rec.k);
        b_vals[k].push_back(rec.state_after.b);
        a_vals[k].push_back(rec.action);
        tracking.add(std::abs(rec.state_after.b -
                              scenario.reference.at(scenario.grid.period_end(rec.k))));
      }
    }
    if (options.keep_traces) result.traces.push_back(std::move(r.trace));
  }

  for (std::size_t k = 0; k < n_periods; ++k) {
    PeriodSummary s;
    s.period = static_cast<int>(k);
    s.t = scenario.grid.period_end(static_cast<int>(k));
    s.reference = scenario.reference.at(s.t);
    const ReturnMoments bm = return_moments(b_vals[k]);
    const ReturnMoments am = return_moments(a_vals[k]);
    s.b_mean = bm.mean;
    s.b_sd = bm.sd;
    s.action_mean = am.mean;
    s.action_sd = am.sd;
    result.periods.push_back(s);
  }
  const ReturnMoments rm = return_moments(result.returns);
  result.return_mean = rm.mean;
  result.return_sd = rm.sd;
  result.mean_abs_tracking_error = tracking.mean();

  ScenarioConfig nominal = scenario;
  nominal.uncertainty_level = 0.0;
  Rng unused(0);
  RolloutResult det = rollout(theta, nominal, params, unused, {true, true});
  result.mean_policy_return = det.ret;
  result.mean_policy_trace = std::move(det.trace);
  return result;
}

void write_eval_summary_csv(std::ostream& out, const EvaluationResult& result) {
  out << "period,t,b_mean,b_sd,action_mean,action_sd,reference\n";
  for (const auto& s : result.periods) {
    out << s.period << ',' << csv::number(s.t) << ',' << csv::number(s.b_mean) << ','
        << csv::number(s.b_sd) << ',' << csv::number(s.action_mean) << ','
        << csv::number(s.action_sd) << ',' << csv::number(s.reference) << '\n';
  }
}

}  // namespace pwmopt
