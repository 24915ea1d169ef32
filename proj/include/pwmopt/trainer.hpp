#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "pwmopt/env.hpp"
#include "pwmopt/policy.hpp"

namespace pwmopt {

enum class OptimizerKind {
  GradientAscent,  // theta += lr * g
  Adam,            // adaptive moments, opt-in
};

std::string_view to_string(OptimizerKind kind);
OptimizerKind parse_optimizer(std::string_view text);

struct TrainConfig {
  int n_epochs = 1000;
  int n_mc = 100;
  double learning_rate = 1e-3;
  int patience = 100;
  double epsilon_baseline = 1e-8;
  std::uint64_t master_seed = 0;
  OptimizerKind optimizer = OptimizerKind::GradientAscent;
  int threads = 1;  // rollout workers; results do not depend on this

  void validate() const;

  bool operator==(const TrainConfig&) const = default;
};

struct EpochStats {
  int epoch = 0;
  double mean_return = 0.0;
  double sd_return = 0.0;  // population SD over the batch
  bool best_so_far = false;
  int failed_rollouts = 0;
};

/// Return assigned to a rollout whose integration broke down.
inline constexpr double kFailedReturn = -1e6;

struct RolloutOptions {
  bool deterministic = false;  // apply the policy mean instead of sampling
  bool record_dense = false;
};

struct RolloutResult {
  EpisodeTrace trace;
  std::vector<Observation> observations;  // z_k at which each action was drawn
  std::vector<double> raw_actions;
  double ret = 0.0;
  bool failed = false;
  double failure_time = 0.0;
};

/// One episode of n_T periods under pi(. | z, theta). Integration failure is
/// caught: the rollout is flagged and its return set to kFailedReturn.
RolloutResult rollout(const PolicyParams& theta, const ScenarioConfig& scenario,
                      const ModelParams& params, Rng& rng, const RolloutOptions& options = {});

struct ReturnMoments {
  double mean = 0.0;
  double sd = 0.0;  // population
};

ReturnMoments return_moments(std::span<const double> returns);

/// (J_j - mean) / (sd + epsilon) for each rollout.
std::vector<double> normalized_advantages(std::span<const double> returns, double epsilon);

/// Score-function estimate (1/n) sum_j A_j * scores_j with normalized
/// advantages A_j; scores_j is the summed grad-log-prob of rollout j.
std::vector<double> estimate_gradient_from_scores(std::span<const double> returns,
                                                  std::span<const std::vector<double>> scores,
                                                  double epsilon);

/// Same estimator evaluated directly on a batch of rollouts of theta.
std::vector<double> estimate_gradient(std::span<const RolloutResult> batch,
                                      const PolicyParams& theta, double epsilon);

/// Parameter update rule, ascent direction.
class ParameterUpdater {
 public:
  ParameterUpdater(OptimizerKind kind, double learning_rate, std::size_t n_params);

  /// Step to add to theta for gradient grad.
  std::vector<double> step(std::span<const double> grad);
  void apply(PolicyParams& theta, std::span<const double> grad);

 private:
  OptimizerKind kind_;
  double lr_;
  std::vector<double> m_;
  std::vector<double> v_;
  long t_ = 0;
};

class TrainingAborted : public std::runtime_error {
 public:
  TrainingAborted(int epoch, double param_norm, const std::string& what)
      : std::runtime_error(what + " (epoch " + std::to_string(epoch) +
                           ", |theta| = " + std::to_string(param_norm) + ")"),
        epoch_(epoch),
        param_norm_(param_norm) {}
  int epoch() const { return epoch_; }
  double param_norm() const { return param_norm_; }

 private:
  int epoch_;
  double param_norm_;
};

struct TrainCallbacks {
  std::function<void(const EpochStats&)> on_epoch;
  std::function<void(const PolicyParams&, const EpochStats&)> on_new_best;
};

struct TrainResult {
  PolicyParams best;          // parameters used in the best epoch
  int best_epoch = -1;
  double best_mean_return = 0.0;
  double best_sd_return = 0.0;
  PolicyParams last;          // parameters after the final update
  std::vector<EpochStats> history;
  bool early_stopped = false;
};

/// Runs n_mc rollouts for one epoch. Rollout j uses
/// Rng(derive_seed(master_seed, epoch, j)).
std::vector<RolloutResult> run_epoch_rollouts(const PolicyParams& theta, const TrainConfig& cfg,
                                              const ScenarioConfig& scenario,
                                              const ModelParams& params, int epoch);

/// Policy-gradient training with normalized baseline, early stopping after
/// `patience` epochs without a strictly better mean return, and best-epoch
/// selection. Throws TrainingAborted on a non-finite gradient or network
/// output.
TrainResult train(const TrainConfig& cfg, const ScenarioConfig& scenario,
                  const ModelParams& params, PolicyParams theta0,
                  const TrainCallbacks& callbacks = {});

/// Deterministic initial parameters for a run.
PolicyParams initial_policy(std::uint64_t master_seed);

/// `epoch,mean_return,sd_return,best_so_far`
void write_epoch_header(std::ostream& out);
void write_epoch_row(std::ostream& out, const EpochStats& stats);

struct PeriodSummary {
  int period = 0;
  double t = 0.0;  // end of the period, where b is sampled
  double b_mean = 0.0;
  double b_sd = 0.0;
  double action_mean = 0.0;
  double action_sd = 0.0;
  double reference = 0.0;
};

struct EvaluationResult {
  std::vector<PeriodSummary> periods;
  std::vector<double> returns;
  double return_mean = 0.0;
  double return_sd = 0.0;
  double mean_abs_tracking_error = 0.0;  // mean |b_k - r_k| over episodes and periods
  int failed = 0;
  std::vector<EpisodeTrace> traces;
  EpisodeTrace mean_policy_trace;  // one episode with mean actions, nominal start
  double mean_policy_return = 0.0;
};

struct EvaluationOptions {
  int n_eval = 100;
  std::uint64_t seed = 0;
  bool deterministic = false;  // every episode uses mean actions
  bool keep_traces = false;
  bool record_dense = false;
};

/// Episode i draws its randomization and actions from
/// Rng(derive_seed(seed, kEvalStream, i)). Standard deviations are
/// population SDs.
EvaluationResult evaluate(const PolicyParams& theta, const ScenarioConfig& scenario,
                          const ModelParams& params, const EvaluationOptions& options);

/// `period,t,b_mean,b_sd,action_mean,action_sd,reference`
void write_eval_summary_csv(std::ostream& out, const EvaluationResult& result);

}  // namespace pwmopt
