#include "pwmopt/cli.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "pwmopt/csv.hpp"
#include "pwmopt/pwm.hpp"
#include "pwmopt/trainer.hpp"

namespace fs = std::filesystem;

namespace pwmopt::cli {

std::string default_output_root() {
  const char* env = std::getenv("PWMOPT_OUTPUT_ROOT");
  return env && *env ? env : "runs";
}

RunConfig resolve_config(const ConfigSources& src) {
  nlohmann::json j;
  if (src.config_path) {
    if (!fs::exists(*src.config_path)) throw ConfigError(*src.config_path, "config file not found");
    j = to_json(load_run_config(*src.config_path));
  } else {
    RunConfig defaults;
    defaults.output_dir = default_output_root();
    j = to_json(defaults);
  }
  apply_overrides(j, src.set);
  RunConfig cfg = run_config_from_json(j);
  try {
    if (src.scenario) cfg.scenario.actuation_mode = parse_actuation_mode(*src.scenario);
    if (src.optimizer) cfg.train.optimizer = parse_optimizer(*src.optimizer);
  } catch (const std::invalid_argument& e) {
    throw ConfigError("", e.what());
  }
  if (src.uncertainty) cfg.scenario.uncertainty_level = *src.uncertainty;
  if (src.epochs) cfg.train.n_epochs = *src.epochs;
  if (src.mc) cfg.train.n_mc = *src.mc;
  if (src.seed) cfg.train.master_seed = *src.seed;
  if (src.learning_rate) cfg.train.learning_rate = *src.learning_rate;
  if (src.out) cfg.output_dir = *src.out;
  if (src.label) cfg.label = *src.label;
  cfg.validate();
  return cfg;
}

std::string prepare_run_dir(const RunConfig& cfg) {
  const fs::path dir = fs::path(cfg.output_dir) / cfg.label;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) {
    throw ConfigError(dir.string(), "cannot create output directory");
  }
  const fs::path probe = dir / ".write_probe";
  {
    std::ofstream f(probe);
    if (!f) throw ConfigError(dir.string(), "output directory is not writable");
  }
  fs::remove(probe, ec);
  return dir.string();
}

namespace {

std::ofstream open_output(const fs::path& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw ConfigError(path.string(), "cannot open for writing");
  return f;
}

struct TrainOutcome {
  int status = kExitOk;
  TrainResult result;
  std::string dir;
};

TrainOutcome train_run(const RunConfig& cfg, std::ostream& log, std::ostream& err) {
  TrainOutcome out;
  out.dir = prepare_run_dir(cfg);
  const fs::path dir = out.dir;
  save_run_config((dir / "resolved_config.json").string(), cfg);
  std::ofstream epochs = open_output(dir / "epochs.csv");
  write_epoch_header(epochs);
  const std::string ckpt = (dir / "best_policy.ckpt").string();

  TrainCallbacks callbacks;
  callbacks.on_epoch = [&](const EpochStats& s) {
    write_epoch_row(epochs, s);
    if (s.failed_rollouts > 0) {
      err << "epoch " << s.epoch << ": " << s.failed_rollouts << " rollout(s) failed\n";
    }
  };
  callbacks.on_new_best = [&](const PolicyParams& theta, const EpochStats&) {
    save_checkpoint_file(ckpt, theta);
  };
  try {
    out.result = train(cfg.train, cfg.scenario, cfg.model, initial_policy(cfg.train.master_seed),
                       callbacks);
  } catch (const TrainingAborted& e) {
    err << "training aborted: " << e.what() << '\n';
    out.status = kExitAborted;
    return out;
  } catch (const NumericalError& e) {
    err << "training aborted: " << e.what() << '\n';
    out.status = kExitAborted;
    return out;
  }
  epochs.flush();
  if (!epochs) throw ConfigError((dir / "epochs.csv").string(), "write failed");
  log << "trained " << cfg.label << ": " << out.result.history.size() << " epochs, best epoch "
      << out.result.best_epoch << " mean return " << csv::number(out.result.best_mean_return)
      << (out.result.early_stopped ? " (early stop)" : "") << '\n';
  return out;
}

void check_shape(const PolicyParams& theta) {
  PolicyParams expected(PolicyParams::default_widths());
  if (theta.shapes() != expected.shapes()) {
    throw CheckpointError("checkpoint layer shapes do not match the policy network");
  }
}

EvaluationResult eval_run(const RunConfig& cfg, const PolicyParams& theta, int n_eval,
                          bool deterministic, const fs::path& dir, std::ostream& log) {
  EvaluationOptions opts;
  opts.n_eval = n_eval;
  opts.seed = cfg.train.master_seed;
  opts.deterministic = deterministic;
  opts.keep_traces = true;
  opts.record_dense = true;
  EvaluationResult r = evaluate(theta, cfg.scenario, cfg.model, opts);
  {
    std::ofstream f = open_output(dir / "eval_summary.csv");
    write_eval_summary_csv(f, r);
  }
  for (std::size_t i = 0; i < r.traces.size(); ++i) {
    std::ofstream f = open_output(dir / ("trace_" + std::to_string(i) + ".csv"));
    write_trace_csv(f, r.traces[i]);
  }
  {
    std::ofstream f = open_output(dir / "trace_mean_policy.csv");
    write_trace_csv(f, r.mean_policy_trace);
  }
  log << "evaluated " << n_eval << " episodes: return " << csv::number(r.return_mean) << " +- "
      << csv::number(r.return_sd) << ", mean |b - r| " << csv::number(r.mean_abs_tracking_error);
  if (r.failed > 0) log << ", " << r.failed << " failed";
  log << '\n';
  return r;
}

template <class F>
int guarded(std::ostream& err, F&& body) {
  try {
    return body();
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
  } catch (const CheckpointError& e) {
    err << "checkpoint error: " << e.what() << '\n';
  } catch (const fs::filesystem_error& e) {
    err << "path error: " << e.what() << '\n';
  }
  return kExitConfig;
}

}  // namespace

int cmd_train(const ConfigSources& sources, std::ostream& log, std::ostream& err) {
  return guarded(err, [&] { return train_run(resolve_config(sources), log, err).status; });
}

int cmd_eval(const ConfigSources& sources, const EvalOptions& options, std::ostream& log,
             std::ostream& err) {
  return guarded(err, [&] {
    if (options.n_eval < 1) throw ConfigError("n_eval", "must be >= 1");
    const RunConfig cfg = resolve_config(sources);
    const PolicyParams theta = load_checkpoint_file(options.checkpoint);
    check_shape(theta);
    const fs::path dir = prepare_run_dir(cfg);
    eval_run(cfg, theta, options.n_eval, options.deterministic, dir, log);
    return kExitOk;
  });
}

int cmd_dose_response(int n_points, const std::string& output, const ModelParams& params,
                      std::ostream& log, std::ostream& err) {
  return guarded(err, [&] {
    if (n_points < 2) throw ConfigError("points", "must be >= 2");
    const auto rows = dose_response_table(static_cast<std::size_t>(n_points), params);
    std::ostringstream buf;
    write_dose_response_csv(buf, rows);
    std::ofstream f(output, std::ios::binary);
    if (!f) throw ConfigError(output, "cannot open for writing");
    f << buf.str();
    f.flush();
    if (!f) throw ConfigError(output, "write failed");
    log << "wrote " << rows.size() << " rows to " << output << '\n';
    return kExitOk;
  });
}

int cmd_sweep(const ConfigSources& sources, int n_eval, std::ostream& log, std::ostream& err) {
  return guarded(err, [&] {
    if (n_eval < 1) throw ConfigError("n_eval", "must be >= 1");
    const RunConfig base = resolve_config(sources);
    const fs::path root = prepare_run_dir(base);
    std::ofstream summary = open_output(root / "sweep_summary.csv");
    summary << "uncertainty_level,best_epoch,best_mean_return,best_sd_return,eval_return_mean,"
               "eval_return_sd,mean_abs_tracking_error\n";
    for (const double level : {0.0, 0.025, 0.05, 0.075}) {
      RunConfig cfg = base;
      cfg.scenario.uncertainty_level = level;
      cfg.output_dir = root.string();
      cfg.label = "u" + csv::number(level);
      cfg.validate();
      TrainOutcome t = train_run(cfg, log, err);
      if (t.status != kExitOk) return t.status;
      const EvaluationResult r = eval_run(cfg, t.result.best, n_eval, false, t.dir, log);
      summary << csv::number(level) << ',' << t.result.best_epoch << ','
              << csv::number(t.result.best_mean_return) << ','
              << csv::number(t.result.best_sd_return) << ',' << csv::number(r.return_mean) << ','
              << csv::number(r.return_sd) << ',' << csv::number(r.mean_abs_tracking_error)
              << '\n';
    }
    return kExitOk;
  });
}

namespace {

void add_config_flags(CLI::App* app, ConfigSources& s) {
  app->add_option("--config", s.config_path, "JSON run config");
  app->add_option("--set", s.set, "override a config field, e.g. scenario.uncertainty_level=0.05")
      ->take_all();
  app->add_option("--scenario", s.scenario, "actuation mode: pwm or intensity");
  app->add_option("--uncertainty", s.uncertainty, "relative SD of initial state and q_p_max");
  app->add_option("--epochs", s.epochs, "training epochs");
  app->add_option("--mc", s.mc, "rollouts per epoch");
  app->add_option("--seed", s.seed, "master seed");
  app->add_option("--lr", s.learning_rate, "learning rate");
  app->add_option("--optimizer", s.optimizer, "gradient_ascent or adam");
  app->add_option("--out", s.out, "output root (default $PWMOPT_OUTPUT_ROOT or ./runs)");
  app->add_option("--label", s.label, "run label; outputs go to <out>/<label>");
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& log, std::ostream& err) {
  CLI::App app{"PWM light-input policy optimization for an optogenetic chemostat"};
  app.require_subcommand(1);

  ConfigSources train_src;
  auto* train_cmd = app.add_subcommand("train", "train a policy");
  add_config_flags(train_cmd, train_src);

  ConfigSources eval_src;
  EvalOptions eval_opts;
  auto* eval_cmd = app.add_subcommand("eval", "evaluate a checkpoint");
  add_config_flags(eval_cmd, eval_src);
  eval_cmd->add_option("--checkpoint", eval_opts.checkpoint, "policy checkpoint")->required();
  eval_cmd->add_option("--n-eval", eval_opts.n_eval, "evaluation episodes");
  eval_cmd->add_flag("--deterministic", eval_opts.deterministic, "apply mean actions");

  int n_points = 101;
  std::string dose_out = "dose_response.csv";
  auto* dose_cmd = app.add_subcommand("dose-response", "export the dose-response table");
  dose_cmd->add_option("--points", n_points, "grid points per mode");
  dose_cmd->add_option("--output", dose_out, "CSV path");

  ConfigSources sweep_src;
  int sweep_n_eval = 200;
  auto* sweep_cmd = app.add_subcommand("sweep", "train and evaluate at 0, 2.5, 5, 7.5 % uncertainty");
  add_config_flags(sweep_cmd, sweep_src);
  sweep_cmd->add_option("--n-eval", sweep_n_eval, "evaluation episodes per level");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, log, err) == 0 ? kExitOk : kExitConfig;
  }

  if (train_cmd->parsed()) return cmd_train(train_src, log, err);
  if (eval_cmd->parsed()) return cmd_eval(eval_src, eval_opts, log, err);
  if (dose_cmd->parsed()) return cmd_dose_response(n_points, dose_out, ModelParams{}, log, err);
  return cmd_sweep(sweep_src, sweep_n_eval, log, err);
}

}  // namespace pwmopt::cli
