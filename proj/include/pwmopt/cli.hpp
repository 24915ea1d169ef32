#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "pwmopt/config.hpp"

namespace pwmopt::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;   // bad config, checkpoint or path
inline constexpr int kExitAborted = 3;  // training aborted

/// Config sources shared by train, eval and sweep. Later sources win:
/// defaults, then --config, then --set, then the shorthand flags.
struct ConfigSources {
  std::optional<std::string> config_path;
  std::vector<std::string> set;
  std::optional<std::string> scenario;
  std::optional<double> uncertainty;
  std::optional<int> epochs;
  std::optional<int> mc;
  std::optional<std::uint64_t> seed;
  std::optional<double> learning_rate;
  std::optional<std::string> optimizer;
  std::optional<std::string> out;
  std::optional<std::string> label;
};

/// Default output root: $PWMOPT_OUTPUT_ROOT if set, else "runs".
std::string default_output_root();

/// Throws ConfigError.
RunConfig resolve_config(const ConfigSources& sources);

/// <output_dir>/<label>, created if needed. Throws ConfigError when the
/// directory cannot be created or written.
std::string prepare_run_dir(const RunConfig& cfg);

int cmd_train(const ConfigSources& sources, std::ostream& log, std::ostream& err);

struct EvalOptions {
  std::string checkpoint;
  int n_eval = 100;
  bool deterministic = false;
};

int cmd_eval(const ConfigSources& sources, const EvalOptions& options, std::ostream& log,
             std::ostream& err);

int cmd_dose_response(int n_points, const std::string& output, const ModelParams& params,
                      std::ostream& log, std::ostream& err);

/// Trains and evaluates one policy per uncertainty level 0, 2.5, 5, 7.5 %.
int cmd_sweep(const ConfigSources& sources, int n_eval, std::ostream& log, std::ostream& err);

/// Full command line entry point.
int run(int argc, const char* const* argv, std::ostream& log, std::ostream& err);

}  // namespace pwmopt::cli
