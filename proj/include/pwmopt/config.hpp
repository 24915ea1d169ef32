#pragma once

#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "pwmopt/env.hpp"
#include "pwmopt/model.hpp"
#include "pwmopt/trainer.hpp"

namespace pwmopt {

/// Everything needed to reproduce one run.
struct RunConfig {
  ModelParams model{};
  ScenarioConfig scenario{};
  TrainConfig train{};
  std::string output_dir = "runs";
  std::string label = "run";

  void validate() const;

  bool operator==(const RunConfig&) const = default;
};

/// Config problem. `where` is a dotted field path or "line N, column M".
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string where, std::string detail)
      : std::runtime_error(where.empty() ? detail : where + ": " + detail),
        where_(std::move(where)),
        detail_(std::move(detail)) {}
  const std::string& where() const { return where_; }
  const std::string& detail() const { return detail_; }

 private:
  std::string where_;
  std::string detail_;
};

nlohmann::json to_json(const RunConfig& cfg);

/// Missing keys keep their defaults; unknown keys are rejected.
RunConfig run_config_from_json(const nlohmann::json& j);

RunConfig parse_run_config(std::string_view text);
RunConfig load_run_config(const std::string& path);
void save_run_config(const std::string& path, const RunConfig& cfg);

/// Applies `a.b.c=value` assignments. The value is read as JSON when it
/// parses as JSON, otherwise as a string.
void apply_overrides(nlohmann::json& j, const std::vector<std::string>& assignments);

}  // namespace pwmopt
