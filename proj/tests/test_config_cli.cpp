#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <unistd.h>

#include "doctest.h"
#include "pwmopt/cli.hpp"
#include "pwmopt/config.hpp"

using namespace pwmopt;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    static int counter = 0;
    path = fs::temp_directory_path() /
           ("pwmopt_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

int run_cli(std::vector<std::string> args, std::string* err_out = nullptr) {
  args.insert(args.begin(), "pwmopt");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream log, err;
  const int rc = cli::run(static_cast<int>(argv.size()), argv.data(), log, err);
  if (err_out) *err_out = err.str();
  return rc;
}

int count_lines(const std::string& s) { return static_cast<int>(std::count(s.begin(), s.end(), '\n')); }

}  // namespace

TEST_CASE("config round trip") {
  RunConfig c;
  c.label = "x";
  c.model.k_I = 5.5086e-7;
  c.scenario.uncertainty_level = 0.1 + 0.2;  // not exactly representable as typed
  c.scenario.reference.segments = {{5.0, 1.0 / 3.0}, {24.0, 2.0}};
  c.scenario.randomize.p = false;
  c.train.master_seed = 0xFFFFFFFFFFFFFFFFULL;
  c.train.optimizer = OptimizerKind::Adam;
  const std::string text = to_json(c).dump(2);
  const RunConfig back = parse_run_config(text);
  CHECK(back == c);
  CHECK(to_json(back).dump(2) == text);
  CHECK(parse_run_config("{}") == RunConfig{});
}

TEST_CASE("config diagnostics") {
  auto where = [](const std::string& text) {
    try {
      parse_run_config(text);
    } catch (const ConfigError& e) {
      return e.where();
    }
    return std::string("<none>");
  };
  CHECK(where(R"({"scenario": {"uncertainty": 0.1}})") == "scenario.uncertainty");
  CHECK(where(R"({"train": {"epochs": "ten"}})") == "train.epochs");
  CHECK(where(R"({"train": {"epochs": 1.5}})") == "train.epochs");
  CHECK(where(R"({"train": {"seed": -1}})") == "train.seed");
  CHECK(where(R"({"scenario": {"actuation_mode": "analog"}})") == "scenario.actuation_mode");
  CHECK(where(R"({"scenario": {"reference": [{"end": 24, "level": 3}]}})") ==
        "scenario.reference[0].level");
  CHECK(where("{\n  \"label\": \"a\",\n  \"train\": {,}\n}") == "line 3, column 13");

  RunConfig c;
  c.train.n_epochs = 0;
  CHECK_THROWS_WITH_AS(c.validate(), doctest::Contains("train"), ConfigError);
  c = {};
  c.label = "";
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = {};
  c.model.d_l = -1;
  CHECK_THROWS_WITH_AS(c.validate(), doctest::Contains("model"), ConfigError);
}

TEST_CASE("dotted overrides") {
  nlohmann::json j = to_json(RunConfig{});
  apply_overrides(j, {"scenario.uncertainty_level=0.05", "train.optimizer=adam", "label=abc",
                      "scenario.randomize.g=false", "train.epochs=12"});
  const RunConfig c = run_config_from_json(j);
  CHECK(c.scenario.uncertainty_level == 0.05);
  CHECK(c.train.optimizer == OptimizerKind::Adam);
  CHECK(c.label == "abc");
  CHECK_FALSE(c.scenario.randomize.g);
  CHECK(c.train.n_epochs == 12);
  CHECK_THROWS_AS(apply_overrides(j, {"novalue"}), ConfigError);
  CHECK_THROWS_AS(apply_overrides(j, {"label.x=1"}), ConfigError);
  nlohmann::json k = to_json(RunConfig{});
  apply_overrides(k, {"scenario.typo=1"});
  CHECK_THROWS_AS(run_config_from_json(k), ConfigError);
}

TEST_CASE("train command") {
  TempDir tmp;
  const std::string out = tmp.path.string();
  std::string err;
  CHECK(run_cli({"train", "--config", (tmp.path / "missing.json").string()}, &err) == 2);
  CHECK(err.find("missing.json") != std::string::npos);

  {
    std::ofstream bad(tmp.path / "bad.json");
    bad << "{\"train\": {\"epochs\": 0}}";
  }
  CHECK(run_cli({"train", "--config", (tmp.path / "bad.json").string(), "--out", out}) == 2);
  CHECK(run_cli({"train", "--set", "scenario.bogus=1", "--out", out}) == 2);
  CHECK(run_cli({"train", "--scenario", "analog", "--out", out}) == 2);
  CHECK(run_cli({"bogus"}) == 2);

  const std::vector<std::string> smoke{"train", "--scenario", "pwm", "--uncertainty", "0",
                                       "--epochs", "50", "--mc", "16", "--seed", "7",
                                       "--out", out, "--label", "a"};
  REQUIRE(run_cli(smoke) == 0);
  for (const char* f : {"epochs.csv", "best_policy.ckpt", "resolved_config.json"}) {
    CHECK(fs::exists(tmp.path / "a" / f));
  }
  const std::string epochs = slurp(tmp.path / "a" / "epochs.csv");
  CHECK(count_lines(epochs) == 51);
  CHECK(epochs.find('\r') == std::string::npos);

  auto again = smoke;
  again.back() = "b";
  REQUIRE(run_cli(again) == 0);
  CHECK(slurp(tmp.path / "b" / "epochs.csv") == epochs);

  // the snapshot alone reproduces the run
  const RunConfig snap = load_run_config((tmp.path / "a" / "resolved_config.json").string());
  CHECK(snap.train.n_epochs == 50);
  CHECK(snap.train.n_mc == 16);
  CHECK(snap.train.master_seed == 7);
  fs::rename(tmp.path / "a", tmp.path / "a_first");
  REQUIRE(run_cli({"train", "--config", (tmp.path / "a_first" / "resolved_config.json").string()}) == 0);
  CHECK(slurp(tmp.path / "a" / "epochs.csv") == epochs);
  CHECK(slurp(tmp.path / "a" / "resolved_config.json") ==
        slurp(tmp.path / "a_first" / "resolved_config.json"));

  // a wildly large step drives the network to non-finite outputs
  CHECK(run_cli({"train", "--epochs", "20", "--mc", "4", "--optimizer", "adam", "--lr", "1e300",
                 "--out", out, "--label", "boom"}) == 3);
}

TEST_CASE("eval command") {
  TempDir tmp;
  const std::string out = tmp.path.string();
  REQUIRE(run_cli({"train", "--epochs", "3", "--mc", "4", "--out", out, "--label", "t"}) == 0);
  const std::string ckpt = (tmp.path / "t" / "best_policy.ckpt").string();

  REQUIRE(run_cli({"eval", "--checkpoint", ckpt, "--n-eval", "1", "--uncertainty", "0", "--out",
                   out, "--label", "e1"}) == 0);
  std::istringstream trace(slurp(tmp.path / "e1" / "trace_0.csv"));
  std::string line;
  std::getline(trace, line);
  CHECK(line == "t,b,g,p,I,period,action,reward");
  std::set<int> periods;
  int rewards = 0;
  while (std::getline(trace, line)) {
    std::vector<std::string> cols;
    std::stringstream ls(line);
    for (std::string c; std::getline(ls, c, ',');) cols.push_back(c);
    periods.insert(std::stoi(cols.at(5)));
    if (line.back() != ',') ++rewards;
  }
  CHECK(periods.size() == 24);
  CHECK(rewards == 24);
  CHECK_FALSE(fs::exists(tmp.path / "e1" / "trace_1.csv"));

  REQUIRE(run_cli({"eval", "--checkpoint", ckpt, "--n-eval", "4", "--deterministic", "--out", out,
                   "--label", "e2"}) == 0);
  std::istringstream summary(slurp(tmp.path / "e2" / "eval_summary.csv"));
  std::getline(summary, line);
  CHECK(line == "period,t,b_mean,b_sd,action_mean,action_sd,reference");
  int rows = 0;
  while (std::getline(summary, line)) {
    std::vector<std::string> cols;
    std::stringstream ls(line);
    for (std::string c; std::getline(ls, c, ',');) cols.push_back(c);
    CHECK(cols.at(3) == "0");
    ++rows;
  }
  CHECK(rows == 24);

  {
    std::ofstream f(tmp.path / "small.ckpt");
    f << R"({"format":"pwmopt-policy","version":1,"layers":[{"rows":2,"cols":9,"weights":)"
      << "[" << std::string(17 * 2, ' ') << "0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0]"
      << R"(,"bias":[0,0]}]})";
  }
  CHECK(run_cli({"eval", "--checkpoint", (tmp.path / "small.ckpt").string(), "--out", out}) == 2);
  CHECK(run_cli({"eval", "--checkpoint", (tmp.path / "nope.ckpt").string(), "--out", out}) == 2);
}

TEST_CASE("dose-response command") {
  TempDir tmp;
  const fs::path csv = tmp.path / "dose.csv";
  REQUIRE(run_cli({"dose-response", "--points", "101", "--output", csv.string()}) == 0);
  const std::string text = slurp(csv);
  CHECK(count_lines(text) == 203);
  CHECK(text.rfind("mode,input_normalized,activation_normalized\n", 0) == 0);
  CHECK(run_cli({"dose-response", "--points", "1", "--output", csv.string()}) == 2);
  CHECK(run_cli({"dose-response", "--output", (tmp.path / "no" / "such" / "dir.csv").string()}) == 2);
}

TEST_CASE("default output root") {
  TempDir tmp;
  ::setenv("PWMOPT_OUTPUT_ROOT", tmp.path.c_str(), 1);
  CHECK(cli::default_output_root() == tmp.path.string());
  const RunConfig c = cli::resolve_config({});
  CHECK(c.output_dir == tmp.path.string());
  ::unsetenv("PWMOPT_OUTPUT_ROOT");
  CHECK(cli::default_output_root() == "runs");
}

TEST_CASE("sweep command") {
  TempDir tmp;
  REQUIRE(run_cli({"sweep", "--epochs", "2", "--mc", "3", "--n-eval", "3", "--out",
                   tmp.path.string(), "--label", "sw"}) == 0);
  const std::string summary = slurp(tmp.path / "sw" / "sweep_summary.csv");
  CHECK(count_lines(summary) == 5);
  for (const char* level : {"u0", "u0.025", "u0.05", "u0.075"}) {
    CHECK(fs::exists(tmp.path / "sw" / level / "epochs.csv"));
    CHECK(fs::exists(tmp.path / "sw" / level / "eval_summary.csv"));
  }
}
