#include "pwmopt/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

namespace pwmopt {

using nlohmann::json;

void RunConfig::validate() const {
  auto section = [](const char* name, auto&& check) {
    try {
      check();
    } catch (const std::invalid_argument& e) {
      throw ConfigError(name, e.what());
    } catch (const std::domain_error& e) {
      throw ConfigError(name, e.what());
    }
  };
  section("model", [&] { model.validate(); });
  section("scenario", [&] {
    scenario.validate();
    scenario.nominal_initial.validate();
  });
  section("train", [&] { train.validate(); });
  if (output_dir.empty()) throw ConfigError("output_dir", "must not be empty");
  if (label.empty()) throw ConfigError("label", "must not be empty");
}

json to_json(const RunConfig& cfg) {
  const ModelParams& m = cfg.model;
  const ScenarioConfig& s = cfg.scenario;
  const TrainConfig& t = cfg.train;
  json reference = json::array();
  for (const auto& seg : s.reference.segments) {
    reference.push_back({{"end", seg.end}, {"setpoint", seg.setpoint}});
  }
  return {
      {"label", cfg.label},
      {"output_dir", cfg.output_dir},
      {"model",
       {{"mu_max", m.mu_max}, {"f_c", m.f_c}, {"Y_gb", m.Y_gb}, {"k_g", m.k_g},
        {"k_p", m.k_p}, {"d_l", m.d_l}, {"g_in", m.g_in}, {"d_p", m.d_p},
        {"q_p_max", m.q_p_max}, {"n_hill", m.n_hill}, {"k_I", m.k_I}, {"I_max", m.I_max}}},
      {"scenario",
       {{"actuation_mode", std::string(to_string(s.actuation_mode))},
        {"uncertainty_level", s.uncertainty_level},
        {"nominal_initial",
         {{"b", s.nominal_initial.b}, {"g", s.nominal_initial.g}, {"p", s.nominal_initial.p}}},
        {"period", s.grid.period},
        {"n_periods", s.grid.n_periods},
        {"reference", reference},
        {"q_s", s.q_s},
        {"q_t", s.q_t},
        {"integrator_step", s.integrator_step},
        {"randomize",
         {{"b", s.randomize.b}, {"g", s.randomize.g}, {"p", s.randomize.p},
          {"q_p_max", s.randomize.q_p_max}}}}},
      {"train",
       {{"epochs", t.n_epochs}, {"rollouts", t.n_mc}, {"learning_rate", t.learning_rate},
        {"patience", t.patience}, {"epsilon_baseline", t.epsilon_baseline},
        {"seed", t.master_seed}, {"optimizer", std::string(to_string(t.optimizer))},
        {"threads", t.threads}}},
  };
}

namespace {

// Walks one JSON object, reading known keys and rejecting the rest.
class ObjectReader {
 public:
  ObjectReader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(path_.empty() ? "<root>" : path_, "expected an object");
  }

  ~ObjectReader() noexcept(false) {
    if (std::uncaught_exceptions() > 0) return;
    for (const auto& [key, value] : j_.items()) {
      if (!seen_.count(key)) throw ConfigError(sub(key), "unknown field");
    }
  }

  template <class T>
  void get(const char* key, T& out) {
    seen_.insert(key);
    auto it = j_.find(key);
    if (it == j_.end()) return;
    if constexpr (std::is_same_v<T, double>) {
      if (!it->is_number()) throw ConfigError(sub(key), "expected a number");
    } else if constexpr (std::is_same_v<T, bool>) {
      if (!it->is_boolean()) throw ConfigError(sub(key), "expected true or false");
    } else if constexpr (std::is_same_v<T, std::string>) {
      if (!it->is_string()) throw ConfigError(sub(key), "expected a string");
    } else if constexpr (std::is_integral_v<T>) {
      if (!it->is_number_integer()) throw ConfigError(sub(key), "expected an integer");
      if constexpr (std::is_unsigned_v<T>) {
        if (it->is_number_integer() && !it->is_number_unsigned()) {
          throw ConfigError(sub(key), "expected a nonnegative integer");
        }
      }
    }
    try {
      out = it->get<T>();
    } catch (const json::exception& e) {
      throw ConfigError(sub(key), e.what());
    }
  }

  template <class F>
  void object(const char* key, F&& read) {
    seen_.insert(key);
    auto it = j_.find(key);
    if (it == j_.end()) return;
    ObjectReader child(*it, sub(key));
    read(child);
  }

  const json* raw(const char* key) {
    seen_.insert(key);
    auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }

  std::string sub(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

template <class Parse>
auto parse_enum(ObjectReader& r, const char* key, Parse parse, auto current) {
  std::string text;
  r.get(key, text);
  if (text.empty()) return current;
  try {
    return parse(text);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(r.sub(key), e.what());
  }
}

}  // namespace

RunConfig run_config_from_json(const json& j) {
  RunConfig cfg;
  ObjectReader root(j, "");
  root.get("label", cfg.label);
  root.get("output_dir", cfg.output_dir);
  root.object("model", [&](ObjectReader& r) {
    ModelParams& m = cfg.model;
    r.get("mu_max", m.mu_max);
    r.get("f_c", m.f_c);
    r.get("Y_gb", m.Y_gb);
    r.get("k_g", m.k_g);
    r.get("k_p", m.k_p);
    r.get("d_l", m.d_l);
    r.get("g_in", m.g_in);
    r.get("d_p", m.d_p);
    r.get("q_p_max", m.q_p_max);
    r.get("n_hill", m.n_hill);
    r.get("k_I", m.k_I);
    r.get("I_max", m.I_max);
  });
  root.object("scenario", [&](ObjectReader& r) {
    ScenarioConfig& s = cfg.scenario;
    s.actuation_mode = parse_enum(r, "actuation_mode", parse_actuation_mode, s.actuation_mode);
    r.get("uncertainty_level", s.uncertainty_level);
    r.object("nominal_initial", [&](ObjectReader& x) {
      x.get("b", s.nominal_initial.b);
      x.get("g", s.nominal_initial.g);
      x.get("p", s.nominal_initial.p);
    });
    r.get("period", s.grid.period);
    r.get("n_periods", s.grid.n_periods);
    if (const json* ref = r.raw("reference")) {
      const std::string path = r.sub("reference");
      if (!ref->is_array()) throw ConfigError(path, "expected an array of {end, setpoint}");
      s.reference.segments.clear();
      for (std::size_t i = 0; i < ref->size(); ++i) {
        ReferenceSegment seg;
        ObjectReader e((*ref)[i], path + "[" + std::to_string(i) + "]");
        e.get("end", seg.end);
        e.get("setpoint", seg.setpoint);
        s.reference.segments.push_back(seg);
      }
    }
    r.get("q_s", s.q_s);
    r.get("q_t", s.q_t);
    r.get("integrator_step", s.integrator_step);
    r.object("randomize", [&](ObjectReader& x) {
      x.get("b", s.randomize.b);
      x.get("g", s.randomize.g);
      x.get("p", s.randomize.p);
      x.get("q_p_max", s.randomize.q_p_max);
    });
  });
  root.object("train", [&](ObjectReader& r) {
    TrainConfig& t = cfg.train;
    r.get("epochs", t.n_epochs);
    r.get("rollouts", t.n_mc);
    r.get("learning_rate", t.learning_rate);
    r.get("patience", t.patience);
    r.get("epsilon_baseline", t.epsilon_baseline);
    r.get("seed", t.master_seed);
    t.optimizer = parse_enum(r, "optimizer", parse_optimizer, t.optimizer);
    r.get("threads", t.threads);
  });
  return cfg;
}

namespace {

std::string line_column(std::string_view text, std::size_t byte) {
  std::size_t line = 1, col = 1;
  for (std::size_t i = 0; i < byte && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return "line " + std::to_string(line) + ", column " + std::to_string(col);
}

}  // namespace

RunConfig parse_run_config(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    // byte is one past the offending character
    throw ConfigError(line_column(text, e.byte > 0 ? e.byte - 1 : 0), "malformed JSON");
  }
  return run_config_from_json(j);
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw ConfigError(path, "cannot open config file");
  std::ostringstream ss;
  ss << f.rdbuf();
  try {
    return parse_run_config(ss.str());
  } catch (const ConfigError& e) {
    throw ConfigError(e.where().empty() ? path : path + ": " + e.where(), e.detail());
  }
}

void save_run_config(const std::string& path, const RunConfig& cfg) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw ConfigError(path, "cannot open for writing");
  f << to_json(cfg).dump(2) << '\n';
  if (!f) throw ConfigError(path, "write failed");
}

void apply_overrides(json& j, const std::vector<std::string>& assignments) {
  for (const auto& a : assignments) {
    const auto eq = a.find('=');
    if (eq == std::string::npos || eq == 0) {
      throw ConfigError(a, "override must have the form key.path=value");
    }
    const std::string path = a.substr(0, eq);
    const std::string text = a.substr(eq + 1);
    json value;
    try {
      value = json::parse(text);
    } catch (const json::parse_error&) {
      value = text;
    }
    json* node = &j;
    std::size_t start = 0;
    while (true) {
      const auto dot = path.find('.', start);
      const std::string key = path.substr(start, dot == std::string::npos ? dot : dot - start);
      if (key.empty()) throw ConfigError(path, "empty path component");
      if (!node->is_object()) throw ConfigError(path, "'" + key + "' is not inside an object");
      if (dot == std::string::npos) {
        (*node)[key] = value;
        break;
      }
      node = &(*node)[key];
      if (node->is_null()) *node = json::object();
      start = dot + 1;
    }
  }
}

}  // namespace pwmopt
