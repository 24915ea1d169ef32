#include "pwmopt/policy.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>

#include "json.hpp"
#include "pwmopt/kernels.hpp"

namespace pwmopt {

PolicyParams::PolicyParams(const std::vector<std::size_t>& widths) {
  if (widths.size() < 2) throw std::invalid_argument("a policy needs at least one layer");
  if (widths.back() != 2) throw std::invalid_argument("policy output layer must have 2 units");
  std::size_t offset = 0;
  for (std::size_t i = 0; i + 1 < widths.size(); ++i) {
    if (widths[i] == 0 || widths[i + 1] == 0) throw std::invalid_argument("zero-width layer");
    shapes_.push_back({widths[i + 1], widths[i]});
    offsets_.push_back(offset);
    offset += widths[i + 1] * widths[i] + widths[i + 1];
  }
  values_.assign(offset, 0.0);
}

std::vector<std::size_t> PolicyParams::default_widths() {
  return {kObservationDim, 20, 20, 20, 20, 2};
}

std::span<double> PolicyParams::weights(std::size_t layer) {
  const auto& s = shapes_.at(layer);
  return std::span<double>(values_).subspan(offsets_[layer], s.rows * s.cols);
}

std::span<const double> PolicyParams::weights(std::size_t layer) const {
  const auto& s = shapes_.at(layer);
  return std::span<const double>(values_).subspan(offsets_[layer], s.rows * s.cols);
}

std::span<double> PolicyParams::bias(std::size_t layer) {
  const auto& s = shapes_.at(layer);
  return std::span<double>(values_).subspan(offsets_[layer] + s.rows * s.cols, s.rows);
}

std::span<const double> PolicyParams::bias(std::size_t layer) const {
  const auto& s = shapes_.at(layer);
  return std::span<const double>(values_).subspan(offsets_[layer] + s.rows * s.cols, s.rows);
}

bool PolicyParams::finite() const {
  return std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); });
}

double PolicyParams::norm() const {
  return std::sqrt(kernels::dot(values_, values_));
}

PolicyParams initialize_policy(const std::vector<std::size_t>& widths, Rng& rng) {
  PolicyParams theta(widths);
  for (std::size_t l = 0; l < theta.n_layers(); ++l) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(theta.shapes()[l].cols));
    std::uniform_real_distribution<double> uni(-bound, bound);
    for (double& w : theta.weights(l)) w = uni(rng);
  }
  return theta;
}

namespace {

double logistic(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double softplus(double x) { return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x))); }

}  // namespace

PolicyOutput forward(std::span<const double> z, const PolicyParams& theta, ForwardCache& cache) {
  if (z.size() != theta.input_dim()) throw std::invalid_argument("observation dimension mismatch");
  const std::size_t n = theta.n_layers();
  cache.inputs.resize(n);
  cache.pre.resize(n);
  cache.inputs[0].assign(z.begin(), z.end());
  for (std::size_t l = 0; l < n; ++l) {
    const auto& s = theta.shapes()[l];
    auto& pre = cache.pre[l];
    pre.resize(s.rows);
    kernels::gemv(theta.weights(l), s.rows, s.cols, cache.inputs[l], theta.bias(l), pre);
    if (l + 1 < n) {
      auto& next = cache.inputs[l + 1];
      next.resize(s.rows);
      for (std::size_t i = 0; i < s.rows; ++i) next[i] = pre[i] > 0.0 ? pre[i] : kLeakySlope * pre[i];
    }
  }
  PolicyOutput out;
  out.mean_pre = cache.pre.back()[0];
  out.std_pre = cache.pre.back()[1];
  out.mean = logistic(out.mean_pre);
  out.std = softplus(out.std_pre) + kMinStd;
  if (!std::isfinite(out.mean_pre) || !std::isfinite(out.std_pre)) {
    throw NumericalError("policy network produced a non-finite output");
  }
  cache.out = out;
  return out;
}

PolicyOutput forward(std::span<const double> z, const PolicyParams& theta) {
  ForwardCache cache;
  return forward(z, theta, cache);
}

double gaussian_log_prob(double x, double mean, double std) {
  const double u = (x - mean) / std;
  return -0.5 * u * u - std::log(std) - 0.5 * std::log(2.0 * std::numbers::pi);
}

ActionSample sample_action(double mean, double std, Rng& rng, ActuationMode mode, double I_max) {
  if (!(std > 0.0)) throw std::invalid_argument("policy standard deviation must be > 0");
  std::normal_distribution<double> normal(mean, std);
  ActionSample s;
  s.mean = mean;
  s.std = std;
  s.raw = normal(rng);
  const double unit = std::clamp(s.raw, 0.0, 1.0);
  s.applied = mode == ActuationMode::Intensity ? unit * I_max : unit;
  s.log_prob = gaussian_log_prob(s.raw, mean, std);
  return s;
}

ActionSample mean_action(double mean, double std, ActuationMode mode, double I_max) {
  ActionSample s;
  s.mean = mean;
  s.std = std;
  s.raw = mean;
  const double unit = std::clamp(mean, 0.0, 1.0);
  s.applied = mode == ActuationMode::Intensity ? unit * I_max : unit;
  s.log_prob = gaussian_log_prob(mean, mean, std);
  return s;
}

double accumulate_grad_log_prob(std::span<const double> z, double raw, const PolicyParams& theta,
                                std::span<double> grad, double scale) {
  if (grad.size() != theta.size()) throw std::invalid_argument("gradient buffer size mismatch");
  ForwardCache cache;
  const PolicyOutput out = forward(z, theta, cache);

  const double diff = raw - out.mean;
  const double var = out.std * out.std;
  const double dlp_dmean = diff / var;
  const double dlp_dstd = diff * diff / (var * out.std) - 1.0 / out.std;

  const std::size_t n = theta.n_layers();
  std::vector<double> delta{dlp_dmean * out.mean * (1.0 - out.mean),
                            dlp_dstd * logistic(out.std_pre)};

  // Locate each layer's slice of grad with the same layout as theta.
  std::vector<std::size_t> offsets(n);
  {
    std::size_t off = 0;
    for (std::size_t l = 0; l < n; ++l) {
      offsets[l] = off;
      off += theta.shapes()[l].rows * theta.shapes()[l].cols + theta.shapes()[l].rows;
    }
  }

  std::vector<double> back;
  for (std::size_t l = n; l-- > 0;) {
    const auto& s = theta.shapes()[l];
    auto gw = grad.subspan(offsets[l], s.rows * s.cols);
    auto gb = grad.subspan(offsets[l] + s.rows * s.cols, s.rows);
    kernels::ger(gw, s.rows, s.cols, scale, delta, cache.inputs[l]);
    kernels::axpy(scale, delta, gb);
    if (l == 0) break;
    back.resize(s.cols);
    kernels::gemv_t(theta.weights(l), s.rows, s.cols, delta, back);
    const auto& pre = cache.pre[l - 1];
    for (std::size_t i = 0; i < s.cols; ++i) back[i] *= pre[i] > 0.0 ? 1.0 : kLeakySlope;
    delta.swap(back);
  }
  return gaussian_log_prob(raw, out.mean, out.std);
}

std::vector<double> grad_log_prob(std::span<const double> z, double raw,
                                  const PolicyParams& theta) {
  std::vector<double> grad(theta.size(), 0.0);
  accumulate_grad_log_prob(z, raw, theta, grad);
  return grad;
}

namespace {
constexpr const char* kCheckpointFormat = "pwmopt-policy";
}

void save_checkpoint(std::ostream& out, const PolicyParams& theta) {
  nlohmann::json j;
  j["format"] = kCheckpointFormat;
  j["version"] = kCheckpointVersion;
  auto& layers = j["layers"] = nlohmann::json::array();
  for (std::size_t l = 0; l < theta.n_layers(); ++l) {
    const auto w = theta.weights(l);
    const auto b = theta.bias(l);
    layers.push_back({{"rows", theta.shapes()[l].rows},
                      {"cols", theta.shapes()[l].cols},
                      {"weights", std::vector<double>(w.begin(), w.end())},
                      {"bias", std::vector<double>(b.begin(), b.end())}});
  }
  out << j.dump(1) << '\n';
}

PolicyParams load_checkpoint(std::istream& in) {
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw CheckpointError(std::string("malformed checkpoint: ") + e.what());
  }
  try {
    if (j.at("format").get<std::string>() != kCheckpointFormat) {
      throw CheckpointError("not a policy checkpoint");
    }
    if (j.at("version").get<int>() != kCheckpointVersion) {
      throw CheckpointError("unsupported checkpoint version");
    }
    const auto& layers = j.at("layers");
    if (!layers.is_array() || layers.empty()) throw CheckpointError("checkpoint has no layers");
    std::vector<std::size_t> widths{layers[0].at("cols").get<std::size_t>()};
    for (const auto& layer : layers) {
      if (layer.at("cols").get<std::size_t>() != widths.back()) {
        throw CheckpointError("checkpoint layer shapes are not chained");
      }
      widths.push_back(layer.at("rows").get<std::size_t>());
    }
    PolicyParams theta(widths);
    for (std::size_t l = 0; l < theta.n_layers(); ++l) {
      const auto w = layers[l].at("weights").get<std::vector<double>>();
      const auto b = layers[l].at("bias").get<std::vector<double>>();
      auto tw = theta.weights(l);
      auto tb = theta.bias(l);
      if (w.size() != tw.size() || b.size() != tb.size()) {
        throw CheckpointError("checkpoint payload size does not match layer shape");
      }
      std::copy(w.begin(), w.end(), tw.begin());
      std::copy(b.begin(), b.end(), tb.begin());
    }
    if (!theta.finite()) throw CheckpointError("checkpoint contains non-finite values");
    return theta;
  } catch (const nlohmann::json::exception& e) {
    throw CheckpointError(std::string("invalid checkpoint: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw CheckpointError(std::string("invalid checkpoint: ") + e.what());
  }
}

void save_checkpoint_file(const std::string& path, const PolicyParams& theta) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw CheckpointError("cannot open '" + path + "' for writing");
  save_checkpoint(f, theta);
  if (!f) throw CheckpointError("failed writing '" + path + "'");
}

PolicyParams load_checkpoint_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw CheckpointError("cannot open checkpoint '" + path + "'");
  return load_checkpoint(f);
}

}  // namespace pwmopt
