#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "pwmopt/env.hpp"
#include "pwmopt/pwm.hpp"
#include "pwmopt/rng.hpp"

namespace pwmopt {

/// Weight matrix shape of one dense layer: `rows` outputs, `cols` inputs.
struct LayerShape {
  std::size_t rows = 0;
  std::size_t cols = 0;

  bool operator==(const LayerShape&) const = default;
};

/// Flat storage of all dense-layer weights and biases. Layer i occupies
/// rows*cols row-major weights followed by rows biases.
class PolicyParams {
 public:
  PolicyParams() = default;
  /// Zero-filled parameters for a stack with the given layer widths,
  /// e.g. {9, 20, 20, 20, 20, 2}.
  explicit PolicyParams(const std::vector<std::size_t>& widths);

  static std::vector<std::size_t> default_widths();

  std::size_t n_layers() const { return shapes_.size(); }
  const std::vector<LayerShape>& shapes() const { return shapes_; }
  std::size_t size() const { return values_.size(); }
  std::size_t input_dim() const { return shapes_.front().cols; }

  std::span<double> weights(std::size_t layer);
  std::span<const double> weights(std::size_t layer) const;
  std::span<double> bias(std::size_t layer);
  std::span<const double> bias(std::size_t layer) const;

  std::span<double> values() { return values_; }
  std::span<const double> values() const { return values_; }

  bool finite() const;
  double norm() const;

  bool operator==(const PolicyParams&) const = default;

 private:
  std::vector<LayerShape> shapes_;
  std::vector<std::size_t> offsets_;
  std::vector<double> values_;
};

/// Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) weights, zero biases.
PolicyParams initialize_policy(const std::vector<std::size_t>& widths, Rng& rng);

inline constexpr double kLeakySlope = 0.01;
inline constexpr double kMinStd = 1e-4;

struct PolicyOutput {
  double mean = 0.0;      // logistic(mean head), in (0, 1)
  double std = 0.0;       // softplus(std head) + kMinStd
  double mean_pre = 0.0;  // raw head outputs
  double std_pre = 0.0;
};

/// Activations kept from a forward pass for backpropagation.
struct ForwardCache {
  std::vector<std::vector<double>> inputs;  // input to each layer
  std::vector<std::vector<double>> pre;     // pre-activation of each layer
  PolicyOutput out;
};

/// Thrown when the network produces a non-finite value.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

PolicyOutput forward(std::span<const double> z, const PolicyParams& theta);
PolicyOutput forward(std::span<const double> z, const PolicyParams& theta, ForwardCache& cache);

struct ActionSample {
  double raw = 0.0;      // unclipped Gaussian draw
  double applied = 0.0;  // duty cycle, or intensity in W/m^2
  double log_prob = 0.0; // log density of `raw`
  double mean = 0.0;
  double std = 0.0;
};

/// Gaussian log density at x.
double gaussian_log_prob(double x, double mean, double std);

/// Draws raw ~ N(mean, std), clips it to [0, 1] and, for INTENSITY, scales
/// by I_max. The log-probability refers to the raw draw.
ActionSample sample_action(double mean, double std, Rng& rng,
                           ActuationMode mode = ActuationMode::Pwm, double I_max = 1.0);

/// The mean action in physical units, used for deterministic evaluation.
ActionSample mean_action(double mean, double std, ActuationMode mode, double I_max);

/// Adds scale * d log pi(raw | z, theta) / d theta into grad (same layout as
/// theta.values()). Returns log pi(raw | z, theta).
double accumulate_grad_log_prob(std::span<const double> z, double raw, const PolicyParams& theta,
                                std::span<double> grad, double scale = 1.0);

/// Gradient of log pi(raw | z, theta) as a fresh vector.
std::vector<double> grad_log_prob(std::span<const double> z, double raw,
                                  const PolicyParams& theta);

class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr int kCheckpointVersion = 1;

/// JSON checkpoint: format tag, version, and per layer its shape with
/// row-major weights and biases. Doubles are written in shortest round-trip
/// form, so save/load is bit-exact.
void save_checkpoint(std::ostream& out, const PolicyParams& theta);
PolicyParams load_checkpoint(std::istream& in);
void save_checkpoint_file(const std::string& path, const PolicyParams& theta);
PolicyParams load_checkpoint_file(const std::string& path);

}  // namespace pwmopt
