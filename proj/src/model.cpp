#include "pwmopt/model.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace pwmopt {

namespace {

void require_positive(double value, const char* name) {
  if (!(std::isfinite(value) && value > 0.0)) {
    throw std::invalid_argument(std::string("model parameter '") + name +
                                "' must be finite and > 0");
  }
}

}  // namespace

void ModelParams::validate() const {
  require_positive(mu_max, "mu_max");
  require_positive(f_c, "f_c");
  require_positive(Y_gb, "Y_gb");
  require_positive(k_g, "k_g");
  require_positive(k_p, "k_p");
  require_positive(d_l, "d_l");
  require_positive(g_in, "g_in");
  require_positive(d_p, "d_p");
  require_positive(q_p_max, "q_p_max");
  require_positive(n_hill, "n_hill");
  require_positive(k_I, "k_I");
  require_positive(I_max, "I_max");
}

bool PlantState::finite() const {
  return std::isfinite(b) && std::isfinite(g) && std::isfinite(p);
}

bool PlantState::nonnegative() const { return b >= 0.0 && g >= 0.0 && p >= 0.0; }

void PlantState::validate() const {
  if (!finite()) throw std::invalid_argument("plant state must be finite");
  if (!nonnegative()) throw std::invalid_argument("plant state must be nonnegative");
}

double hill_activation(double intensity, const ModelParams& params) {
  if (!(intensity >= 0.0) || !std::isfinite(intensity)) {
    throw std::domain_error("light intensity must be finite and >= 0");
  }
  if (intensity == 0.0) return 0.0;
  // I^n / (I^n + k^n) == 1 / (1 + (k/I)^n); avoids underflow of I^n for tiny I.
  const double ratio = std::pow(params.k_I / intensity, params.n_hill);
  return params.q_p_max / (1.0 + ratio);
}

double growth_rate(const PlantState& x, const ModelParams& params) {
  const double lys = params.f_c * x.p;
  return params.mu_max * (x.g / (x.g + params.k_g)) * (lys / (lys + params.k_p));
}

KineticRates kinetic_rates(const PlantState& x, double intensity, const ModelParams& params) {
  KineticRates r;
  r.mu = growth_rate(x, params);
  r.q_g = params.Y_gb * r.mu;
  r.q_p = hill_activation(intensity, params);
  return r;
}

PlantState rhs_with_synthesis(const PlantState& x, double q_p, const ModelParams& params) {
  const double mu = growth_rate(x, params);
  return {
      (mu - params.d_l) * x.b,
      -params.Y_gb * mu * x.b + (params.g_in - x.g) * params.d_l,
      q_p - (params.d_p + mu) * x.p,
  };
}

PlantState rhs(const PlantState& x, double intensity, const ModelParams& params) {
  return rhs_with_synthesis(x, hill_activation(intensity, params), params);
}

}  // namespace pwmopt
