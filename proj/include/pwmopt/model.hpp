#pragma once

// Chemostat model of light-controlled growth of a lysine-auxotrophic strain.
// State: biomass b [g/L], extracellular glucose g [mmol/L], intracellular
// lysine p [mmol/g]. Light enters only through the lysine synthesis rate.

namespace pwmopt {

struct ModelParams {
  double mu_max = 0.982;     // 1/h
  double f_c = 1100.0;       // g/L
  double Y_gb = 10.18;       // mmol/g
  double k_g = 2.964e-4;     // mmol/L
  double k_p = 1.7;          // mmol/L
  double d_l = 0.15;         // 1/h, dilution
  double g_in = 200.0;       // mmol/L, feed glucose
  double d_p = 20.8;         // 1/h, lysine turnover
  double q_p_max = 0.3366;   // mmol/(g h)
  double n_hill = 0.2191;
  double k_I = 5.5086e-7;    // W/m^2
  double I_max = 30.0;       // W/m^2

  /// Throws std::invalid_argument naming the first non-positive or
  /// non-finite field.
  void validate() const;

  bool operator==(const ModelParams&) const = default;
};

struct PlantState {
  double b = 0.0;
  double g = 0.0;
  double p = 0.0;

  bool finite() const;
  bool nonnegative() const;
  /// Throws std::invalid_argument unless finite and nonnegative.
  void validate() const;

  bool operator==(const PlantState&) const = default;
};

struct KineticRates {
  double mu = 0.0;   // specific growth rate, 1/h
  double q_g = 0.0;  // glucose uptake, mmol/(g h)
  double q_p = 0.0;  // lysine synthesis, mmol/(g h)
};

/// Hill-type light activation of lysine synthesis,
/// q_p_max * I^n / (I^n + k_I^n). Zero at I = 0 (no leakage).
/// Throws std::domain_error for negative or non-finite I.
double hill_activation(double intensity, const ModelParams& params);

/// Growth rate mu(g, p); independent of light.
double growth_rate(const PlantState& x, const ModelParams& params);

KineticRates kinetic_rates(const PlantState& x, double intensity, const ModelParams& params);

/// Time derivative of the state under light intensity I.
PlantState rhs(const PlantState& x, double intensity, const ModelParams& params);

/// Same as rhs() with the lysine synthesis rate already evaluated. Light is
/// piecewise constant between switching events, so integrators hoist the
/// Hill evaluation out of the stage loop.
PlantState rhs_with_synthesis(const PlantState& x, double q_p, const ModelParams& params);

}  // namespace pwmopt
