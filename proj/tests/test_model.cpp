#include <cmath>

#include "doctest.h"
#include "pwmopt/model.hpp"
#include "support.hpp"

using namespace pwmopt;

TEST_CASE("hill activation") {
  const ModelParams m;
  CHECK(hill_activation(0.0, m) == 0.0);
  CHECK(hill_activation(30.0, m) == doctest::Approx(testing::hill_oracle(30.0, m.q_p_max, m.n_hill, m.k_I)).epsilon(1e-14));
  CHECK(hill_activation(30.0, m) == doctest::Approx(0.330).epsilon(0.002));
  CHECK(hill_activation(1e-3, m) / m.q_p_max == doctest::Approx(0.84).epsilon(0.005));
  CHECK(hill_activation(m.k_I, m) == doctest::Approx(m.q_p_max / 2).epsilon(1e-14));
  CHECK_THROWS_AS(hill_activation(-1.0, m), std::domain_error);
  CHECK_THROWS_AS(hill_activation(std::nan(""), m), std::domain_error);

  double prev = 0.0;
  for (double I = 1e-9; I <= 30.0; I *= 1.7) {
    const double q = hill_activation(I, m);
    CHECK(q > prev);
    prev = q;
  }
}

TEST_CASE("kinetic rates") {
  const ModelParams m;
  auto r = kinetic_rates({3.0, 0.0, 1e-3}, 30.0, m);
  CHECK(r.mu == 0.0);
  CHECK(r.q_g == 0.0);

  // direct evaluation of the Monod x lysine product at the nominal state
  const double expected = 0.982 * (50.0 / (50.0 + 2.964e-4)) *
                          (1100.0 * 1.0752e-4 / (1100.0 * 1.0752e-4 + 1.7));
  r = kinetic_rates({3.0, 50.0, 1.0752e-4}, 12.0, m);
  CHECK(r.mu == doctest::Approx(expected).epsilon(1e-14));
  CHECK(r.mu == doctest::Approx(0.0639).epsilon(1e-3));
  CHECK(r.q_g == doctest::Approx(m.Y_gb * r.mu).epsilon(1e-14));
  CHECK(r.q_p == hill_activation(12.0, m));

  CHECK(growth_rate({1.0, 1e12, 1e12}, m) == doctest::Approx(m.mu_max).epsilon(1e-9));
}

TEST_CASE("right-hand side") {
  const ModelParams m;
  PlantState d = rhs({0.0, m.g_in, 0.0}, 0.0, m);
  CHECK(d.b == 0.0);
  CHECK(d.g == 0.0);
  CHECK(d.p == 0.0);

  d = rhs({2.5, 40.0, 0.0}, 0.0, m);
  CHECK(d.p == 0.0);
  CHECK(d.b == doctest::Approx(-m.d_l * 2.5).epsilon(1e-15));

  const PlantState x{3.0, 50.0, 1.0752e-4};
  d = rhs(x, 30.0, m);
  const double mu = growth_rate(x, m);
  CHECK(d.b == doctest::Approx((mu - 0.15) * 3.0).epsilon(1e-14));
  CHECK(d.b == doctest::Approx(-0.258).epsilon(2e-3));
  CHECK(d.g == doctest::Approx(-m.Y_gb * mu * 3.0 + (m.g_in - 50.0) * m.d_l).epsilon(1e-14));
  CHECK(d.p == doctest::Approx(hill_activation(30.0, m) - (m.d_p + mu) * x.p).epsilon(1e-14));
}

TEST_CASE("validation") {
  ModelParams m;
  CHECK_NOTHROW(m.validate());
  m.k_g = 0.0;
  CHECK_THROWS_AS(m.validate(), std::invalid_argument);
  m = ModelParams{};
  m.mu_max = std::nan("");
  CHECK_THROWS_AS(m.validate(), std::invalid_argument);

  CHECK_THROWS_AS((PlantState{-1.0, 1.0, 1.0}.validate()), std::invalid_argument);
  CHECK_THROWS_AS((PlantState{1.0, INFINITY, 1.0}.validate()), std::invalid_argument);
  CHECK_NOTHROW((PlantState{0.0, 0.0, 0.0}.validate()));
}
