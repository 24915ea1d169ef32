#include <random>
#include <sstream>

#include "doctest.h"
#include "pwmopt/integrator.hpp"
#include "pwmopt/pwm.hpp"
#include "support.hpp"

using namespace pwmopt;

TEST_CASE("switching time") {
  const ForcingGrid g{1.0, 24};
  CHECK(duty_to_switch_time(0, 0.0, g) == 0.0);
  CHECK(duty_to_switch_time(3, 0.25, g) == 3.25);
  CHECK(duty_to_switch_time(23, 1.0, g) == 24.0);
  CHECK(duty_to_switch_time(2, 0.5, ForcingGrid{0.5, 10}) == 1.25);
  CHECK_THROWS_AS(duty_to_switch_time(0, 1.01, g), std::domain_error);
  CHECK_THROWS_AS(duty_to_switch_time(0, -0.01, g), std::domain_error);
  CHECK_THROWS_AS(duty_to_switch_time(24, 0.5, g), std::domain_error);
}

TEST_CASE("intensity within a period") {
  const ForcingGrid g{1.0, 24};
  CHECK(intensity_at(0.5, make_plan(0, 1.0, g), g, 30.0) == 30.0);
  CHECK(intensity_at(0.5, make_plan(0, 0.5, g), g, 30.0) == 0.0);
  CHECK(intensity_at(0.4999, make_plan(0, 0.5, g), g, 30.0) == 30.0);
  CHECK(intensity_at(2.69, make_plan(2, 0.7, g), g, 30.0) == 30.0);
  CHECK(intensity_at(2.0, make_plan(2, 0.0, g), g, 30.0) == 0.0);
  CHECK_THROWS_AS(intensity_at(3.0, make_plan(2, 0.7, g), g, 30.0), std::domain_error);
  CHECK_THROWS_AS(intensity_at(1.99, make_plan(2, 0.7, g), g, 30.0), std::domain_error);
}

TEST_CASE("duty cycle recovered from the ON time") {
  const ForcingGrid g{1.0, 24};
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 1000; ++i) {
    const double d = u(rng);
    const int k = i % 24;
    double on = 0.0;
    for (const auto& seg : period_segments(k, d, ActuationMode::Pwm, g, 30.0)) {
      if (seg.intensity > 0.0) on += seg.t1 - seg.t0;
      CHECK(seg.t0 >= g.period_start(k));
      CHECK(seg.t1 <= g.period_end(k));
    }
    CHECK(on / g.period == doctest::Approx(d).epsilon(1e-12));
  }
}

TEST_CASE("segments per mode") {
  const ForcingGrid g{1.0, 24};
  auto segs = period_segments(4, 0.3, ActuationMode::Pwm, g, 30.0);
  REQUIRE(segs.size() == 2);
  CHECK(segs[0].t0 == 4.0);
  CHECK(segs[0].t1 == 4.3);
  CHECK(segs[0].intensity == 30.0);
  CHECK(segs[1].intensity == 0.0);
  segs = period_segments(4, 12.5, ActuationMode::Intensity, g, 30.0);
  REQUIRE(segs.size() == 1);
  CHECK(segs[0].intensity == 12.5);
  CHECK(segs[0].t1 - segs[0].t0 == 1.0);
}

TEST_CASE("period-average activation") {
  const ModelParams m;
  const double full = hill_activation(m.I_max, m);
  CHECK(period_avg_activation(0.0, m) == 0.0);
  CHECK(period_avg_activation(1.0, m) == doctest::Approx(0.330).epsilon(0.002));
  CHECK(period_avg_activation(0.5, m) == doctest::Approx(0.165).epsilon(0.002));
  CHECK(period_avg_activation(0.5, m) == doctest::Approx(0.5 * full).epsilon(1e-15));
  double prev = -1.0;
  for (int i = 0; i <= 100; ++i) {
    const double v = period_avg_activation(i / 100.0, m);
    CHECK(v > prev);
    prev = v;
  }
}

TEST_CASE("dose-response table") {
  const ModelParams m;
  const auto rows = dose_response_table(101, m);
  REQUIRE(rows.size() == 202);
  const double ratio = testing::hill_oracle(m.I_max, 1.0, m.n_hill, m.k_I);
  CHECK(ratio == doctest::Approx(0.9802).epsilon(1e-4));
  for (const auto& r : rows) {
    if (r.mode == ActuationMode::Pwm) {
      CHECK(r.activation == doctest::Approx(r.input * ratio).epsilon(1e-14));
    } else if (r.input >= 0.01) {
      CHECK(r.activation > 0.9);
    }
  }
  CHECK(rows.front().mode == ActuationMode::Intensity);
  CHECK(rows.front().input == 0.0);
  CHECK(rows.front().activation == 0.0);
  CHECK_THROWS_AS(dose_response_table(1, m), std::invalid_argument);

  std::ostringstream out;
  write_dose_response_csv(out, dose_response_table(3, m));
  const std::string csv = out.str();
  CHECK(csv.rfind("mode,input_normalized,activation_normalized\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 7);
  CHECK(csv.find("pwm,0.5,") != std::string::npos);
}
