#include "flexenv/envelope.hpp"

#include <doctest.h>

#include <cmath>

#include "fixtures.hpp"

using namespace flexenv;
using testing::constant_disturbance;
using testing::swisshouse;

namespace {

// Closed-form landmarks from the one-zone parameters (tau = C R = 4e5 s):
//  heating at 1 kW from 23 C reaches 24 C at t = 4e5 ln(7/6) = 61660 s,
//  free cooling from 23 C reaches 22 C at t = 4e5 ln(13/12) = 32017 s,
//  holding 24 C needs 700 W, holding 22 C needs 600 W.
constexpr double kKinkTime = 61660.0;
constexpr double kFloorTime = 32017.0;

TdEnvelope swisshouse_td() {
  const auto dsys = discretize(swisshouse(), 900.0, 96, Scheme::ExactZOH);
  const auto d = constant_disturbance(10.0, 900.0, 96);
  EnvelopeOptions opts;
  opts.workers = 2;
  return compute_td_envelope(dsys, d, opts);
}

}  // namespace

TEST_CASE("upper bound rides full power for the first hour") {
  const auto td = swisshouse_td();
  REQUIRE(td.env.defined_up_to == 96);
  CHECK(td.env.E_up(4) == doctest::Approx(3.6e6).epsilon(0.01));
  CHECK(td.env.E_down(0) == 0.0);
  CHECK(td.env.E_up(0) == 0.0);
}

TEST_CASE("upper bound kink sits at the analytic ceiling-hit time") {
  const auto td = swisshouse_td();
  int kink = -1;
  for (int k = 1; k <= 96; ++k) {
    const double inc = td.env.E_up(k) - td.env.E_up(k - 1);
    if (inc < 0.9e6 * (1.0 - 1e-6)) {
      kink = k;
      break;
    }
  }
  REQUIRE(kink > 0);
  CHECK(std::abs(kink * 900.0 - kKinkTime) <= 1800.0);  // within one step

  // Post-kink slope settles at the 24 C holding power (700 W).
  const double late_slope =
      (td.env.E_up(96) - td.env.E_up(92)) / (4.0 * 900.0);
  CHECK(late_slope == doctest::Approx(700.0).epsilon(0.01));
}

TEST_CASE("lower bound stays zero until the floor-hit time, then 600 W") {
  const auto td = swisshouse_td();
  int first_nonzero = -1;
  for (int k = 1; k <= 96; ++k) {
    if (td.env.E_down(k) > 1.0) {  // joules
      first_nonzero = k;
      break;
    }
  }
  REQUIRE(first_nonzero > 0);
  CHECK(std::abs(first_nonzero * 900.0 - kFloorTime) <= 1800.0);

  const double late_slope =
      (td.env.E_down(96) - td.env.E_down(92)) / (4.0 * 900.0);
  CHECK(late_slope == doctest::Approx(600.0).epsilon(0.01));
}

TEST_CASE("upper increments never grow after the kink") {
  const auto td = swisshouse_td();
  double prev = td.env.E_up(1) - td.env.E_up(0);
  for (int k = 2; k <= 96; ++k) {
    const double inc = td.env.E_up(k) - td.env.E_up(k - 1);
    CHECK(inc <= prev + 20.0);  // joule-level slack for solver noise
    prev = inc;
  }
}

TEST_CASE("lossless unconstrained system saturates the power bound") {
  auto sys = swisshouse();
  sys.A.setZero();
  sys.B_d.setZero();
  sys.x_min.setConstant(-1e12);
  sys.x_max.setConstant(1e12);
  sys.x0.setZero();
  const auto dsys = discretize(sys, 900.0, 8, Scheme::ExactZOH);
  const auto td =
      compute_td_envelope(dsys, constant_disturbance(0.0, 900.0, 8));
  for (int k = 1; k <= 8; ++k) {
    CHECK(td.env.E_up(k) ==
          doctest::Approx(1000.0 * 900.0 * k).epsilon(1e-7));
    CHECK(td.env.E_down(k) <= 1e-3);  // joules
  }
}

TEST_CASE("per-lead-time bounds match the greedy extremal trajectories") {
  const auto dsys = discretize(swisshouse(), 900.0, 96, Scheme::ExactZOH);
  const auto d = constant_disturbance(10.0, 900.0, 96);
  const auto dev = greedy_td_check(dsys, d);
  CHECK(dev.upper <= 1e-6);
  CHECK(dev.lower <= 1e-6);

  // Lossless limit: exact equality up to solver tolerance.
  auto sys = swisshouse();
  sys.A.setZero();
  sys.B_d.setZero();
  const auto dz = discretize(sys, 900.0, 24, Scheme::ExactZOH);
  const auto dev0 = greedy_td_check(dz, constant_disturbance(0.0, 900.0, 24));
  CHECK(dev0.upper <= 1e-7);
  CHECK(dev0.lower <= 1e-7);
}

TEST_CASE("extremal argument trajectories are state feasible") {
  const auto td = swisshouse_td();
  const auto dsys = discretize(swisshouse(), 900.0, 96, Scheme::ExactZOH);
  const auto d = constant_disturbance(10.0, 900.0, 96);
  for (const Trajectory* t : {&td.argmax, &td.argmin}) {
    REQUIRE(t->steps() == 96);
    const auto verdict =
        check_state_feasibility(simulate(dsys, *t, d), dsys.source, 1e-6);
    CHECK(verdict.feasible);
  }
}

TEST_CASE("dying comfort band truncates the envelope") {
  // Poorly insulated light building in a cold snap: even full power cannot
  // hold the floor for long.
  LinearLossySystem sys = swisshouse();
  sys.A.setConstant(-1.71e-5);   // 1/R = 171 W/K, C = 10 MJ/K
  sys.B_p.setConstant(1e-7);
  sys.B_d.setConstant(1.71e-5);
  const auto dsys = discretize(sys, 900.0, 96, Scheme::ExactZOH);
  const auto d = constant_disturbance(-5.0, 900.0, 96);
  const auto td = compute_td_envelope(dsys, d);
  CHECK(td.env.defined_up_to < 96);
  CHECK(td.env.defined_up_to >= 1);
  CHECK(td.first_infeasible_step.has_value());
  // Beyond the truncation the series is marked undefined.
  CHECK(std::isnan(td.env.E_up(td.env.defined_up_to + 1)));
}

TEST_CASE("euler-scheme envelope stays within a couple percent of exact hold") {
  const auto de = discretize(swisshouse(), 900.0, 96, Scheme::ForwardEuler);
  const auto dz = discretize(swisshouse(), 900.0, 96, Scheme::ExactZOH);
  const auto d = constant_disturbance(10.0, 900.0, 96);
  const auto tde = compute_td_envelope(de, d);
  const auto tdz = compute_td_envelope(dz, d);
  for (int k = 4; k <= 96; k += 8) {
    CHECK(tde.env.E_up(k) ==
          doctest::Approx(tdz.env.E_up(k)).epsilon(0.02));
  }
}
