#include "flexenv/envelope.hpp"
#include "flexenv/verify.hpp"

#include <doctest.h>

#include <cmath>

#include "fixtures.hpp"

using namespace flexenv;
using testing::constant_disturbance;
using testing::swisshouse;

namespace {

struct SwissPair {
  TdEnvelope td;
  TiScalarEnvelope ti;
  DiscreteSystem dsys;
  Trajectory d;
};

SwissPair swiss_pair(bool keep_trajectories = false) {
  SwissPair p;
  p.dsys = discretize(swisshouse(), 900.0, 96, Scheme::ExactZOH);
  p.d = constant_disturbance(10.0, 900.0, 96);
  EnvelopeOptions opts;
  opts.workers = 2;
  opts.keep_per_lead_trajectories = keep_trajectories;
  p.td = compute_td_envelope(p.dsys, p.d, opts);
  p.ti = compute_ti_scalar_envelope(p.dsys, p.d, opts);
  return p;
}

}  // namespace

TEST_CASE("weighted energies collapse to plain energy when lossless") {
  Trajectory p = constant_disturbance(800.0, 900.0, 8);
  for (int k = 0; k <= 8; ++k) {
    CHECK(weighted_energy_upper(p, 0.0, k) ==
          doctest::Approx(800.0 * 900.0 * k).epsilon(1e-12));
    CHECK(weighted_energy_lower(p, 0.0, k) ==
          doctest::Approx(800.0 * 900.0 * k).epsilon(1e-12));
  }
  CHECK(weighted_energy_upper(p, -2.5e-6, 0) == 0.0);
  CHECK(weighted_energy_lower(p, -2.5e-6, 0) == 0.0);
}

TEST_CASE("weighted energy closed forms on the one-zone house") {
  // Continuous: 1000 (1 - e^{-2.5e-6 * 3600}) / 2.5e-6 = 3.5839 MJ.
  Trajectory p = constant_disturbance(1000.0, 900.0, 96);
  const double upper_cont = 1000.0 * (1.0 - std::exp(-2.5e-6 * 3600.0)) / 2.5e-6;
  CHECK(upper_cont == doctest::Approx(3.5839e6).epsilon(1e-4));
  const double upper_disc = weighted_energy_upper(p, -2.5e-6, 4);
  CHECK(upper_disc == doctest::Approx(upper_cont).epsilon(0.005));

  // Continuous: 600 (e^{2.5e-6 * 86400} - 1) / 2.5e-6 = 57.87 MJ, the last
  // step weighted by e^{0.216} = 1.2411.
  Trajectory q = constant_disturbance(600.0, 900.0, 96);
  const double lower_cont = 600.0 * (std::exp(2.5e-6 * 86400.0) - 1.0) / 2.5e-6;
  CHECK(lower_cont == doctest::Approx(57.87e6).epsilon(1e-3));
  CHECK(std::exp(2.5e-6 * 86400.0) == doctest::Approx(1.2411).epsilon(1e-4));
  const double lower_disc = weighted_energy_lower(q, -2.5e-6, 96);
  CHECK(lower_disc == doctest::Approx(lower_cont).epsilon(0.005));
}

TEST_CASE("discrete weight kernel invariants") {
  // Probe the per-step weights through unit power pulses: upper weights lie
  // in (0, 1], lower weights are >= 1 with the age-zero weight exactly 1.
  const double A = -2.5e-6, dt = 900.0;
  const int k = 8;
  for (int l = 0; l < k; ++l) {
    Trajectory pulse;
    pulse.dt = dt;
    pulse.values = Matrix::Zero(k, 1);
    pulse.values(l, 0) = 1.0;
    const double wu = weighted_energy_upper(pulse, A, k) / dt;
    const double wl = weighted_energy_lower(pulse, A, k) / dt;
    CHECK(wu > 0.0);
    CHECK(wu <= 1.0);
    CHECK(wl >= 1.0);
    if (l == 0) CHECK(wl == doctest::Approx(1.0).epsilon(1e-15));
    if (l == k - 1)
      CHECK(wu == doctest::Approx(std::exp(A * dt)).epsilon(1e-12));
  }
}

TEST_CASE("lossless systems have identical TI and TD envelopes") {
  auto sys = swisshouse();
  sys.A.setZero();
  sys.B_d.setZero();
  sys.x_min.setConstant(-1e12);
  sys.x_max.setConstant(1e12);
  sys.x0.setZero();
  const auto dsys = discretize(sys, 900.0, 16, Scheme::ExactZOH);
  const auto d = constant_disturbance(0.0, 900.0, 16);
  const auto td = compute_td_envelope(dsys, d);
  const auto ti = compute_ti_scalar_envelope(dsys, d);
  REQUIRE(ti.env.defined_up_to == 16);
  for (int k = 0; k <= 16; ++k) {
    CHECK(ti.env.E_up(k) ==
          doctest::Approx(td.env.E_up(k)).epsilon(1e-9).scale(1e6));
    CHECK(ti.env.E_down(k) ==
          doctest::Approx(td.env.E_down(k)).epsilon(1e-9).scale(1e6));
  }
}

TEST_CASE("one-hour TI upper bound shrinks below the TD value") {
  const auto p = swiss_pair();
  const double cont = 1000.0 * (1.0 - std::exp(-2.5e-6 * 3600.0)) / 2.5e-6;
  CHECK(p.ti.env.E_up(4) == doctest::Approx(cont).epsilon(0.005));
  CHECK(p.ti.env.E_up(4) < 3.6e6);
  CHECK(p.ti.env.E_up(4) > 3.5e6);
}

TEST_CASE("TI envelope nests inside the TD envelope at every lead time") {
  const auto p = swiss_pair();
  REQUIRE(p.ti.env.defined_up_to == 96);
  for (int k = 0; k <= 96; ++k) {
    CHECK(p.ti.env.E_up(k) <= p.td.env.E_up(k) + 1e-6);
    CHECK(p.ti.env.E_down(k) >= p.td.env.E_down(k) - 1e-6);
  }
  // The lower bounds separate materially over the day (the TI floor carries
  // exponentially grown weights).
  CHECK(p.ti.env.E_down(96) > 1.05 * p.td.env.E_down(96));
}

TEST_CASE("per-lead-time comparison trajectories are feasible") {
  const auto p = swiss_pair(true);
  REQUIRE(static_cast<int>(p.ti.per_lead_plus.size()) == 97);
  for (int k = 4; k <= 96; k += 12) {
    for (const Trajectory* t : {&p.ti.per_lead_plus[k], &p.ti.per_lead_minus[k]}) {
      REQUIRE(t->steps() == k);
      const auto verdict =
          check_state_feasibility(simulate(p.dsys, *t, p.d), p.dsys.source, 1e-6);
      CHECK(verdict.feasible);
    }
  }
}

TEST_CASE("envelope bounds are nondecreasing within the defined range") {
  const auto p = swiss_pair();
  for (int k = 1; k <= p.ti.env.defined_up_to; ++k) {
    CHECK(p.ti.env.E_up(k) >= p.ti.env.E_up(k - 1) - 1e-9);
    CHECK(p.ti.env.E_down(k) >= p.ti.env.E_down(k - 1) - 1e-9);
  }
}

TEST_CASE("bounds formed from fixed trajectories are valid but narrower") {
  const auto p = swiss_pair();
  const auto cmp = ti_bounds_from_trajectory(p.dsys, p.td.argmax, p.td.argmin);
  const int D = std::min(cmp.defined_up_to, p.ti.env.defined_up_to);
  REQUIRE(D >= 1);
  for (int k = 1; k <= D; ++k) {
    const double slack_up = 1e-6 * (1.0 + std::abs(p.ti.env.E_up(k)));
    const double slack_dn = 1e-6 * (1.0 + std::abs(p.ti.env.E_down(k)));
    CHECK(cmp.E_up(k) <= p.ti.env.E_up(k) + slack_up);
    CHECK(cmp.E_down(k) >= p.ti.env.E_down(k) - slack_dn);
  }
}

TEST_CASE("forward Euler scheme collapses identically when lossless") {
  auto sys = swisshouse();
  sys.A.setZero();
  sys.B_d.setZero();
  const auto dsys = discretize(sys, 900.0, 12, Scheme::ForwardEuler);
  const auto d = constant_disturbance(0.0, 900.0, 12);
  const auto td = compute_td_envelope(dsys, d);
  const auto ti = compute_ti_scalar_envelope(dsys, d);
  for (int k = 0; k <= ti.env.defined_up_to; ++k)
    CHECK(ti.env.E_up(k) ==
          doctest::Approx(td.env.E_up(k)).epsilon(1e-9).scale(1e6));
}

TEST_CASE("forward Euler scalar corridor is sound under Euler dynamics") {
  const auto dsys = discretize(swisshouse(), 900.0, 96, Scheme::ForwardEuler);
  const auto d = constant_disturbance(10.0, 900.0, 96);
  const auto ti = compute_ti_scalar_envelope(dsys, d, EnvelopeOptions{});
  REQUIRE(ti.env.defined_up_to == 96);
  const auto batch = verify::sample_many(ti.env, Vector::Constant(96, 0.0),
                                         Vector::Constant(96, 1000.0), 777, 200);
  REQUIRE(static_cast<int>(batch.trajectories.size()) == 200);
  for (const auto& t : batch.trajectories) {
    const auto v =
        check_state_feasibility(simulate(dsys, t, d), dsys.source, 1e-9);
    CHECK(v.feasible);
  }
}

TEST_CASE("cold snap on a leaky building truncates the TI envelope early") {
  LinearLossySystem sys = swisshouse();
  sys.A.setConstant(-1.71e-5);
  sys.B_p.setConstant(1e-7);
  sys.B_d.setConstant(1.71e-5);
  const auto dsys = discretize(sys, 900.0, 96, Scheme::ExactZOH);
  const auto d = constant_disturbance(-5.0, 900.0, 96);
  const auto ti = compute_ti_scalar_envelope(dsys, d);
  CHECK(ti.env.defined_up_to < 96);
  CHECK(ti.first_infeasible_step.has_value());
}
