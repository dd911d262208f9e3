#include "flexenv/verify.hpp"

#include <doctest.h>

#include <cmath>

#include "fixtures.hpp"

using namespace flexenv;
using namespace flexenv::verify;
using testing::constant_disturbance;
using testing::swisshouse;

namespace {

struct Setup {
  DiscreteSystem dsys;
  Trajectory d;
  TdEnvelope td;
  TiScalarEnvelope ti;
};

const Setup& swiss_setup() {
  static const Setup s = [] {
    Setup t;
    t.dsys = discretize(swisshouse(), 900.0, 96, Scheme::ExactZOH);
    t.d = constant_disturbance(10.0, 900.0, 96);
    EnvelopeOptions opts;
    opts.workers = 2;
    t.td = compute_td_envelope(t.dsys, t.d, opts);
    t.ti = compute_ti_scalar_envelope(t.dsys, t.d, opts);
    return t;
  }();
  return s;
}

}  // namespace

TEST_CASE("corridor sampler yields feasible trajectories reproducibly") {
  const auto& s = swiss_setup();
  const auto batch = sample_many(s.ti.env, Vector::Constant(96, 0.0),
                                 Vector::Constant(96, 1000.0), 42, 200);
  REQUIRE(static_cast<int>(batch.trajectories.size()) == 200);
  CHECK(batch.dead_ends == 0);
  for (const auto& t : batch.trajectories) {
    CHECK(corridor_contains(s.ti.env, t));
    CHECK(t.values.minCoeff() >= 0.0);
    CHECK(t.values.maxCoeff() <= 1000.0 + 1e-9);
  }
  // Same seed, same draw.
  const auto a = sample_in_envelope(s.ti.env, swisshouse(), 7);
  const auto b = sample_in_envelope(s.ti.env, swisshouse(), 7);
  REQUIRE(a.ok);
  CHECK((a.trajectory.values - b.trajectory.values).cwiseAbs().maxCoeff() ==
        0.0);
}

TEST_CASE("sampled TI trajectories respect comfort") {
  const auto& s = swiss_setup();
  const auto batch = sample_many(s.ti.env, Vector::Constant(96, 0.0),
                                 Vector::Constant(96, 1000.0), 1, 300);
  int violations = 0;
  for (const auto& t : batch.trajectories) {
    const auto verdict =
        check_state_feasibility(simulate(s.dsys, t, s.d), s.dsys.source, 0.01);
    if (!verdict.feasible) ++violations;
  }
  CHECK(violations == 0);
}

TEST_CASE("a power-bound-only corridor accepts every draw") {
  EnvelopeSeries env;
  env.dt = 900.0;
  env.kind = EnvelopeKind::TI_scalar;
  env.defined_up_to = 24;
  env.E_up = Vector::LinSpaced(25, 0.0, 24.0 * 900.0 * 1000.0);
  env.E_down = Vector::Zero(25);
  const auto batch = sample_many(env, Vector::Constant(24, 0.0),
                                 Vector::Constant(24, 1000.0), 5, 100);
  CHECK(static_cast<int>(batch.trajectories.size()) == 100);
  CHECK(batch.dead_ends == 0);
}

TEST_CASE("zero-width corridor forces the boundary trajectory") {
  EnvelopeSeries env;
  env.dt = 900.0;
  env.kind = EnvelopeKind::TI_scalar;
  env.defined_up_to = 4;
  env.E_up = Vector(5);
  env.E_up << 0.0, 9e5, 13.5e5, 18e5, 27e5;
  env.E_down = env.E_up;
  const auto r = sample_in_envelope(env, Vector::Constant(4, 0.0),
                                    Vector::Constant(4, 1000.0), 3);
  REQUIRE(r.ok);
  CHECK(r.trajectory.values(0, 0) == doctest::Approx(1000.0));
  CHECK(r.trajectory.values(1, 0) == doctest::Approx(500.0));
  CHECK(r.trajectory.values(2, 0) == doctest::Approx(500.0));
  CHECK(r.trajectory.values(3, 0) == doctest::Approx(1000.0));
}

TEST_CASE("unreachable corridor reports the dead end") {
  EnvelopeSeries env;
  env.dt = 1.0;
  env.kind = EnvelopeKind::TI_scalar;
  env.defined_up_to = 2;
  env.E_up = Vector(3);
  env.E_up << 0.0, 1.0, 5.0;
  env.E_down = Vector(3);
  env.E_down << 0.0, 0.0, 5.0;  // needs 4 J in one step, only 1 W available
  const auto r = sample_in_envelope(env, Vector::Constant(2, 0.0),
                                    Vector::Constant(2, 1.0), 11);
  CHECK(!r.ok);
  CHECK(r.dead_end_step >= 0);
}

TEST_CASE("scenario B violates comfort inside the TD envelope, A stays safe") {
  const auto& s = swiss_setup();
  const auto b = extreme_trajectory(s.td.env, swisshouse(),
                                    ExtremeMode::EarliestThenMin);
  REQUIRE(corridor_contains(s.td.env, b));
  const auto vb =
      check_state_feasibility(simulate(s.dsys, b, s.d), s.dsys.source, 0.0);
  CHECK(!vb.feasible);
  CHECK(vb.worst_under(0) > 0.05);
  CHECK(vb.worst_over(0) == 0.0);

  const auto a =
      extreme_trajectory(s.td.env, swisshouse(), ExtremeMode::LatestMin);
  REQUIRE(corridor_contains(s.td.env, a));
  const auto va =
      check_state_feasibility(simulate(s.dsys, a, s.d), s.dsys.source, 1e-6);
  CHECK(va.feasible);
}

TEST_CASE("every extreme mode is safe inside the TI envelope") {
  const auto& s = swiss_setup();
  for (auto mode : {ExtremeMode::EarliestMax, ExtremeMode::LatestMax,
                    ExtremeMode::EarliestThenMin, ExtremeMode::LatestMin}) {
    const auto t = extreme_trajectory(s.ti.env, swisshouse(), mode);
    CHECK(corridor_contains(s.ti.env, t));
    const auto v =
        check_state_feasibility(simulate(s.dsys, t, s.d), s.dsys.source, 0.01);
    CHECK(v.feasible);
  }
}

TEST_CASE("worst discomfort on the well-insulated house stays in the half-degree class") {
  const auto& s = swiss_setup();
  const auto rep = worst_discomfort(s.dsys, s.d, s.td.env);
  CHECK(rep.worst_above > 0.0);
  CHECK(rep.worst_below > 0.0);
  CHECK(rep.worst_above < 0.5);
  CHECK(rep.worst_below < 0.5);
}

TEST_CASE("lossless systems see zero discomfort from TD corridors") {
  auto sys = swisshouse();
  sys.A.setZero();
  sys.B_d.setZero();
  sys.x_min.setConstant(-1e12);
  sys.x_max.setConstant(1e12);
  sys.x0.setZero();
  const auto dsys = discretize(sys, 900.0, 24, Scheme::ExactZOH);
  const auto d = constant_disturbance(0.0, 900.0, 24);
  const auto td = compute_td_envelope(dsys, d);
  const auto rep = worst_discomfort(dsys, d, td.env);
  CHECK(rep.worst_above == 0.0);
  CHECK(rep.worst_below == 0.0);
}

TEST_CASE("leaky light building sees multi-degree discomfort") {
  // light/poor archetype in paper range weather
  const auto catalog = rc::archetype_catalog();
  const rc::Archetype* lp = nullptr;
  for (const auto& a : catalog)
    if (a.name == "light_poor") lp = &a;
  REQUIRE(lp);
  const auto amb = rc::synth_ambient(5.0, 10.0, 86400.0, 900.0, 96);
  const auto [sys, d] = rc::compile(lp->network, amb);
  const auto dsys = discretize(sys, 900.0, 96, Scheme::ExactZOH);
  const auto td = compute_td_envelope(dsys, d);
  const auto rep = worst_discomfort(dsys, d, td.env);
  const auto& s = swiss_setup();
  const auto swiss_rep = worst_discomfort(s.dsys, s.d, s.td.env);
  CHECK(rep.worst_below > 1.0);
  CHECK(rep.worst_below > swiss_rep.worst_below);
  CHECK(rep.worst_above > swiss_rep.worst_above);
}

TEST_CASE("area, reduction and provision-horizon metrics") {
  EnvelopeSeries td;
  td.dt = 900.0;
  td.kind = EnvelopeKind::TD;
  td.defined_up_to = 8;
  td.E_up = Vector::LinSpaced(9, 0.0, 8e6);
  td.E_down = Vector::Zero(9);

  CHECK(envelope_area(td, 8) ==
        doctest::Approx((0 + 1 + 2 + 3 + 4 + 5 + 6 + 7 + 8) * 1e6 * 900.0));
  CHECK(*area_reduction(td, td, 8) == doctest::Approx(0.0));
  CHECK(mfph_seconds(td) == doctest::Approx(8 * 900.0));

  EnvelopeSeries crossed = td;
  crossed.E_down(5) = td.E_up(5) + 1.0;
  crossed.E_down(6) = td.E_up(6) + 1.0;
  CHECK(mfph_seconds(crossed) == doctest::Approx(4500.0));

  EnvelopeSeries zero = td;
  zero.E_up.setZero();
  CHECK(!area_reduction(td, zero, 8).has_value());
}

TEST_CASE("exhaustive oracle encloses the TD bounds within one grid increment") {
  // 5 levels x 4 steps of 2 h on the one-zone house.
  const auto dsys = discretize(swisshouse(), 7200.0, 4, Scheme::ExactZOH);
  const auto d = constant_disturbance(10.0, 7200.0, 4);
  const auto oracle = brute_force_oracle(dsys, d, 5, 4);
  REQUIRE(oracle.cumulative.size() == 625);

  const auto td = compute_td_envelope(dsys, d);
  const auto check = oracle_td_enclosure(oracle, td.env);
  CHECK(check.enclosed);
  const double increment = 250.0 * 7200.0;  // one power level for one step
  CHECK(check.max_slack <= increment + 1.0);
}

TEST_CASE("exhaustive oracle confirms scalar TI soundness and non-vacuity") {
  const auto dsys = discretize(swisshouse(), 7200.0, 4, Scheme::ExactZOH);
  const auto d = constant_disturbance(10.0, 7200.0, 4);
  const auto oracle = brute_force_oracle(dsys, d, 5, 4);
  const auto ti = compute_ti_scalar_envelope(dsys, d);
  const auto sound = oracle_ti_soundness_total(oracle, dsys, d, ti.env);
  CHECK(sound.inside >= 1);
  CHECK(sound.violations == 0);
}

TEST_CASE("exhaustive oracle confirms distributed-box soundness on a coupled pair") {
  rc::RcNetwork net;
  for (int i = 0; i < 2; ++i) {
    rc::Room r;
    r.label = "r" + std::to_string(i);
    r.C = 6.0e6;
    r.R_amb = 0.15;
    r.heated = true;
    r.p_max = 900.0;
    net.rooms.push_back(r);
  }
  net.edges.push_back({0, 1, 0.08});
  const auto amb = rc::constant_ambient(10.0, 7200.0, 3);
  const auto [sys, d] = rc::compile(net, amb);
  const auto dsys = discretize(sys, 7200.0, 3, Scheme::ExactZOH);
  const auto oracle = brute_force_oracle(dsys, d, 3, 3);
  REQUIRE(oracle.cumulative.size() == 729);

  const auto box = compute_distributed_box(dsys, d);
  REQUIRE(box.defined_up_to == 3);
  const auto sound = oracle_ti_soundness(oracle, dsys, d, box.per_load);
  CHECK(sound.inside >= 1);
  CHECK(sound.violations == 0);
}

TEST_CASE("oracle enumeration budget is enforced") {
  const auto dsys = discretize(swisshouse(), 900.0, 10, Scheme::ExactZOH);
  const auto d = constant_disturbance(10.0, 900.0, 10);
  CHECK_THROWS_AS(brute_force_oracle(dsys, d, 10, 10), std::invalid_argument);
}
