#include "flexenv/system.hpp"

#include <doctest.h>

#include <cmath>
#include <cstring>
#include <random>

#include "fixtures.hpp"

using namespace flexenv;
using testing::constant_disturbance;
using testing::swisshouse;

TEST_CASE("validate_system accepts the one-zone house") {
  CHECK(validate_system(swisshouse()).empty());
}

TEST_CASE("validate_system flags sign violations with indices") {
  auto sys = swisshouse();
  sys.A(0, 0) = 1.0;
  auto report = validate_system(sys);
  REQUIRE(report.size() == 1);
  CHECK(report[0] == "diagonal positive at (0,0)");

  LinearLossySystem two = swisshouse();
  two.A = Matrix(2, 2);
  two.A << -1.0, -0.1, 0.2, -1.0;
  two.B_p = Matrix::Zero(2, 1);
  two.B_p(0, 0) = 1e-7;
  two.B_d = Matrix::Zero(2, 1);
  two.x_min = Vector::Constant(2, 22.0);
  two.x_max = Vector::Constant(2, 24.0);
  two.x0 = Vector::Constant(2, 23.0);
  auto rep2 = validate_system(two);
  REQUIRE(rep2.size() == 1);
  CHECK(rep2[0] == "off-diagonal negative at (0,1)");
}

TEST_CASE("validate_system distinguishes dimension mismatch") {
  auto sys = swisshouse();
  sys.x0 = Vector::Zero(2);
  CHECK_THROWS_AS(validate_system(sys), std::invalid_argument);
}

TEST_CASE("matrix exponential closed forms") {
  CHECK((matrix_exponential(Matrix::Zero(3, 3), 3600.0) -
         Matrix::Identity(3, 3))
            .cwiseAbs()
            .maxCoeff() == doctest::Approx(0.0).epsilon(1e-12));

  const Matrix e1 =
      matrix_exponential(Matrix::Constant(1, 1, -2.5e-6), 3600.0);
  CHECK(e1(0, 0) == doctest::Approx(std::exp(-0.009)).epsilon(1e-9));
  CHECK(std::abs(e1(0, 0) - 0.991040) < 1e-6);

  Matrix A(2, 2);
  A << -1.0, 1.0, 1.0, -1.0;
  const Matrix e2 = matrix_exponential(A, 1.0);
  const double diag = 0.5 * (1.0 + std::exp(-2.0));
  const double off = 0.5 * (1.0 - std::exp(-2.0));
  CHECK(std::abs(e2(0, 0) - diag) < 1e-6);
  CHECK(std::abs(e2(0, 1) - off) < 1e-6);
  CHECK(std::abs(e2(0, 0) - 0.567668) < 1e-6);
  CHECK(std::abs(e2(0, 1) - 0.432332) < 1e-6);

  CHECK_THROWS_AS(matrix_exponential(Matrix::Zero(2, 3), 1.0),
                  std::invalid_argument);
}

TEST_CASE("matrix exponential of Metzler matrices is entrywise nonnegative") {
  std::mt19937_64 rng(7);
  std::uniform_int_distribution<int> dim(1, 6);
  std::uniform_real_distribution<double> tdist(0.0, 86400.0);
  for (int trial = 0; trial < 1000; ++trial) {
    auto sys = testing::random_valid_system(rng, dim(rng));
    const Matrix e = matrix_exponential(sys.A, tdist(rng));
    CHECK(e.minCoeff() >= 0.0);
  }
}

TEST_CASE("discretize forward Euler matches the finite-difference map") {
  const auto d = discretize(swisshouse(), 900.0, 96, Scheme::ForwardEuler);
  CHECK(d.Ad(0, 0) == doctest::Approx(0.99775).epsilon(1e-12));
  CHECK(d.Bpd(0, 0) == doctest::Approx(4.5e-5).epsilon(1e-12));
  CHECK(d.Bdd(0, 0) == doctest::Approx(900.0 * 2.5e-6).epsilon(1e-12));
}

TEST_CASE("discretize exact hold matches the exponential") {
  const auto d = discretize(swisshouse(), 900.0, 96, Scheme::ExactZOH);
  CHECK(d.Ad(0, 0) == doctest::Approx(std::exp(-0.00225)).epsilon(1e-12));
  CHECK(std::abs(d.Ad(0, 0) - 0.9977525) < 1e-7);
  // Input map equals the hold integral (1 - e^{A dt}) / (-A) * B_p.
  const double expected = (1.0 - std::exp(-0.00225)) / 2.5e-6 * 5e-8;
  CHECK(d.Bpd(0, 0) == doctest::Approx(expected).epsilon(1e-10));
}

TEST_CASE("discretize handles the lossless limit under both schemes") {
  auto sys = swisshouse();
  sys.A.setZero();
  for (auto scheme : {Scheme::ForwardEuler, Scheme::ExactZOH}) {
    const auto d = discretize(sys, 900.0, 4, scheme);
    CHECK(d.Ad(0, 0) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(d.Bpd(0, 0) == doctest::Approx(900.0 * 5e-8).epsilon(1e-9));
  }
}

TEST_CASE("discretize rejects an unstable Euler step") {
  CHECK_THROWS_WITH_AS(
      discretize(swisshouse(), 4.1e5, 4, Scheme::ForwardEuler),
      doctest::Contains("dt"), std::invalid_argument);
}

TEST_CASE("free cooling crosses the comfort floor near the analytic time") {
  // T(t) = 10 + 13 exp(-t / 4e5); T = 22 at t = 4e5 ln(13/12) = 32017 s.
  const auto dsys = discretize(swisshouse(), 900.0, 96, Scheme::ExactZOH);
  const auto p = constant_disturbance(0.0, 900.0, 96);
  const auto d = constant_disturbance(10.0, 900.0, 96);
  const auto xs = simulate(dsys, p, d);
  int cross_step = -1;
  for (int k = 0; k <= 96; ++k)
    if (xs.values(k, 0) < 22.0) {
      cross_step = k;
      break;
    }
  REQUIRE(cross_step > 0);
  CHECK(std::abs(cross_step * 900.0 - 32017.0) <= 900.0);
}

TEST_CASE("hold power keeps the steady state exactly") {
  const auto dsys = discretize(swisshouse(), 900.0, 96, Scheme::ExactZOH);
  auto sys = swisshouse();
  sys.x0(0) = 22.0;
  auto dsys2 = discretize(sys, 900.0, 96, Scheme::ExactZOH);
  const auto p = constant_disturbance(600.0, 900.0, 96);
  const auto d = constant_disturbance(10.0, 900.0, 96);
  const auto xs = simulate(dsys2, p, d);
  for (int k = 0; k <= 96; ++k)
    CHECK(std::abs(xs.values(k, 0) - 22.0) < 1e-9);
}

TEST_CASE("pure integrator accumulates c dt per step") {
  LinearLossySystem sys = swisshouse();
  sys.A.setZero();
  sys.B_p.setConstant(1.0);
  sys.B_d.setZero();
  sys.x0.setZero();
  sys.x_min.setConstant(-1e18);
  sys.x_max.setConstant(1e18);
  const auto dsys = discretize(sys, 2.0, 5, Scheme::ExactZOH);
  const auto p = constant_disturbance(3.0, 2.0, 5);
  const auto d = constant_disturbance(0.0, 2.0, 5);
  const auto xs = simulate(dsys, p, d);
  for (int k = 0; k <= 5; ++k)
    CHECK(xs.values(k, 0) == doctest::Approx(6.0 * k).epsilon(1e-12));
}

TEST_CASE("feasibility verdict treats the boundary as feasible") {
  const auto sys = swisshouse();
  StateTrajectory xs;
  xs.dt = 900.0;
  xs.values = Matrix::Constant(5, 1, 22.0);
  auto v = check_state_feasibility(xs, sys);
  CHECK(v.feasible);
  CHECK(!v.first_violation_step);

  const double tol = (24.0 + 1e-6) - 24.0;  // representable overshoot
  xs.values.setConstant(24.0 + 1e-6);
  v = check_state_feasibility(xs, sys, tol);
  CHECK(v.feasible);  // exceeding by exactly tol stays feasible

  xs.values.setConstant(21.0);
  v = check_state_feasibility(xs, sys);
  CHECK(!v.feasible);
  CHECK(v.worst_under(0) == doctest::Approx(1.0));
  CHECK(v.first_violation_step.value() == 0);
}

TEST_CASE("early blast then idle undershoots the floor") {
  // Full power to 32.6 MJ then idle: the high early losses leave the state
  // below the floor before the day ends.
  const auto dsys = discretize(swisshouse(), 900.0, 96, Scheme::ExactZOH);
  Trajectory p = constant_disturbance(0.0, 900.0, 96);
  for (int k = 0; k < 36; ++k) p.values(k, 0) = 1000.0;
  const auto d = constant_disturbance(10.0, 900.0, 96);
  const auto verdict =
      check_state_feasibility(simulate(dsys, p, d), dsys.source);
  CHECK(!verdict.feasible);
  CHECK(verdict.worst_under(0) > 0.0);
}

TEST_CASE("Euler and exact discretizations converge as dt shrinks") {
  const auto sys = swisshouse();
  auto deviation = [&](double dt) {
    const int K = static_cast<int>(86400.0 / dt);
    const auto de = discretize(sys, dt, K, Scheme::ForwardEuler);
    const auto dz = discretize(sys, dt, K, Scheme::ExactZOH);
    const auto p = constant_disturbance(700.0, dt, K);
    const auto d = constant_disturbance(10.0, dt, K);
    const auto xe = simulate(de, p, d);
    const auto xz = simulate(dz, p, d);
    return (xe.values - xz.values).cwiseAbs().maxCoeff();
  };
  const double d1 = deviation(3600.0);
  const double d2 = deviation(1800.0);
  const double d3 = deviation(900.0);
  CHECK(d1 / d2 >= 1.5);
  CHECK(d2 / d3 >= 1.5);
}

TEST_CASE("simulation is bitwise deterministic") {
  const auto dsys = discretize(swisshouse(), 900.0, 96, Scheme::ExactZOH);
  Trajectory p = constant_disturbance(0.0, 900.0, 96);
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 1000.0);
  for (int k = 0; k < 96; ++k) p.values(k, 0) = u(rng);
  const auto d = constant_disturbance(10.0, 900.0, 96);
  const auto a = simulate(dsys, p, d);
  const auto b = simulate(dsys, p, d);
  CHECK(std::memcmp(a.values.data(), b.values.data(),
                    sizeof(double) * a.values.size()) == 0);
}

TEST_CASE("states respond monotonically to power for 1-D systems") {
  const auto dsys = discretize(swisshouse(), 900.0, 48, Scheme::ExactZOH);
  const auto d = constant_disturbance(10.0, 900.0, 48);
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    Trajectory lo_p = constant_disturbance(0.0, 900.0, 48);
    Trajectory hi_p = lo_p;
    for (int k = 0; k < 48; ++k) {
      lo_p.values(k, 0) = 1000.0 * u(rng);
      hi_p.values(k, 0) = lo_p.values(k, 0) + (1000.0 - lo_p.values(k, 0)) * u(rng);
    }
    const auto xlo = simulate(dsys, lo_p, d);
    const auto xhi = simulate(dsys, hi_p, d);
    CHECK((xhi.values - xlo.values).minCoeff() >= -1e-12);
  }
}
