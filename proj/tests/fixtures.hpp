#pragma once

#include "flexenv/rc.hpp"
#include "flexenv/system.hpp"

#include <random>

namespace flexenv::testing {

// One-zone light well-insulated house: C = 20 MJ/K, 1/R = 50 W/K,
// T_a = 10 C, T0 = 23 C, comfort [22, 24] C, heater 0..1 kW.
inline LinearLossySystem swisshouse() {
  LinearLossySystem sys;
  sys.A = Matrix::Constant(1, 1, -2.5e-6);
  sys.B_p = Matrix::Constant(1, 1, 5e-8);
  sys.B_d = Matrix::Constant(1, 1, 2.5e-6);
  sys.p_min = Vector::Constant(1, 0.0);
  sys.p_max = Vector::Constant(1, 1000.0);
  sys.x_min = Vector::Constant(1, 22.0);
  sys.x_max = Vector::Constant(1, 24.0);
  sys.x0 = Vector::Constant(1, 23.0);
  sys.state_labels = {"room"};
  sys.power_labels = {"heater"};
  return sys;
}

inline rc::RcNetwork swisshouse_rc() {
  rc::RcNetwork net;
  rc::Room room;
  room.label = "room";
  room.C = 2.0e7;
  room.R_amb = 0.02;
  room.heated = true;
  room.p_max = 1000.0;
  net.rooms.push_back(room);
  net.comfort = rc::Comfort{22.0, 24.0};
  net.T0 = 23.0;
  return net;
}

inline Trajectory constant_disturbance(double value, double dt, int steps) {
  return Trajectory::constant(dt, steps, Vector::Constant(1, value));
}

// Random Metzler system with nonpositive diagonal, B_p >= 0 and a sane
// comfort band; used by the sign/soundness property suites.
inline LinearLossySystem random_valid_system(std::mt19937_64& rng, int n) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  LinearLossySystem sys;
  sys.A = Matrix::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (i == j) continue;
      if (u(rng) < 0.6) sys.A(i, j) = 4e-6 * u(rng);
    }
    double row = 0.0;
    for (int j = 0; j < n; ++j)
      if (j != i) row += sys.A(i, j);
    sys.A(i, i) = -(row + 4e-6 * u(rng));
  }
  sys.B_p = Matrix::Zero(n, n);
  for (int i = 0; i < n; ++i) sys.B_p(i, i) = 1e-7 * (0.5 + u(rng));
  sys.B_d = Matrix::Zero(n, 1);
  for (int i = 0; i < n; ++i) sys.B_d(i, 0) = 2e-6 * u(rng);
  sys.p_min = Vector::Zero(n);
  sys.p_max = Vector::Constant(n, 500.0 + 1500.0 * u(rng));
  sys.x_min = Vector::Constant(n, 22.0);
  sys.x_max = Vector::Constant(n, 24.0);
  sys.x0 = Vector::Constant(n, 22.5 + u(rng));
  return sys;
}

}  // namespace flexenv::testing
