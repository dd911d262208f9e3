#pragma once

#include <Eigen/Core>

#include <optional>
#include <string>
#include <vector>

namespace flexenv {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Continuous-time model  dx/dt = A x + B_p p + B_d d  with box bounds on the
/// power inputs and states. The diagonal of A is nonpositive (state-dependent
/// losses), the off-diagonal entries are nonnegative (Metzler) and B_p >= 0,
/// so states respond monotonically to the power history.
struct LinearLossySystem {
  Matrix A;     // 1/s
  Matrix B_p;   // (state unit)/(W s)
  Matrix B_d;
  Vector p_min, p_max;  // W
  Vector x_min, x_max;  // state units
  Vector x0;
  std::vector<std::string> state_labels;
  std::vector<std::string> power_labels;

  Eigen::Index state_dim() const { return A.rows(); }
  Eigen::Index power_dim() const { return B_p.cols(); }
  Eigen::Index dist_dim() const { return B_d.cols(); }
};

enum class Scheme { ForwardEuler, ExactZOH };

std::string to_string(Scheme s);
std::optional<Scheme> scheme_from_string(const std::string& name);

/// Time-stepped counterpart of a LinearLossySystem on a uniform grid:
///   x_{k+1} = Ad x_k + Bpd p_k + Bdd d_k.
struct DiscreteSystem {
  LinearLossySystem source;
  double dt = 0.0;
  int steps = 0;  // K
  Scheme scheme = Scheme::ExactZOH;
  Matrix Ad, Bpd, Bdd;

  Eigen::Index state_dim() const { return Ad.rows(); }
  Eigen::Index power_dim() const { return Bpd.cols(); }
  Eigen::Index dist_dim() const { return Bdd.cols(); }
};

/// Piecewise-constant input, one row per step, W.
struct Trajectory {
  double dt = 0.0;
  Matrix values;  // K x power_dim

  int steps() const { return static_cast<int>(values.rows()); }
  static Trajectory constant(double dt, int steps, const Vector& level);
};

/// Simulated states on the grid, row 0 holds the initial state.
struct StateTrajectory {
  double dt = 0.0;
  Matrix values;  // (K+1) x state_dim

  int steps() const { return static_cast<int>(values.rows()) - 1; }
};

/// Per-trajectory feasibility report against the state box.
struct TrajectoryVerdict {
  bool feasible = true;
  Vector worst_over;   // max(x - x_max, 0) per state
  Vector worst_under;  // max(x_min - x, 0) per state
  std::optional<int> first_violation_step;
};

/// Structural invariant check. Returns one message per violated invariant
/// (with the offending indices); an empty report means the model is in class.
/// Dimension-inconsistent inputs throw std::invalid_argument instead.
std::vector<std::string> validate_system(const LinearLossySystem& sys);

/// exp(A t) by scaling-and-squaring with a Pade core. Entrywise nonnegative
/// for Metzler A and t >= 0.
Matrix matrix_exponential(const Matrix& A, double t);

/// Discretization. ForwardEuler requires dt |A_ii| < 1 for all i; ExactZOH
/// integrates the input maps over one hold interval (valid for singular A).
DiscreteSystem discretize(const LinearLossySystem& sys, double dt, int steps,
                          Scheme scheme);

StateTrajectory simulate(const DiscreteSystem& dsys, const Trajectory& p,
                         const Trajectory& d);

TrajectoryVerdict check_state_feasibility(const StateTrajectory& xs,
                                          const LinearLossySystem& sys,
                                          double tol = 1e-6);

}  // namespace flexenv
