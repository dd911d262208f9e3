#pragma once

#include "flexenv/envelope.hpp"

#include <functional>

namespace flexenv::detail {

/// Deterministic chunked parallel loop; body(i) must only write slot i.
void parallel_for(int begin, int end, int workers,
                  const std::function<void(int)>& body);

struct GreedyPair {
  Trajectory ceiling;  // pointwise-maximal states subject to x <= x_max
  Trajectory floor;    // pointwise-minimal states subject to x >= x_min
  int feasible_steps = 0;  // longest prefix on which the comfort band holds
};

/// Bound-hugging extremal trajectories for monotone systems with one load
/// per state (or a scalar pooled input via `pooled_delta`).
GreedyPair greedy_extremals(const DiscreteSystem& dsys, const Trajectory& d,
                            int max_steps);

GreedyPair greedy_extremals_pooled(const DiscreteSystem& dsys,
                                   const Trajectory& d,
                                   const DispatchPlan& delta,
                                   const Vector& ptot_min,
                                   const Vector& ptot_max, int max_steps);

/// Lifted per-lead-time program over scaled powers and explicit states:
/// variables [p~_0..p~_{k-1}, x_1..x_k], equality rows for the recursion,
/// pure box bounds otherwise. Powers are scaled by p_ref.
struct LiftedLp {
  opt::LinearProgram lp;
  double p_ref = 1.0;
  int k = 0;
  int np = 0, nx = 0;

  int p_index(int step, int load) const { return step * np + load; }
  int x_index(int step, int state) const {
    return k * np + (step - 1) * nx + state;
  }
};

LiftedLp build_lifted(const DiscreteSystem& dsys, const Trajectory& d, int k);

/// Objective = sum_l w(l) . p_l in scaled units; returns energy in joules.
double energy_from_objective(const LiftedLp& l, double dt, double objective);

/// Tightens an envelope to the equivalent monotone corridor (suffix-min on
/// the ceiling, prefix-max on the floor; identical trajectory set) and
/// truncates at the first effective crossing. Bound values below snap_zero
/// joules are numerical zeros from the interior-point solves and are
/// snapped, keeping exactly-zero regions comparable across envelope kinds.
void finalize_envelope(EnvelopeSeries& env, double snap_zero = 0.0);

/// 1e-8 of the full-horizon full-power energy.
double snap_threshold(const DiscreteSystem& dsys);

Vector scheme_weights_upper(const DiscreteSystem& dsys, int k);
Vector scheme_weights_lower(const DiscreteSystem& dsys, int k);

}  // namespace flexenv::detail
