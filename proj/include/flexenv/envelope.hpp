#pragma once

#include "flexenv/solver.hpp"
#include "flexenv/system.hpp"

#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace flexenv {

/// Raised when an optimization backend reports a numeric failure; per-lead
/// infeasibility is a result, not an error, and never raises this.
struct SolverFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class EnvelopeKind { TD, TI_scalar, TI_distributed_per_load, TI_centralized };

std::string to_string(EnvelopeKind k);

/// Cumulative-energy corridor: at step k any admissible consumption must lie
/// in [E_down(k), E_up(k)] joules. Entries beyond defined_up_to are NaN
/// (per-lead-time problem infeasible or bounds crossed, the MFPH truncation).
struct EnvelopeSeries {
  double dt = 0.0;
  EnvelopeKind kind = EnvelopeKind::TD;
  int defined_up_to = 0;  // last step index with valid bounds
  Vector E_down, E_up;    // length K+1, E(0) = 0

  int horizon_steps() const { return static_cast<int>(E_up.size()) - 1; }
};

struct EnvelopeOptions {
  int workers = 1;
  bool keep_per_lead_trajectories = false;
  opt::SolverOptions solver;
};

struct TdEnvelope {
  EnvelopeSeries env;
  Trajectory argmax, argmin;  // full-horizon extremal trajectories
  std::optional<int> first_infeasible_step;
};

TdEnvelope compute_td_envelope(const DiscreteSystem& dsys, const Trajectory& d,
                               const EnvelopeOptions& opts = {});

/// 1-D cross-check: per-lead-time LP bounds against the greedy
/// bound-hugging trajectories. Both deviations are relative.
struct GreedyDeviation {
  double upper = 0.0;
  double lower = 0.0;
};

GreedyDeviation greedy_td_check(const DiscreteSystem& dsys,
                                const Trajectory& d,
                                const EnvelopeOptions& opts = {});

/// Discrete forms of the exponentially weighted energies (1-D systems):
///   upper:  sum_{l<k} e^{A dt (k-l)} p_l dt
///   lower:  sum_{l<k} e^{-A dt l} p_l dt
/// Weights are taken at start-of-interval age so that A = 0 collapses to the
/// plain cumulative energy exactly.
double weighted_energy_upper(const Trajectory& p, double A, int k);
double weighted_energy_lower(const Trajectory& p, double A, int k);

struct TiScalarEnvelope {
  EnvelopeSeries env;
  std::vector<Trajectory> per_lead_plus, per_lead_minus;  // optional
  std::optional<int> first_infeasible_step;
};

TiScalarEnvelope compute_ti_scalar_envelope(const DiscreteSystem& dsys,
                                            const Trajectory& d,
                                            const EnvelopeOptions& opts = {});

/// Weighted bounds formed from fixed feasible trajectories (the comparison
/// mode: e.g. reuse the TD extremal trajectories; valid but possibly
/// narrower than the width-maximizing bounds).
EnvelopeSeries ti_bounds_from_trajectory(const DiscreteSystem& dsys,
                                         const Trajectory& p_plus,
                                         const Trajectory& p_minus);

/// Worst time-varying weights of the coupled-energy polytope:
///   alpha[k](i,j) = max_{0<=age<=k} (Ad^age B_p)(i,j),  beta the minimum.
struct WeightTensors {
  double dt = 0.0;
  std::vector<Matrix> alpha, beta;  // index k = 0..k_max
};

WeightTensors compute_weight_tensors(const DiscreteSystem& dsys, int k_max);

/// Weighted step response  b(k) = dt * sum_{l<k} Ad^{k-l} B_p p_l  per state.
Matrix weighted_response(const DiscreteSystem& dsys, const Trajectory& p);

struct DispatchPlan {
  Matrix delta;  // K x power_dim, rows sum to 1, entries >= 0

  int steps() const { return static_cast<int>(delta.rows()); }
};

std::vector<std::string> validate_dispatch(const DispatchPlan& plan);
DispatchPlan uniform_dispatch(int steps, int n_loads);
DispatchPlan indicator_dispatch(int steps, int n_loads, int load);

/// Per-load corridors from the largest box inscribed in the coupled-energy
/// polytope, solved as one whole-horizon concave log program.
struct BoxEnvelope {
  std::vector<EnvelopeSeries> per_load;
  Trajectory p_plus, p_minus;  // shared comparison trajectories
  Matrix b_plus, b_minus;      // weighted responses, (K+1) x state_dim
  std::vector<int> excluded_steps;
  int defined_up_to = 0;
};

BoxEnvelope compute_distributed_box(const DiscreteSystem& dsys,
                                    const Trajectory& d,
                                    const EnvelopeOptions& opts = {});

/// max/min over consumption ages of the dispatch-weighted kernel rows.
std::pair<Vector, Vector> compute_gamma(const DiscreteSystem& dsys,
                                        const DispatchPlan& delta, int k);

/// Pooled corridor for the total consumption under a fixed dispatch plan.
struct CentralizedEnvelope {
  EnvelopeSeries total;
  Vector ptot_min, ptot_max;  // per-step implied bounds on the pooled power
  DispatchPlan delta;
  std::optional<int> first_infeasible_step;
};

CentralizedEnvelope compute_centralized_envelope(const DiscreteSystem& dsys,
                                                 const Trajectory& d,
                                                 const DispatchPlan& delta,
                                                 const EnvelopeOptions& opts = {});

}  // namespace flexenv
