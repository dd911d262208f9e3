#pragma once

#include "flexenv/envelope.hpp"
#include "flexenv/system.hpp"

#include <cstdint>
#include <optional>
#include <vector>

namespace flexenv::verify {

/// Corridor membership of a single-channel cumulative-energy trajectory.
bool corridor_contains(const EnvelopeSeries& env, const Trajectory& p,
                       double tol = 1e-6);

struct SampleResult {
  bool ok = false;
  Trajectory trajectory;
  int dead_end_step = -1;
  int backtracks = 0;
};

/// Draws a corridor-feasible power trajectory: at each step the power is
/// uniform on the power interval intersected with the reachable corridor
/// window, with bounded backtracking on dead ends. Reproducible from seed.
SampleResult sample_in_envelope(const EnvelopeSeries& env, const Vector& p_lo,
                                const Vector& p_hi, std::uint64_t seed,
                                int max_backtracks = 10);

/// Convenience for 1-D systems.
SampleResult sample_in_envelope(const EnvelopeSeries& env,
                                const LinearLossySystem& sys,
                                std::uint64_t seed);

/// Keeps drawing seeds (seed, seed+1, ...) until `count` corridor-feasible
/// trajectories exist; dead ends are counted, not hidden.
struct SampleBatch {
  std::vector<Trajectory> trajectories;
  int dead_ends = 0;
};

SampleBatch sample_many(const EnvelopeSeries& env, const Vector& p_lo,
                        const Vector& p_hi, std::uint64_t seed, int count);

enum class ExtremeMode {
  EarliestMax,      // ride the corridor ceiling
  LatestMax,        // reach the ceiling's final energy as late as possible
  EarliestThenMin,  // full power early, then the corridor minimum (scenario B)
  LatestMin,        // corridor minimum throughout (scenario A)
};

Trajectory extreme_trajectory(const EnvelopeSeries& env, const Vector& p_lo,
                              const Vector& p_hi, ExtremeMode mode);

Trajectory extreme_trajectory(const EnvelopeSeries& env,
                              const LinearLossySystem& sys, ExtremeMode mode);

/// Worst comfort deviations over the two adversarial corridor trajectories
/// of a TD envelope (1-D systems).
struct DiscomfortReport {
  double worst_above = 0.0;  // max of T - T_max, clipped at 0
  double worst_below = 0.0;  // max of T_min - T, clipped at 0
  Trajectory above_trajectory, below_trajectory;
};

DiscomfortReport worst_discomfort(const DiscreteSystem& dsys,
                                  const Trajectory& d,
                                  const EnvelopeSeries& td_env);

/// Restriction of an envelope to the first k steps.
EnvelopeSeries envelope_prefix(const EnvelopeSeries& env, int k);

/// sum_{l<=k} (E_up - E_down)(l) * dt, truncated at defined_up_to.
double envelope_area(const EnvelopeSeries& env, int k);

/// 1 - area_ti/area_td; empty when the reference area is zero.
std::optional<double> area_reduction(const EnvelopeSeries& ti,
                                     const EnvelopeSeries& td, int k);

/// dt * (first step with E_up < E_down, or the first undefined step);
/// the full horizon when the corridor never closes.
double mfph_seconds(const EnvelopeSeries& env);

struct MetricsRow {
  std::string label;
  int horizon_steps = 0;
  double horizon_s = 0.0;
  double area_td = 0.0, area_ti = 0.0;  // joule-seconds
  std::optional<double> reduction;
  double mfph_s = 0.0;
  double worst_above_C = 0.0, worst_below_C = 0.0;
};

/// Exhaustive enumeration of power trajectories on a uniform per-load grid.
struct OracleTables {
  double dt = 0.0;
  int levels = 0, steps = 0, n_loads = 0;
  std::vector<Matrix> cumulative;        // per trajectory, (steps+1) x loads, J
  std::vector<int> comfort_ok_through;   // last grid step within comfort
  Vector max_feasible, min_feasible;     // total energy per lead time 1..steps
};

OracleTables brute_force_oracle(const DiscreteSystem& dsys,
                                const Trajectory& d, int power_levels,
                                int k_max, double comfort_tol = 1e-9);

/// (a) TD enclosure: LP bounds must contain the oracle's feasible-energy
/// range, and track it within one power-grid increment.
struct EnclosureCheck {
  bool enclosed = true;
  double max_defect = 0.0;   // how far a feasible energy escapes the bounds
  double max_slack = 0.0;    // how far the bounds exceed the oracle range
};

EnclosureCheck oracle_td_enclosure(const OracleTables& oracle,
                                   const EnvelopeSeries& td);

/// (b, c) TI soundness and non-vacuity: every enumerated trajectory inside
/// the corridor(s) must satisfy comfort; at least one must lie inside.
struct SoundnessCheck {
  int inside = 0;
  int violations = 0;
  double worst_violation = 0.0;
};

SoundnessCheck oracle_ti_soundness(const OracleTables& oracle,
                                   const DiscreteSystem& dsys,
                                   const Trajectory& d,
                                   const std::vector<EnvelopeSeries>& per_load,
                                   double comfort_tol = 0.01);

/// Same check with a pooled corridor on the total energy.
SoundnessCheck oracle_ti_soundness_total(const OracleTables& oracle,
                                         const DiscreteSystem& dsys,
                                         const Trajectory& d,
                                         const EnvelopeSeries& total,
                                         double comfort_tol = 0.01);

}  // namespace flexenv::verify
