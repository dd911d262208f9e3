#include "envelope_detail.hpp"

#include <atomic>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace flexenv {

namespace {

struct LeadTimeResult {
  bool ok = false;
  bool infeasible = false;
  double energy = 0.0;
  Trajectory argopt;
};

LeadTimeResult solve_lead_time(const DiscreteSystem& dsys, const Trajectory& d,
                               int k, const Vector& step_weights, bool upper,
                               bool keep_trajectory,
                               const opt::SolverOptions& sopts) {
  detail::LiftedLp l = detail::build_lifted(dsys, d, k);
  for (int step = 0; step < k; ++step)
    for (int j = 0; j < l.np; ++j)
      l.lp.c(l.p_index(step, j)) = upper ? step_weights(step) : -step_weights(step);
  opt::SolveResult res = opt::solve_lp(l.lp, sopts);

  LeadTimeResult out;
  if (res.status == opt::SolveStatus::Infeasible) {
    out.infeasible = true;
    return out;
  }
  if (!res.ok()) return out;
  out.ok = true;
  const double obj = upper ? res.objective : -res.objective;
  out.energy = detail::energy_from_objective(l, dsys.dt, obj);
  if (keep_trajectory) {
    out.argopt.dt = dsys.dt;
    out.argopt.values.resize(k, l.np);
    for (int step = 0; step < k; ++step)
      for (int j = 0; j < l.np; ++j)
        out.argopt.values(step, j) = res.z(l.p_index(step, j)) * l.p_ref;
  }
  return out;
}

}  // namespace

TdEnvelope compute_td_envelope(const DiscreteSystem& dsys, const Trajectory& d,
                               const EnvelopeOptions& opts) {
  const int K = dsys.steps;
  if (d.steps() < K)
    throw std::invalid_argument("compute_td_envelope: disturbance series shorter than horizon");

  // The greedy pre-filter needs the one-driven-state-per-load pairing; for
  // general input maps the per-lead-time solver statuses do the truncation.
  int K_eff = K;
  try {
    K_eff = detail::greedy_extremals(dsys, d, K).feasible_steps;
  } catch (const std::invalid_argument&) {
  }

  TdEnvelope out;
  out.env.dt = dsys.dt;
  out.env.kind = EnvelopeKind::TD;
  out.env.E_down = Vector::Zero(K + 1);
  out.env.E_up = Vector::Zero(K + 1);
  if (K_eff < K) out.first_infeasible_step = K_eff + 1;

  std::vector<LeadTimeResult> up(K_eff + 1), dn(K_eff + 1);
  std::atomic<int> first_bad{K_eff + 1};
  std::atomic<bool> numeric_failure{false};

  detail::parallel_for(1, K_eff + 1, opts.workers, [&](int k) {
    const Vector w = Vector::Ones(k);
    const bool keep = (k == K_eff) || opts.keep_per_lead_trajectories;
    up[k] = solve_lead_time(dsys, d, k, w, true, keep, opts.solver);
    dn[k] = solve_lead_time(dsys, d, k, w, false, keep, opts.solver);
    if (up[k].infeasible || dn[k].infeasible) {
      int cur = first_bad.load();
      while (k < cur && !first_bad.compare_exchange_weak(cur, k)) {
      }
    } else if (!up[k].ok || !dn[k].ok) {
      numeric_failure = true;
    }
  });
  if (numeric_failure)
    throw SolverFailure("compute_td_envelope: solver failed on a lead-time program");

  int defined = std::min(K_eff, first_bad.load() - 1);
  if (first_bad.load() <= K_eff)
    out.first_infeasible_step = first_bad.load();
  for (int k = 1; k <= defined; ++k) {
    out.env.E_up(k) = up[k].energy;
    out.env.E_down(k) = dn[k].energy;
  }
  out.env.defined_up_to = defined;
  detail::finalize_envelope(out.env, detail::snap_threshold(dsys));

  if (defined >= 1) {
    out.argmax = up[defined].argopt;
    out.argmin = dn[defined].argopt;
  } else {
    out.argmax.dt = out.argmin.dt = dsys.dt;
    out.argmax.values.resize(0, dsys.power_dim());
    out.argmin.values.resize(0, dsys.power_dim());
  }
  return out;
}

GreedyDeviation greedy_td_check(const DiscreteSystem& dsys, const Trajectory& d,
                                const EnvelopeOptions& opts) {
  if (dsys.state_dim() != 1)
    throw std::invalid_argument("greedy_td_check: 1-D systems only");

  const TdEnvelope td = compute_td_envelope(dsys, d, opts);
  const detail::GreedyPair greedy =
      detail::greedy_extremals(dsys, d, dsys.steps);

  GreedyDeviation dev;
  double cum_hi = 0.0, cum_lo = 0.0;
  for (int k = 1; k <= td.env.defined_up_to; ++k) {
    cum_hi += greedy.ceiling.values(k - 1, 0) * dsys.dt;
    cum_lo += greedy.floor.values(k - 1, 0) * dsys.dt;
    const double scale_hi = std::max(1.0, std::abs(td.env.E_up(k)));
    const double scale_lo = std::max(1.0, std::abs(td.env.E_down(k)));
    dev.upper = std::max(dev.upper, std::abs(cum_hi - td.env.E_up(k)) / scale_hi);
    dev.lower = std::max(dev.lower, std::abs(cum_lo - td.env.E_down(k)) / scale_lo);
  }
  return dev;
}

}  // namespace flexenv
