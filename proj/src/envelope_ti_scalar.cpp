#include "envelope_detail.hpp"

#include <atomic>
#include <cmath>
#include <stdexcept>

namespace flexenv {

double weighted_energy_upper(const Trajectory& p, double A, int k) {
  if (p.values.cols() != 1)
    throw std::invalid_argument("weighted_energy_upper: 1-D systems only");
  if (k > p.steps())
    throw std::invalid_argument("weighted_energy_upper: k beyond trajectory");
  double e = 0.0;
  for (int l = 0; l < k; ++l)
    e += std::exp(A * p.dt * (k - l)) * p.values(l, 0) * p.dt;
  return e;
}

double weighted_energy_lower(const Trajectory& p, double A, int k) {
  if (p.values.cols() != 1)
    throw std::invalid_argument("weighted_energy_lower: 1-D systems only");
  if (k > p.steps())
    throw std::invalid_argument("weighted_energy_lower: k beyond trajectory");
  double e = 0.0;
  for (int l = 0; l < k; ++l)
    e += std::exp(-A * p.dt * l) * p.values(l, 0) * p.dt;
  return e;
}

namespace {

struct LeadResult {
  bool ok = false;
  bool infeasible = false;
  double energy = 0.0;
  Trajectory argopt;
};

LeadResult solve_weighted(const DiscreteSystem& dsys, const Trajectory& d,
                          int k, const Vector& w, bool upper, bool keep,
                          const opt::SolverOptions& sopts) {
  detail::LiftedLp l = detail::build_lifted(dsys, d, k);
  for (int step = 0; step < k; ++step)
    l.lp.c(l.p_index(step, 0)) = upper ? w(step) : -w(step);
  opt::SolveResult res = opt::solve_lp(l.lp, sopts);

  LeadResult out;
  if (res.status == opt::SolveStatus::Infeasible) {
    out.infeasible = true;
    return out;
  }
  if (!res.ok()) return out;
  out.ok = true;
  out.energy = detail::energy_from_objective(
      l, dsys.dt, upper ? res.objective : -res.objective);
  if (keep) {
    out.argopt.dt = dsys.dt;
    out.argopt.values.resize(k, 1);
    for (int step = 0; step < k; ++step)
      out.argopt.values(step, 0) = res.z(l.p_index(step, 0)) * l.p_ref;
  }
  return out;
}

}  // namespace

TiScalarEnvelope compute_ti_scalar_envelope(const DiscreteSystem& dsys,
                                            const Trajectory& d,
                                            const EnvelopeOptions& opts) {
  if (dsys.state_dim() != 1 || dsys.power_dim() != 1)
    throw std::invalid_argument("compute_ti_scalar_envelope: 1-D systems only");
  const int K = dsys.steps;
  if (d.steps() < K)
    throw std::invalid_argument("compute_ti_scalar_envelope: disturbance series shorter than horizon");

  const detail::GreedyPair greedy = detail::greedy_extremals(dsys, d, K);
  const int K_eff = greedy.feasible_steps;

  TiScalarEnvelope out;
  out.env.dt = dsys.dt;
  out.env.kind = EnvelopeKind::TI_scalar;
  out.env.E_down = Vector::Zero(K + 1);
  out.env.E_up = Vector::Zero(K + 1);
  if (K_eff < K) out.first_infeasible_step = K_eff + 1;
  if (opts.keep_per_lead_trajectories) {
    out.per_lead_plus.resize(K_eff + 1);
    out.per_lead_minus.resize(K_eff + 1);
  }

  std::vector<LeadResult> up(K_eff + 1), dn(K_eff + 1);
  std::atomic<int> first_bad{K_eff + 1};
  std::atomic<bool> numeric_failure{false};

  detail::parallel_for(1, K_eff + 1, opts.workers, [&](int k) {
    const Vector wu = detail::scheme_weights_upper(dsys, k);
    const Vector wl = detail::scheme_weights_lower(dsys, k);
    const bool keep = opts.keep_per_lead_trajectories;
    up[k] = solve_weighted(dsys, d, k, wu, true, keep, opts.solver);
    dn[k] = solve_weighted(dsys, d, k, wl, false, keep, opts.solver);
    if (up[k].infeasible || dn[k].infeasible) {
      int cur = first_bad.load();
      while (k < cur && !first_bad.compare_exchange_weak(cur, k)) {
      }
    } else if (!up[k].ok || !dn[k].ok) {
      numeric_failure = true;
    }
  });
  if (numeric_failure)
    throw SolverFailure("compute_ti_scalar_envelope: solver failed on a lead-time program");

  const int defined = std::min(K_eff, first_bad.load() - 1);
  if (first_bad.load() <= K_eff) out.first_infeasible_step = first_bad.load();
  for (int k = 1; k <= defined; ++k) {
    out.env.E_up(k) = up[k].energy;
    out.env.E_down(k) = dn[k].energy;
    if (opts.keep_per_lead_trajectories) {
      out.per_lead_plus[k] = up[k].argopt;
      out.per_lead_minus[k] = dn[k].argopt;
    }
  }
  out.env.defined_up_to = defined;
  detail::finalize_envelope(out.env, detail::snap_threshold(dsys));
  if (opts.keep_per_lead_trajectories) {
    out.per_lead_plus.resize(out.env.defined_up_to + 1);
    out.per_lead_minus.resize(out.env.defined_up_to + 1);
  }
  return out;
}

EnvelopeSeries ti_bounds_from_trajectory(const DiscreteSystem& dsys,
                                         const Trajectory& p_plus,
                                         const Trajectory& p_minus) {
  if (dsys.state_dim() != 1)
    throw std::invalid_argument("ti_bounds_from_trajectory: 1-D systems only");
  const int K = std::min(p_plus.steps(), p_minus.steps());

  EnvelopeSeries env;
  env.dt = dsys.dt;
  env.kind = EnvelopeKind::TI_scalar;
  env.E_down = Vector::Zero(K + 1);
  env.E_up = Vector::Zero(K + 1);
  env.defined_up_to = K;
  for (int k = 1; k <= K; ++k) {
    const Vector wu = detail::scheme_weights_upper(dsys, k);
    const Vector wl = detail::scheme_weights_lower(dsys, k);
    double eu = 0.0, ed = 0.0;
    for (int l = 0; l < k; ++l) {
      eu += wu(l) * p_plus.values(l, 0) * dsys.dt;
      ed += wl(l) * p_minus.values(l, 0) * dsys.dt;
    }
    env.E_up(k) = eu;
    env.E_down(k) = ed;
  }
  detail::finalize_envelope(env, detail::snap_threshold(dsys));
  return env;
}

}  // namespace flexenv
