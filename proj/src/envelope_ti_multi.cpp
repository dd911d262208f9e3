#include "envelope_detail.hpp"

#include <atomic>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace flexenv {

namespace {

constexpr double kGapFloor = 1e-6;  // smallest usable scaled energy gap

struct InclusionResult {
  bool included = false;
  Vector E_plus, E_minus;  // scaled warm values
};

// Fixed-trajectory box existence at lead time k: the responses of the greedy
// pair are one admissible choice of b+/b-, so a positive max-min gap here
// certifies that the joint program has interior gap terms at k.
InclusionResult gap_inclusion(const Matrix& alpha_s, const Matrix& beta_s,
                              const Vector& y_plus, const Vector& y_minus,
                              double e_big,
                              const opt::SolverOptions& sopts) {
  const int np = static_cast<int>(alpha_s.cols());
  const int nx = static_cast<int>(alpha_s.rows());
  const int n = 2 * np + 1;

  opt::LinearProgram lp = opt::LinearProgram::boxed(n);
  lp.c = Vector::Zero(n);
  lp.c(n - 1) = 1.0;
  lp.lo = Vector::Constant(n, -e_big);
  lp.hi = Vector::Constant(n, e_big);

  std::vector<opt::Triplet> trips;
  Vector h(2 * nx + np);
  for (int i = 0; i < nx; ++i) {
    for (int j = 0; j < np; ++j) {
      if (alpha_s(i, j) != 0.0) trips.emplace_back(i, j, alpha_s(i, j));
      if (beta_s(i, j) != 0.0) trips.emplace_back(nx + i, np + j, -beta_s(i, j));
    }
    h(i) = y_plus(i);
    h(nx + i) = -y_minus(i);
  }
  for (int j = 0; j < np; ++j) {
    trips.emplace_back(2 * nx + j, np + j, 1.0);
    trips.emplace_back(2 * nx + j, j, -1.0);
    trips.emplace_back(2 * nx + j, n - 1, 1.0);
    h(2 * nx + j) = 0.0;
  }
  lp.G.resize(2 * nx + np, n);
  lp.G.setFromTriplets(trips.begin(), trips.end());
  lp.h = h;
  lp.F.resize(0, n);
  lp.g.resize(0);

  opt::SolveResult res = opt::solve_lp(lp, sopts);
  InclusionResult out;
  if (!res.ok() || res.objective <= kGapFloor) return out;
  out.included = true;
  out.E_plus = res.z.segment(0, np);
  out.E_minus = res.z.segment(np, np);
  return out;
}

}  // namespace

BoxEnvelope compute_distributed_box(const DiscreteSystem& dsys,
                                    const Trajectory& d,
                                    const EnvelopeOptions& opts) {
  const auto& sys = dsys.source;
  const int K = dsys.steps;
  const int np = static_cast<int>(dsys.power_dim());
  const int nx = static_cast<int>(dsys.state_dim());
  if (d.steps() < K)
    throw std::invalid_argument("compute_distributed_box: disturbance series shorter than horizon");

  // Feasible comparison pair for the interiority certificates: the greedy
  // bound huggers when each load drives one state, otherwise the extremal
  // trajectories of the TD program.
  detail::GreedyPair greedy;
  bool have_greedy = true;
  try {
    greedy = detail::greedy_extremals(dsys, d, K);
  } catch (const std::invalid_argument&) {
    have_greedy = false;
  }
  if (!have_greedy) {
    const TdEnvelope td = compute_td_envelope(dsys, d, opts);
    greedy.feasible_steps = td.env.defined_up_to;
    greedy.ceiling = td.argmax;
    greedy.floor = td.argmin;
  }
  const int K_eff = greedy.feasible_steps;

  const double p_ref = std::max(1.0, sys.p_max.maxCoeff());
  const double e_unit = p_ref * dsys.dt;  // joules per scaled energy unit
  const double e_big = 2.0 * K + 2.0;

  BoxEnvelope out;
  out.p_plus.dt = out.p_minus.dt = dsys.dt;
  out.p_plus.values = Matrix::Zero(0, np);
  out.p_minus.values = Matrix::Zero(0, np);
  out.per_load.resize(np);
  for (int j = 0; j < np; ++j) {
    EnvelopeSeries& env = out.per_load[j];
    env.dt = dsys.dt;
    env.kind = EnvelopeKind::TI_distributed_per_load;
    env.E_down = Vector::Zero(K + 1);
    env.E_up = Vector::Zero(K + 1);
    env.defined_up_to = 0;
  }

  // Weighted responses of the greedy pair, scaled rows (K units).
  const Matrix resp_plus = weighted_response(dsys, greedy.ceiling);
  const Matrix resp_minus = weighted_response(dsys, greedy.floor);
  const WeightTensors tensors = compute_weight_tensors(dsys, K_eff);

  // Longest prefix of lead times with interior gaps at the greedy pair.
  int Kb = 0;
  std::vector<InclusionResult> inc(K_eff + 1);
  for (int k = 1; k <= K_eff; ++k) {
    inc[k] = gap_inclusion(tensors.alpha[k] * e_unit, tensors.beta[k] * e_unit,
                           resp_plus.row(k), resp_minus.row(k), e_big,
                           opts.solver);
    if (!inc[k].included) break;
    Kb = k;
  }
  for (int k = Kb + 1; k <= K; ++k) out.excluded_steps.push_back(k);
  out.defined_up_to = Kb;
  if (Kb == 0) {
    for (int j = 0; j < np; ++j) detail::finalize_envelope(out.per_load[j]);
    out.b_plus = Matrix::Zero(K + 1, nx);
    out.b_minus = Matrix::Zero(K + 1, nx);
    return out;
  }

  // One whole-horizon concave log program: shared trajectory pair, explicit
  // states and weighted responses, per-(k, load) box corners.
  const int o_pp = 0;
  const int o_xp = o_pp + Kb * np;
  const int o_yp = o_xp + Kb * nx;
  const int o_pm = o_yp + Kb * nx;
  const int o_xm = o_pm + Kb * np;
  const int o_ym = o_xm + Kb * nx;
  const int o_ep = o_ym + Kb * nx;
  const int o_em = o_ep + Kb * np;
  const int n = o_em + Kb * np;

  auto p_idx = [&](int base, int step, int j) { return base + step * np + j; };
  auto s_idx = [&](int base, int step, int i) {
    return base + (step - 1) * nx + i;  // step = 1..Kb
  };
  auto e_idx = [&](int base, int k, int j) { return base + (k - 1) * np + j; };

  opt::ConcaveLogProgram prog;
  prog.base = opt::LinearProgram::boxed(n);
  opt::LinearProgram& lp = prog.base;

  const double y_big = 10.0 + 10.0 * K * dsys.dt * sys.B_p.maxCoeff() * p_ref;
  for (int block : {o_pp, o_pm})
    for (int step = 0; step < Kb; ++step)
      for (int j = 0; j < np; ++j) {
        lp.lo(p_idx(block, step, j)) = sys.p_min(j) / p_ref;
        lp.hi(p_idx(block, step, j)) = sys.p_max(j) / p_ref;
      }
  for (int block : {o_xp, o_xm})
    for (int step = 1; step <= Kb; ++step)
      for (int i = 0; i < nx; ++i) {
        lp.lo(s_idx(block, step, i)) = sys.x_min(i);
        lp.hi(s_idx(block, step, i)) = sys.x_max(i);
      }
  for (int block : {o_yp, o_ym})
    for (int step = 1; step <= Kb; ++step)
      for (int i = 0; i < nx; ++i) {
        lp.lo(s_idx(block, step, i)) = -y_big;
        lp.hi(s_idx(block, step, i)) = y_big;
      }
  for (int block : {o_ep, o_em})
    for (int k = 1; k <= Kb; ++k)
      for (int j = 0; j < np; ++j) {
        lp.lo(e_idx(block, k, j)) = -e_big;
        lp.hi(e_idx(block, k, j)) = e_big;
      }

  const Matrix Bt = dsys.Bpd * p_ref;                       // state input map
  const Matrix Ct = dsys.dt * (dsys.Ad * sys.B_p) * p_ref;  // response map

  std::vector<opt::Triplet> ft;
  Vector g = Vector::Zero(4 * Kb * nx);
  int row = 0;
  auto add_recursion = [&](int o_p, int o_s, const Matrix& In, bool with_x0) {
    for (int step = 0; step < Kb; ++step) {
      for (int i = 0; i < nx; ++i, ++row) {
        ft.emplace_back(row, s_idx(o_s, step + 1, i), 1.0);
        for (int j = 0; j < np; ++j)
          if (In(i, j) != 0.0)
            ft.emplace_back(row, p_idx(o_p, step, j), -In(i, j));
        if (step == 0) {
          if (with_x0) g(row) = (dsys.Ad * sys.x0)(i);
        } else {
          for (int m = 0; m < nx; ++m)
            if (dsys.Ad(i, m) != 0.0)
              ft.emplace_back(row, s_idx(o_s, step, m), -dsys.Ad(i, m));
        }
        if (with_x0 && dsys.dist_dim() > 0)
          g(row) += (dsys.Bdd * d.values.row(step).transpose())(i);
      }
    }
  };
  add_recursion(o_pp, o_xp, Bt, true);
  add_recursion(o_pp, o_yp, Ct, false);
  add_recursion(o_pm, o_xm, Bt, true);
  add_recursion(o_pm, o_ym, Ct, false);
  lp.F.resize(row, n);
  lp.F.setFromTriplets(ft.begin(), ft.end());
  lp.g = g;

  std::vector<opt::Triplet> gt;
  Vector h = Vector::Zero(2 * Kb * nx);
  int grow = 0;
  for (int k = 1; k <= Kb; ++k) {
    const Matrix alpha_s = tensors.alpha[k] * e_unit;
    const Matrix beta_s = tensors.beta[k] * e_unit;
    for (int i = 0; i < nx; ++i, ++grow) {
      for (int j = 0; j < np; ++j)
        if (alpha_s(i, j) != 0.0)
          gt.emplace_back(grow, e_idx(o_ep, k, j), alpha_s(i, j));
      gt.emplace_back(grow, s_idx(o_yp, k, i), -1.0);
    }
    for (int i = 0; i < nx; ++i, ++grow) {
      gt.emplace_back(grow, s_idx(o_ym, k, i), 1.0);
      for (int j = 0; j < np; ++j)
        if (beta_s(i, j) != 0.0)
          gt.emplace_back(grow, e_idx(o_em, k, j), -beta_s(i, j));
    }
  }
  lp.G.resize(grow, n);
  lp.G.setFromTriplets(gt.begin(), gt.end());
  lp.h = h;

  for (int k = 1; k <= Kb; ++k)
    for (int j = 0; j < np; ++j) {
      opt::LogTerm t;
      t.a.resize(n);
      t.a.insert(e_idx(o_ep, k, j)) = 1.0;
      t.a.insert(e_idx(o_em, k, j)) = -1.0;
      prog.gaps.push_back(std::move(t));
    }

  // Warm start: the greedy pair with its exact states/responses and the
  // per-k inclusion boxes.
  prog.warm_start = Vector::Zero(n);
  {
    const StateTrajectory xs_p = simulate(dsys, greedy.ceiling, d);
    const StateTrajectory xs_m = simulate(dsys, greedy.floor, d);
    for (int step = 0; step < Kb; ++step)
      for (int j = 0; j < np; ++j) {
        prog.warm_start(p_idx(o_pp, step, j)) =
            greedy.ceiling.values(step, j) / p_ref;
        prog.warm_start(p_idx(o_pm, step, j)) =
            greedy.floor.values(step, j) / p_ref;
      }
    for (int step = 1; step <= Kb; ++step)
      for (int i = 0; i < nx; ++i) {
        prog.warm_start(s_idx(o_xp, step, i)) = xs_p.values(step, i);
        prog.warm_start(s_idx(o_xm, step, i)) = xs_m.values(step, i);
        prog.warm_start(s_idx(o_yp, step, i)) = resp_plus(step, i);
        prog.warm_start(s_idx(o_ym, step, i)) = resp_minus(step, i);
      }
    for (int k = 1; k <= Kb; ++k)
      for (int j = 0; j < np; ++j) {
        prog.warm_start(e_idx(o_ep, k, j)) = inc[k].E_plus(j);
        prog.warm_start(e_idx(o_em, k, j)) = inc[k].E_minus(j);
      }
  }

  opt::SolveResult res = opt::solve_log_box(prog, opts.solver);
  if (!res.ok())
    throw SolverFailure("compute_distributed_box: joint program failed (" +
                       opt::to_string(res.status) + ")");

  out.p_plus.values = Matrix::Zero(Kb, np);
  out.p_minus.values = Matrix::Zero(Kb, np);
  for (int step = 0; step < Kb; ++step)
    for (int j = 0; j < np; ++j) {
      out.p_plus.values(step, j) = res.z(p_idx(o_pp, step, j)) * p_ref;
      out.p_minus.values(step, j) = res.z(p_idx(o_pm, step, j)) * p_ref;
    }
  for (int j = 0; j < np; ++j) {
    EnvelopeSeries& env = out.per_load[j];
    env.defined_up_to = Kb;
    for (int k = 1; k <= Kb; ++k) {
      env.E_up(k) = res.z(e_idx(o_ep, k, j)) * e_unit;
      env.E_down(k) = res.z(e_idx(o_em, k, j)) * e_unit;
    }
    // Plain cumulative energies are nonnegative; a negative floor is a
    // vacuous constraint, clip it for corridor semantics.
    for (int k = 0; k <= Kb; ++k)
      env.E_down(k) = std::max(env.E_down(k), 0.0);
    detail::finalize_envelope(env, detail::snap_threshold(dsys));
  }
  out.b_plus = weighted_response(dsys, out.p_plus);
  out.b_minus = weighted_response(dsys, out.p_minus);
  return out;
}

CentralizedEnvelope compute_centralized_envelope(const DiscreteSystem& dsys,
                                                 const Trajectory& d,
                                                 const DispatchPlan& delta,
                                                 const EnvelopeOptions& opts) {
  const auto& sys = dsys.source;
  const int K = dsys.steps;
  const int np = static_cast<int>(dsys.power_dim());
  const int nx = static_cast<int>(dsys.state_dim());
  if (d.steps() < K)
    throw std::invalid_argument("compute_centralized_envelope: disturbance series shorter than horizon");
  if (delta.steps() < K)
    throw std::invalid_argument("compute_centralized_envelope: dispatch plan shorter than horizon");
  if (auto rep = validate_dispatch(delta); !rep.empty())
    throw std::invalid_argument("compute_centralized_envelope: " + rep.front());

  CentralizedEnvelope out;
  out.delta = delta;
  out.total.dt = dsys.dt;
  out.total.kind = EnvelopeKind::TI_centralized;
  out.total.E_down = Vector::Zero(K + 1);
  out.total.E_up = Vector::Zero(K + 1);
  out.ptot_min = Vector::Zero(K);
  out.ptot_max = Vector::Zero(K);

  // Individual ratings translate to per-step bounds on the pooled power.
  int K_bounds = K;
  for (int l = 0; l < K && l < K_bounds; ++l) {
    double lo = 0.0, hi = opt::kInf;
    for (int j = 0; j < np; ++j) {
      const double dl = delta.delta(l, j);
      if (dl > 0.0) {
        lo = std::max(lo, sys.p_min(j) / dl);
        hi = std::min(hi, sys.p_max(j) / dl);
      } else if (sys.p_min(j) > 0.0) {
        K_bounds = l;  // idle load cannot meet its minimum draw
      }
    }
    if (lo > hi + 1e-12) K_bounds = l;
    out.ptot_min(l) = lo;
    out.ptot_max(l) = std::isfinite(hi) ? hi : sys.p_max.sum();
  }

  const detail::GreedyPair greedy = detail::greedy_extremals_pooled(
      dsys, d, delta, out.ptot_min, out.ptot_max, K_bounds);
  const int K_eff = greedy.feasible_steps;
  if (K_eff < K) out.first_infeasible_step = K_eff + 1;

  const double p_ref = std::max(1.0, out.ptot_max.head(std::max(K_eff, 1)).maxCoeff());
  const double e_unit = p_ref * dsys.dt;
  const double e_big = 2.0 * K + 2.0;
  const double y_big = 10.0 + 10.0 * K * dsys.dt * sys.B_p.maxCoeff() * p_ref;

  struct Lead {
    bool ok = false;
    bool infeasible = false;
    double up = 0.0, down = 0.0;
  };
  std::vector<Lead> lead(K_eff + 1);
  std::atomic<int> first_bad{K_eff + 1};
  std::atomic<bool> numeric_failure{false};

  detail::parallel_for(1, K_eff + 1, opts.workers, [&](int k) {
    const auto [gp, gm] = compute_gamma(dsys, delta, k);

    const int o_x = k;
    const int o_y = k + k * nx;
    const int n = k * (1 + 2 * nx) + 1;
    const int ie = n - 1;
    auto x_at = [&](int step, int i) { return o_x + (step - 1) * nx + i; };
    auto y_at = [&](int step, int i) { return o_y + (step - 1) * nx + i; };

    opt::LinearProgram lp = opt::LinearProgram::boxed(n);
    for (int l = 0; l < k; ++l) {
      lp.lo(l) = out.ptot_min(l) / p_ref;
      lp.hi(l) = out.ptot_max(l) / p_ref;
    }
    for (int step = 1; step <= k; ++step)
      for (int i = 0; i < nx; ++i) {
        lp.lo(x_at(step, i)) = sys.x_min(i);
        lp.hi(x_at(step, i)) = sys.x_max(i);
        lp.lo(y_at(step, i)) = -y_big;
        lp.hi(y_at(step, i)) = y_big;
      }
    lp.lo(ie) = -e_big;
    lp.hi(ie) = e_big;

    std::vector<opt::Triplet> ft;
    Vector g = Vector::Zero(2 * k * nx);
    int row = 0;
    for (int step = 0; step < k; ++step) {
      const Vector beff = (dsys.Bpd * delta.delta.row(step).transpose()) * p_ref;
      const Vector ceff =
          dsys.dt * (dsys.Ad * sys.B_p * delta.delta.row(step).transpose()) *
          p_ref;
      for (int i = 0; i < nx; ++i) {
        ft.emplace_back(row, x_at(step + 1, i), 1.0);
        if (beff(i) != 0.0) ft.emplace_back(row, step, -beff(i));
        if (step == 0)
          g(row) = (dsys.Ad * sys.x0)(i);
        else
          for (int m = 0; m < nx; ++m)
            if (dsys.Ad(i, m) != 0.0)
              ft.emplace_back(row, x_at(step, m), -dsys.Ad(i, m));
        if (dsys.dist_dim() > 0)
          g(row) += (dsys.Bdd * d.values.row(step).transpose())(i);
        ++row;
        ft.emplace_back(row, y_at(step + 1, i), 1.0);
        if (ceff(i) != 0.0) ft.emplace_back(row, step, -ceff(i));
        if (step > 0)
          for (int m = 0; m < nx; ++m)
            if (dsys.Ad(i, m) != 0.0)
              ft.emplace_back(row, y_at(step, m), -dsys.Ad(i, m));
        ++row;
      }
    }
    lp.F.resize(row, n);
    lp.F.setFromTriplets(ft.begin(), ft.end());
    lp.g = g;

    auto run = [&](bool upper) -> std::pair<opt::SolveStatus, double> {
      opt::LinearProgram prob = lp;
      std::vector<opt::Triplet> gt;
      Vector h = Vector::Zero(nx);
      for (int i = 0; i < nx; ++i) {
        if (upper) {
          const double coeff = gp(i) * e_unit;
          if (coeff != 0.0) gt.emplace_back(i, ie, coeff);
          gt.emplace_back(i, y_at(k, i), -1.0);
        } else {
          gt.emplace_back(i, y_at(k, i), 1.0);
          const double coeff = gm(i) * e_unit;
          if (coeff != 0.0) gt.emplace_back(i, ie, -coeff);
        }
      }
      prob.G.resize(nx, n);
      prob.G.setFromTriplets(gt.begin(), gt.end());
      prob.h = h;
      prob.c = Vector::Zero(n);
      prob.c(ie) = upper ? 1.0 : -1.0;
      opt::SolveResult res = opt::solve_lp(prob, opts.solver);
      if (!res.ok()) return {res.status, 0.0};
      return {res.status, (upper ? res.objective : -res.objective) * e_unit};
    };

    const auto [st_up, e_up] = run(true);
    const auto [st_dn, e_dn] = run(false);
    if (st_up == opt::SolveStatus::Infeasible ||
        st_dn == opt::SolveStatus::Infeasible) {
      lead[k].infeasible = true;
      int cur = first_bad.load();
      while (k < cur && !first_bad.compare_exchange_weak(cur, k)) {
      }
      return;
    }
    if (st_up != opt::SolveStatus::Optimal ||
        st_dn != opt::SolveStatus::Optimal) {
      numeric_failure = true;
      return;
    }
    lead[k].ok = true;
    lead[k].up = e_up;
    lead[k].down = e_dn;
  });
  if (numeric_failure)
    throw SolverFailure("compute_centralized_envelope: solver failed on a lead-time program");

  const int defined = std::min(K_eff, first_bad.load() - 1);
  if (first_bad.load() <= K_eff) out.first_infeasible_step = first_bad.load();
  for (int k = 1; k <= defined; ++k) {
    out.total.E_up(k) = lead[k].up;
    out.total.E_down(k) = std::max(lead[k].down, 0.0);
  }
  out.total.defined_up_to = defined;
  detail::finalize_envelope(out.total, detail::snap_threshold(dsys));
  return out;
}

}  // namespace flexenv
