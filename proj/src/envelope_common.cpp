#include "envelope_detail.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <future>
#include <limits>
#include <stdexcept>

namespace flexenv {

std::string to_string(EnvelopeKind k) {
  switch (k) {
    case EnvelopeKind::TD: return "TD";
    case EnvelopeKind::TI_scalar: return "TI_scalar";
    case EnvelopeKind::TI_distributed_per_load: return "TI_distributed_per_load";
    case EnvelopeKind::TI_centralized: return "TI_centralized";
  }
  return "unknown";
}

std::vector<std::string> validate_dispatch(const DispatchPlan& plan) {
  std::vector<std::string> report;
  for (int k = 0; k < plan.delta.rows(); ++k) {
    const double sum = plan.delta.row(k).sum();
    if (std::abs(sum - 1.0) > 1e-9)
      report.push_back("dispatch row " + std::to_string(k) +
                       " does not sum to 1");
    for (int j = 0; j < plan.delta.cols(); ++j)
      if (plan.delta(k, j) < 0.0)
        report.push_back("dispatch entry (" + std::to_string(k) + "," +
                         std::to_string(j) + ") negative");
  }
  return report;
}

DispatchPlan uniform_dispatch(int steps, int n_loads) {
  DispatchPlan p;
  p.delta = Matrix::Constant(steps, n_loads, 1.0 / n_loads);
  return p;
}

DispatchPlan indicator_dispatch(int steps, int n_loads, int load) {
  DispatchPlan p;
  p.delta = Matrix::Zero(steps, n_loads);
  p.delta.col(load).setOnes();
  return p;
}

Matrix weighted_response(const DiscreteSystem& dsys, const Trajectory& p) {
  const int K = p.steps();
  const auto nx = dsys.state_dim();
  Matrix b = Matrix::Zero(K + 1, nx);
  Vector y = Vector::Zero(nx);
  for (int k = 0; k < K; ++k) {
    y = dsys.Ad * (y + dsys.dt * dsys.source.B_p * p.values.row(k).transpose());
    b.row(k + 1) = y.transpose();
  }
  return b;
}

WeightTensors compute_weight_tensors(const DiscreteSystem& dsys, int k_max) {
  WeightTensors t;
  t.dt = dsys.dt;
  Matrix P = dsys.source.B_p;  // age 0
  t.alpha.push_back(P);
  t.beta.push_back(P);
  for (int k = 1; k <= k_max; ++k) {
    P = dsys.Ad * P;  // age k
    t.alpha.push_back(t.alpha.back().cwiseMax(P));
    t.beta.push_back(t.beta.back().cwiseMin(P));
  }
  return t;
}

std::pair<Vector, Vector> compute_gamma(const DiscreteSystem& dsys,
                                        const DispatchPlan& delta, int k) {
  const auto nx = dsys.state_dim();
  const int K = delta.steps();
  if (K == 0) throw std::invalid_argument("compute_gamma: empty dispatch plan");
  Vector gp = Vector::Constant(nx, -opt::kInf);
  Vector gm = Vector::Constant(nx, opt::kInf);
  Matrix P = dsys.source.B_p;  // Ad^age B_p, age = k - l
  for (int l = k; l >= 0; --l) {
    const int row = std::min(l, K - 1);
    Vector v = P * delta.delta.row(row).transpose();
    gp = gp.cwiseMax(v);
    gm = gm.cwiseMin(v);
    if (l > 0) P = dsys.Ad * P;
  }
  return {gp, gm};
}

}  // namespace flexenv

namespace flexenv::detail {

void parallel_for(int begin, int end, int workers,
                  const std::function<void(int)>& body) {
  const int n = end - begin;
  if (n <= 0) return;
  workers = std::max(1, std::min(workers, n));
  if (workers == 1) {
    for (int i = begin; i < end; ++i) body(i);
    return;
  }
  std::vector<std::future<void>> futs;
  std::atomic<int> next{begin};
  for (int w = 0; w < workers; ++w) {
    futs.push_back(std::async(std::launch::async, [&]() {
      for (int i = next.fetch_add(1); i < end; i = next.fetch_add(1)) body(i);
    }));
  }
  for (auto& f : futs) f.get();
}

namespace {

// Componentwise-extremal load vector holding state s at its bound after one
// step; fixed-point handles the off-diagonal entries of the hold integral.
// Requires each load to drive exactly one state (B_p one nonzero per column).
std::vector<int> load_pairing(const LinearLossySystem& sys) {
  std::vector<int> row_of_load;
  for (int j = 0; j < sys.power_dim(); ++j) {
    int row = -1;
    for (int i = 0; i < sys.state_dim(); ++i) {
      if (sys.B_p(i, j) != 0.0) {
        if (row >= 0) return {};  // load drives several states
        row = i;
      }
    }
    if (row < 0) return {};
    row_of_load.push_back(row);
  }
  return row_of_load;
}

}  // namespace

GreedyPair greedy_extremals(const DiscreteSystem& dsys, const Trajectory& d,
                            int max_steps) {
  const auto& sys = dsys.source;
  const auto nx = dsys.state_dim();
  const auto np = dsys.power_dim();
  const std::vector<int> pair = load_pairing(sys);
  if (pair.empty())
    throw std::invalid_argument(
        "greedy_extremals: needs one driven state per load");

  GreedyPair out;
  out.ceiling.dt = out.floor.dt = dsys.dt;
  out.ceiling.values = Matrix::Zero(max_steps, np);
  out.floor.values = Matrix::Zero(max_steps, np);
  out.feasible_steps = max_steps;

  const double tol = 1e-9;
  Vector x_hi = sys.x0, x_lo = sys.x0;
  for (int l = 0; l < max_steps; ++l) {
    const Vector dist = dsys.dist_dim() > 0
                            ? Vector(dsys.Bdd * d.values.row(l).transpose())
                            : Vector(Vector::Zero(nx));

    // Ceiling hugger: maximal p with x_{l+1} <= x_max.
    Vector base = dsys.Ad * x_hi + dist;
    Vector p = sys.p_max;
    for (int sweep = 0; sweep < 32; ++sweep) {
      Vector next = base + dsys.Bpd * p;
      bool changed = false;
      for (int j = 0; j < np; ++j) {
        const int s = pair[j];
        const double other = next(s) - dsys.Bpd(s, j) * p(j);
        double want = (sys.x_max(s) - other) / dsys.Bpd(s, j);
        want = std::clamp(want, sys.p_min(j), sys.p_max(j));
        if (std::abs(want - p(j)) > 1e-12 * std::max(1.0, sys.p_max(j))) {
          p(j) = want;
          changed = true;
        }
      }
      if (!changed) break;
    }
    Vector next_hi = base + dsys.Bpd * p;
    out.ceiling.values.row(l) = p.transpose();

    // Floor hugger: minimal p with x_{l+1} >= x_min.
    Vector base_lo = dsys.Ad * x_lo + dist;
    Vector q = sys.p_min;
    for (int sweep = 0; sweep < 32; ++sweep) {
      Vector next = base_lo + dsys.Bpd * q;
      bool changed = false;
      for (int j = 0; j < np; ++j) {
        const int s = pair[j];
        const double other = next(s) - dsys.Bpd(s, j) * q(j);
        double want = (sys.x_min(s) - other) / dsys.Bpd(s, j);
        want = std::clamp(want, sys.p_min(j), sys.p_max(j));
        if (std::abs(want - q(j)) > 1e-12 * std::max(1.0, sys.p_max(j))) {
          q(j) = want;
          changed = true;
        }
      }
      if (!changed) break;
    }
    Vector next_lo = base_lo + dsys.Bpd * q;
    out.floor.values.row(l) = q.transpose();

    // Band dies when even the extremal trajectories leave it.
    const bool ok =
        (next_hi.array() >= sys.x_min.array() - tol).all() &&
        (next_hi.array() <= sys.x_max.array() + tol).all() &&
        (next_lo.array() >= sys.x_min.array() - tol).all() &&
        (next_lo.array() <= sys.x_max.array() + tol).all();
    if (!ok) {
      out.feasible_steps = l;
      break;
    }
    x_hi = next_hi;
    x_lo = next_lo;
  }
  return out;
}

GreedyPair greedy_extremals_pooled(const DiscreteSystem& dsys,
                                   const Trajectory& d,
                                   const DispatchPlan& delta,
                                   const Vector& ptot_min,
                                   const Vector& ptot_max, int max_steps) {
  const auto& sys = dsys.source;
  const auto nx = dsys.state_dim();
  GreedyPair out;
  out.ceiling.dt = out.floor.dt = dsys.dt;
  out.ceiling.values = Matrix::Zero(max_steps, 1);
  out.floor.values = Matrix::Zero(max_steps, 1);
  out.feasible_steps = max_steps;

  const double tol = 1e-9;
  Vector x_hi = sys.x0, x_lo = sys.x0;
  for (int l = 0; l < max_steps; ++l) {
    const Vector dist = dsys.dist_dim() > 0
                            ? Vector(dsys.Bdd * d.values.row(l).transpose())
                            : Vector(Vector::Zero(nx));
    const Vector beff = dsys.Bpd * delta.delta.row(l).transpose();

    Vector base = dsys.Ad * x_hi + dist;
    double p = ptot_max(l);
    for (int i = 0; i < nx; ++i)
      if (beff(i) > 0.0)
        p = std::min(p, (sys.x_max(i) - base(i)) / beff(i));
    p = std::clamp(p, ptot_min(l), ptot_max(l));
    Vector next_hi = base + beff * p;
    out.ceiling.values(l, 0) = p;

    Vector base_lo = dsys.Ad * x_lo + dist;
    double q = ptot_min(l);
    for (int i = 0; i < nx; ++i)
      if (beff(i) > 0.0)
        q = std::max(q, (sys.x_min(i) - base_lo(i)) / beff(i));
    q = std::clamp(q, ptot_min(l), ptot_max(l));
    Vector next_lo = base_lo + beff * q;
    out.floor.values(l, 0) = q;

    const bool ok =
        (next_hi.array() >= sys.x_min.array() - tol).all() &&
        (next_hi.array() <= sys.x_max.array() + tol).all() &&
        (next_lo.array() >= sys.x_min.array() - tol).all() &&
        (next_lo.array() <= sys.x_max.array() + tol).all();
    if (!ok) {
      out.feasible_steps = l;
      break;
    }
    x_hi = next_hi;
    x_lo = next_lo;
  }
  return out;
}

LiftedLp build_lifted(const DiscreteSystem& dsys, const Trajectory& d, int k) {
  const auto& sys = dsys.source;
  LiftedLp l;
  l.k = k;
  l.np = static_cast<int>(dsys.power_dim());
  l.nx = static_cast<int>(dsys.state_dim());
  l.p_ref = std::max(1.0, sys.p_max.maxCoeff());

  const int n = k * (l.np + l.nx);
  l.lp = opt::LinearProgram::boxed(n);
  for (int step = 0; step < k; ++step)
    for (int j = 0; j < l.np; ++j) {
      l.lp.lo(l.p_index(step, j)) = sys.p_min(j) / l.p_ref;
      l.lp.hi(l.p_index(step, j)) = sys.p_max(j) / l.p_ref;
    }
  for (int step = 1; step <= k; ++step)
    for (int i = 0; i < l.nx; ++i) {
      l.lp.lo(l.x_index(step, i)) = sys.x_min(i);
      l.lp.hi(l.x_index(step, i)) = sys.x_max(i);
    }

  const Matrix Bt = dsys.Bpd * l.p_ref;
  std::vector<opt::Triplet> trips;
  Vector rhs = Vector::Zero(k * l.nx);
  for (int step = 0; step < k; ++step) {
    for (int i = 0; i < l.nx; ++i) {
      const int row = step * l.nx + i;
      trips.emplace_back(row, l.x_index(step + 1, i), 1.0);
      for (int j = 0; j < l.np; ++j)
        if (Bt(i, j) != 0.0)
          trips.emplace_back(row, l.p_index(step, j), -Bt(i, j));
      if (step == 0) {
        rhs(row) = (dsys.Ad * sys.x0)(i);
      } else {
        for (int m = 0; m < l.nx; ++m)
          if (dsys.Ad(i, m) != 0.0)
            trips.emplace_back(row, l.x_index(step, m), -dsys.Ad(i, m));
      }
      if (dsys.dist_dim() > 0)
        rhs(row) += (dsys.Bdd * d.values.row(step).transpose())(i);
    }
  }
  l.lp.F.resize(k * l.nx, n);
  l.lp.F.setFromTriplets(trips.begin(), trips.end());
  l.lp.g = rhs;
  return l;
}

double energy_from_objective(const LiftedLp& l, double dt, double objective) {
  return objective * l.p_ref * dt;
}

double snap_threshold(const DiscreteSystem& dsys) {
  const double full_power = dsys.source.p_max.sum();
  return 1e-8 * std::max(1.0, full_power * dsys.dt * dsys.steps);
}

void finalize_envelope(EnvelopeSeries& env, double snap_zero) {
  const double nan = std::numeric_limits<double>::quiet_NaN();
  int d = env.defined_up_to;
  if (snap_zero > 0.0) {
    for (int k = 0; k <= d; ++k) {
      if (std::abs(env.E_up(k)) < snap_zero) env.E_up(k) = 0.0;
      if (std::abs(env.E_down(k)) < snap_zero) env.E_down(k) = 0.0;
    }
  }
  for (;;) {
    // Equivalent monotone corridor: any admissible cumulative energy is
    // nondecreasing, so the binding ceiling is the suffix-min and the
    // binding floor the prefix-max.
    for (int k = d - 1; k >= 0; --k)
      env.E_up(k) = std::min(env.E_up(k), env.E_up(k + 1));
    for (int k = 1; k <= d; ++k)
      env.E_down(k) = std::max(env.E_down(k), env.E_down(k - 1));
    int cross = -1;
    for (int k = 1; k <= d; ++k) {
      if (env.E_up(k) < env.E_down(k) - 1e-9 * (1.0 + std::abs(env.E_up(k)))) {
        cross = k;
        break;
      }
    }
    if (cross < 0) break;
    d = cross - 1;
  }
  env.defined_up_to = d;
  for (int k = d + 1; k < env.E_up.size(); ++k) {
    env.E_up(k) = nan;
    env.E_down(k) = nan;
  }
}

Vector scheme_weights_upper(const DiscreteSystem& dsys, int k) {
  // Powers of the step transition: exp(A dt (k-l)) under exact ZOH and the
  // scheme-consistent analogue under forward Euler.
  const double ad = dsys.Ad(0, 0);
  Vector w(k);
  double acc = 1.0;
  for (int age = 1; age <= k; ++age) {
    acc *= ad;
    w(k - age) = acc;  // step l has age k - l
  }
  return w;
}

Vector scheme_weights_lower(const DiscreteSystem& dsys, int k) {
  const double ad = dsys.Ad(0, 0);
  Vector w(k);
  double acc = 1.0;
  for (int l = 0; l < k; ++l) {
    w(l) = acc;  // Ad^{-l}
    acc /= ad;
  }
  return w;
}

}  // namespace flexenv::detail
