#include "flexenv/solver.hpp"

#include <Eigen/SparseCholesky>

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <cstdio>
#include <cstdlib>

namespace flexenv::opt {

std::string to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::Optimal: return "optimal";
    case SolveStatus::Infeasible: return "infeasible";
    case SolveStatus::Unbounded: return "unbounded";
    case SolveStatus::NumericFailure: return "numeric_failure";
  }
  return "unknown";
}

LinearProgram LinearProgram::boxed(int n) {
  LinearProgram lp;
  lp.c = Vector::Zero(n);
  lp.G.resize(0, n);
  lp.h.resize(0);
  lp.F.resize(0, n);
  lp.g.resize(0);
  lp.lo = Vector::Constant(n, -kInf);
  lp.hi = Vector::Constant(n, kInf);
  return lp;
}

namespace {

struct GapTerm {
  Eigen::SparseVector<double> a;
  double b = 0.0;
  double w = 1.0;
};

// min q.z - sum w ln(a.z + b)  s.t.  F z = g,  lo <= z <= hi
// (inequality rows of the public form arrive here with slack variables).
// Unbounded directions are contained by artificial box walls; an optimum
// resting on one is reported as unbounded rather than optimal.
constexpr double kArtificialBound = 1e10;

struct Canon {
  int n = 0, m = 0, n_orig = 0;
  SpMat F;
  Vector g, q, lo, hi;
  std::vector<GapTerm> gaps;
  std::vector<bool> artificial_lo, artificial_hi;
};

Canon canonicalize(const LinearProgram& lp, const std::vector<LogTerm>& gaps) {
  const int n0 = static_cast<int>(lp.c.size());
  const int mg = static_cast<int>(lp.G.rows());
  const int mf = static_cast<int>(lp.F.rows());
  if (lp.lo.size() != n0 || lp.hi.size() != n0 ||
      (mg > 0 && (lp.G.cols() != n0 || lp.h.size() != mg)) ||
      (mf > 0 && (lp.F.cols() != n0 || lp.g.size() != mf)))
    throw std::invalid_argument("solver: inconsistent program dimensions");
  if (!lp.c.allFinite() || (mg > 0 && !lp.h.allFinite()) ||
      (mf > 0 && !lp.g.allFinite()))
    throw std::invalid_argument("solver: non-finite program data");

  Canon cn;
  cn.n_orig = n0;
  cn.n = n0 + mg;
  cn.m = mf + mg;
  cn.q = Vector::Zero(cn.n);
  cn.q.head(n0) = -lp.c;  // maximize -> minimize
  cn.lo = Vector::Constant(cn.n, 0.0);
  cn.hi = Vector::Constant(cn.n, kInf);
  cn.lo.head(n0) = lp.lo;
  cn.hi.head(n0) = lp.hi;
  cn.artificial_lo.assign(cn.n, false);
  cn.artificial_hi.assign(cn.n, false);
  for (int i = 0; i < cn.n; ++i) {
    if (!std::isfinite(cn.lo(i))) {
      cn.lo(i) = -kArtificialBound;
      cn.artificial_lo[i] = true;
    }
    if (!std::isfinite(cn.hi(i))) {
      cn.hi(i) = kArtificialBound;
      cn.artificial_hi[i] = true;
    }
  }
  cn.g = Vector::Zero(cn.m);

  std::vector<Triplet> trips;
  trips.reserve(lp.F.nonZeros() + lp.G.nonZeros() + mg);
  // Row equilibration by inf-norm; improves conditioning and makes results
  // insensitive to caller-side row scaling.
  Vector row_norm = Vector::Zero(cn.m);
  for (int c = 0; c < lp.F.outerSize(); ++c)
    for (SpMat::InnerIterator it(lp.F, c); it; ++it)
      row_norm(it.row()) = std::max(row_norm(it.row()), std::abs(it.value()));
  for (int c = 0; c < lp.G.outerSize(); ++c)
    for (SpMat::InnerIterator it(lp.G, c); it; ++it)
      row_norm(mf + it.row()) =
          std::max(row_norm(mf + it.row()), std::abs(it.value()));
  for (int r = 0; r < cn.m; ++r)
    if (row_norm(r) == 0.0) row_norm(r) = 1.0;

  for (int c = 0; c < lp.F.outerSize(); ++c)
    for (SpMat::InnerIterator it(lp.F, c); it; ++it)
      trips.emplace_back(it.row(), c, it.value() / row_norm(it.row()));
  for (int c = 0; c < lp.G.outerSize(); ++c)
    for (SpMat::InnerIterator it(lp.G, c); it; ++it)
      trips.emplace_back(mf + it.row(), c, it.value() / row_norm(mf + it.row()));
  for (int r = 0; r < mg; ++r)
    trips.emplace_back(mf + r, n0 + r, 1.0 / row_norm(mf + r));
  cn.F.resize(cn.m, cn.n);
  cn.F.setFromTriplets(trips.begin(), trips.end());
  for (int r = 0; r < mf; ++r) cn.g(r) = lp.g(r) / row_norm(r);
  for (int r = 0; r < mg; ++r) cn.g(mf + r) = lp.h(r) / row_norm(mf + r);

  cn.gaps.reserve(gaps.size());
  for (const LogTerm& t : gaps) {
    GapTerm gt;
    gt.a = t.a;
    gt.a.conservativeResize(cn.n);
    gt.b = t.b;
    gt.w = t.weight;
    cn.gaps.push_back(std::move(gt));
  }
  return cn;
}

Vector default_interior(const Canon& cn) {
  Vector z(cn.n);
  for (int i = 0; i < cn.n; ++i) {
    const bool fl = !cn.artificial_lo[i];
    const bool fh = !cn.artificial_hi[i];
    if (fl && fh)
      z(i) = 0.5 * (cn.lo(i) + cn.hi(i));
    else if (fl)
      z(i) = cn.lo(i) + 1.0;
    else if (fh)
      z(i) = cn.hi(i) - 1.0;
    else
      z(i) = 0.0;
  }
  return z;
}

void clamp_interior(const Canon& cn, Vector& z) {
  for (int i = 0; i < cn.n; ++i) {
    const bool fl = !cn.artificial_lo[i];
    const bool fh = !cn.artificial_hi[i];
    double m_lo = 1.0, m_hi = 1.0;
    if (fl && fh) {
      const double w = cn.hi(i) - cn.lo(i);
      m_lo = m_hi = (w > 0.0) ? std::min(0.1 * w, 1e-3 * std::max(1.0, w)) : 0.0;
    } else if (fl) {
      m_lo = 1e-3;
    } else if (fh) {
      m_hi = 1e-3;
    }
    z(i) = std::clamp(z(i), cn.lo(i) + m_lo, cn.hi(i) - m_hi);
  }
}

double gap_value(const GapTerm& t, const Vector& z) {
  return t.a.dot(z) + t.b;
}

// A few projection sweeps pushing z into the gap-positive region; used to
// patch a warm start whose gaps sit slightly on the wrong side.
bool repair_gaps(const Canon& cn, Vector& z) {
  for (int round = 0; round < 8; ++round) {
    bool all_ok = true;
    for (const GapTerm& t : cn.gaps) {
      const double v = gap_value(t, z);
      const double target = 1e-6 * (1.0 + std::abs(t.b));
      if (v < target) {
        const double nrm2 = t.a.dot(t.a);
        if (nrm2 <= 0.0) return false;  // constant non-positive gap
        z += Vector(t.a) * ((target - v) / nrm2);
        all_ok = false;
      }
    }
    clamp_interior(cn, z);
    if (all_ok) {
      for (const GapTerm& t : cn.gaps)
        if (gap_value(t, z) <= 0.0) return false;
      return true;
    }
  }
  for (const GapTerm& t : cn.gaps)
    if (gap_value(t, z) <= 0.0) return false;
  return true;
}

struct IpmResult {
  SolveStatus status = SolveStatus::NumericFailure;
  Vector z;
  SolverStats stats;
  Vector y, zl, zu;
  bool diverged = false;
};

class Ipm {
 public:
  Ipm(const Canon& cn, const SolverOptions& opts) : cn_(cn), opts_(opts) {}

  IpmResult run(Vector z0) {
    const int n = cn_.n, m = cn_.m;
    finite_lo_.assign(n, false);
    finite_hi_.assign(n, false);
    n_finite_ = 0;
    for (int i = 0; i < n; ++i) {
      if (std::isfinite(cn_.lo(i))) {
        finite_lo_[i] = true;
        ++n_finite_;
      }
      if (std::isfinite(cn_.hi(i))) {
        finite_hi_[i] = true;
        ++n_finite_;
      }
    }

    z_ = std::move(z0);
    y_ = Vector::Zero(m);
    zl_ = Vector::Zero(n);
    zu_ = Vector::Zero(n);
    for (int i = 0; i < n; ++i) {
      // Centered dual start: every complementarity product begins near 1.
      if (finite_lo_[i]) zl_(i) = std::clamp(1.0 / (z_(i) - cn_.lo(i)), 1e-10, 1e10);
      if (finite_hi_[i]) zu_(i) = std::clamp(1.0 / (cn_.hi(i) - z_(i)), 1e-10, 1e10);
    }

    build_pattern();

    IpmResult out;
    double best_rp = kInf, best_mu = kInf;
    double best_merit = kInf;
    Vector bz = z_, by = y_, bzl = zl_, bzu = zu_;
    int stall = 0;

    for (int iter = 0; iter < opts_.max_iterations; ++iter) {
      if (!compute_residuals()) {
        out.status = SolveStatus::NumericFailure;
        out.z = z_;
        return out;
      }

      const double prim_scale = 1.0 + cn_.g.lpNorm<Eigen::Infinity>();
      const double dual_scale = 1.0 + grad_.lpNorm<Eigen::Infinity>();
      const double rp_norm = m > 0 ? rp_.lpNorm<Eigen::Infinity>() : 0.0;
      const double rd_norm = rd_.lpNorm<Eigen::Infinity>();
      const double obj_scale = 1.0 + std::abs(obj_);

      if (rp_norm <= opts_.tol_primal * prim_scale &&
          rd_norm <= opts_.tol_dual * dual_scale &&
          mu_ <= opts_.tol_complementarity * obj_scale) {
        bool on_artificial_wall = false;
        for (int i = 0; i < n; ++i)
          if ((cn_.artificial_lo[i] && z_(i) < -0.1 * kArtificialBound) ||
              (cn_.artificial_hi[i] && z_(i) > 0.1 * kArtificialBound))
            on_artificial_wall = true;
        if (on_artificial_wall)
          out.diverged = true;
        else
          out.status = SolveStatus::Optimal;
        break;
      }
      if (z_.lpNorm<Eigen::Infinity>() > 0.5 * kArtificialBound || obj_ < -1e14) {
        out.diverged = true;
        break;
      }
      if (getenv("FLEXENV_IPM_TRACE"))
        fprintf(stderr, "[ipm] it=%d rp=%.3e rd=%.3e mu=%.3e obj=%.9e\n", iter,
                rp_norm, rd_norm, mu_, obj_);
      const double merit = rp_norm / prim_scale + rd_norm / dual_scale +
                           mu_ / obj_scale;
      if (merit < best_merit) {
        best_merit = merit;
        bz = z_;
        by = y_;
        bzl = zl_;
        bzu = zu_;
      }
      const bool improved = rp_norm < best_rp * 0.99 || mu_ < best_mu * 0.99;
      best_rp = std::min(best_rp, rp_norm);
      best_mu = std::min(best_mu, mu_);
      if (improved) {
        stall = 0;
      } else if (++stall > 25) {
        break;  // no progress; classify outside
      }

      if (!newton_step()) {
        out.status = SolveStatus::NumericFailure;
        out.z = z_;
        return out;
      }
      out.stats.iterations = iter + 1;
    }

    if (out.status != SolveStatus::Optimal && !out.diverged) {
      z_ = bz;
      y_ = by;
      zl_ = bzl;
      zu_ = bzu;
    }
    compute_residuals();
    out.z = z_;
    out.y = y_;
    out.zl = zl_;
    out.zu = zu_;
    out.stats.primal_residual = m > 0 ? rp_.lpNorm<Eigen::Infinity>() : 0.0;
    out.stats.dual_residual = rd_.lpNorm<Eigen::Infinity>();
    out.stats.complementarity = mu_;
    if (out.status == SolveStatus::Optimal && cn_.gaps.empty()) {
      // LP duality gap: P - D = q.z + g.y - lo.zl + hi.zu (finite parts).
      double dual = -cn_.g.dot(y_);
      for (int i = 0; i < cn_.n; ++i) {
        if (finite_lo_[i]) dual += cn_.lo(i) * zl_(i);
        if (finite_hi_[i]) dual -= cn_.hi(i) * zu_(i);
      }
      out.stats.duality_gap = std::abs(obj_ - dual) / (1.0 + std::abs(obj_));
    }
    return out;
  }

 private:
  void build_pattern() {
    const int n = cn_.n, m = cn_.m, N = n + m;
    pattern_.clear();
    for (int i = 0; i < n; ++i) pattern_.emplace_back(i, i, 1.0);
    for (int r = 0; r < m; ++r) pattern_.emplace_back(n + r, n + r, -1.0);
    for (int c = 0; c < cn_.F.outerSize(); ++c)
      for (SpMat::InnerIterator it(cn_.F, c); it; ++it) {
        pattern_.emplace_back(n + it.row(), c, it.value());
        pattern_.emplace_back(c, n + it.row(), it.value());
      }
    // Union Hessian pattern from gap outer products.
    for (const GapTerm& t : cn_.gaps)
      for (Eigen::SparseVector<double>::InnerIterator i1(t.a); i1; ++i1)
        for (Eigen::SparseVector<double>::InnerIterator i2(t.a); i2; ++i2)
          if (i1.index() != i2.index())
            pattern_.emplace_back(i1.index(), i2.index(), 0.0);
    kkt_.resize(N, N);
    kkt_.setFromTriplets(pattern_.begin(), pattern_.end());
    ldlt_.analyzePattern(kkt_);
    analyzed_ = true;
  }

  bool compute_residuals() {
    const int n = cn_.n;
    gapv_.resize(cn_.gaps.size());
    grad_ = cn_.q;
    obj_ = cn_.q.dot(z_);
    for (size_t s = 0; s < cn_.gaps.size(); ++s) {
      const GapTerm& t = cn_.gaps[s];
      const double v = gap_value(t, z_);
      if (!(v > 0.0) || !std::isfinite(v)) return false;
      gapv_(s) = v;
      obj_ -= t.w * std::log(v);
      grad_ -= Vector(t.a) * (t.w / v);
    }
    rd_ = grad_ + cn_.F.transpose() * y_ - zl_ + zu_;
    rp_ = cn_.F * z_ - cn_.g;
    sl_.resize(n);
    su_.resize(n);
    for (int i = 0; i < n; ++i) {
      const double floor_i = 1e-13 * (1.0 + std::abs(z_(i)));
      sl_(i) = std::max(z_(i) - cn_.lo(i), floor_i);
      su_(i) = std::max(cn_.hi(i) - z_(i), floor_i);
    }
    double comp = 0.0;
    for (int i = 0; i < n; ++i) {
      if (finite_lo_[i]) comp += (z_(i) - cn_.lo(i)) * zl_(i);
      if (finite_hi_[i]) comp += (cn_.hi(i) - z_(i)) * zu_(i);
    }
    mu_ = n_finite_ > 0 ? comp / n_finite_ : 0.0;
    return true;
  }

  bool factorize() {
    const int n = cn_.n, m = cn_.m;
    double delta = base_delta_;
    for (int attempt = 0; attempt < 4; ++attempt) {
      std::vector<Triplet> trips = pattern_;
      size_t idx = 0;
      for (int i = 0; i < n; ++i, ++idx) {
        double d = delta;
        if (finite_lo_[i]) d += zl_(i) / sl_(i);
        if (finite_hi_[i]) d += zu_(i) / su_(i);
        trips[idx] = Triplet(i, i, d);
      }
      for (int r = 0; r < m; ++r, ++idx)
        trips[idx] = Triplet(n + r, n + r, -delta);
      idx += 2 * cn_.F.nonZeros();
      for (const GapTerm& t : cn_.gaps) {
        const double scale =
            t.w / (gap_value(t, z_) * gap_value(t, z_));
        for (Eigen::SparseVector<double>::InnerIterator i1(t.a); i1; ++i1)
          for (Eigen::SparseVector<double>::InnerIterator i2(t.a); i2; ++i2) {
            const double v = scale * i1.value() * i2.value();
            if (i1.index() == i2.index()) {
              // folded into the diagonal slot
            } else {
              trips[idx++] = Triplet(i1.index(), i2.index(), v);
            }
          }
      }
      // Gap diagonal contributions.
      for (const GapTerm& t : cn_.gaps) {
        const double scale =
            t.w / (gap_value(t, z_) * gap_value(t, z_));
        for (Eigen::SparseVector<double>::InnerIterator i1(t.a); i1; ++i1)
          trips.emplace_back(i1.index(), i1.index(),
                             scale * i1.value() * i1.value());
      }
      kkt_.setFromTriplets(trips.begin(), trips.end());
      if (analyzed_)
        ldlt_.factorize(kkt_);
      else
        ldlt_.compute(kkt_);
      if (ldlt_.info() == Eigen::Success) return true;
      delta *= 100.0;
    }
    return false;
  }

  Vector kkt_solve(const Vector& rhs) {
    Vector sol = ldlt_.solve(rhs);
    // One refinement sweep against the regularized matrix.
    Vector resid = rhs - kkt_ * sol;
    sol += ldlt_.solve(resid);
    return sol;
  }

  // Returns the max primal step keeping bounds and gaps strictly interior.
  double primal_step(const Vector& dz, double tau) const {
    double alpha = 1.0;
    for (int i = 0; i < cn_.n; ++i) {
      if (finite_lo_[i] && dz(i) < 0.0)
        alpha = std::min(alpha, -tau * (z_(i) - cn_.lo(i)) / dz(i));
      if (finite_hi_[i] && dz(i) > 0.0)
        alpha = std::min(alpha, tau * (cn_.hi(i) - z_(i)) / dz(i));
    }
    for (size_t s = 0; s < cn_.gaps.size(); ++s) {
      const double dir = cn_.gaps[s].a.dot(dz);
      if (dir < 0.0) alpha = std::min(alpha, -tau * gapv_(s) / dir);
    }
    return alpha;
  }

  double dual_step(const Vector& dzl, const Vector& dzu, double tau) const {
    double alpha = 1.0;
    for (int i = 0; i < cn_.n; ++i) {
      if (finite_lo_[i] && dzl(i) < 0.0)
        alpha = std::min(alpha, -tau * zl_(i) / dzl(i));
      if (finite_hi_[i] && dzu(i) < 0.0)
        alpha = std::min(alpha, -tau * zu_(i) / dzu(i));
    }
    return alpha;
  }

  void directions(const Vector& tl, const Vector& tu, const Vector& cl,
                  const Vector& cu, Vector& dz, Vector& dy, Vector& dzl,
                  Vector& dzu) {
    const int n = cn_.n, m = cn_.m;
    Vector rhs(n + m);
    Vector rz = -rd_;
    for (int i = 0; i < n; ++i) {
      if (finite_lo_[i])
        rz(i) += (tl(i) - sl_(i) * zl_(i) - cl(i)) / sl_(i);
      if (finite_hi_[i])
        rz(i) -= (tu(i) - su_(i) * zu_(i) - cu(i)) / su_(i);
    }
    rhs.head(n) = rz;
    rhs.tail(m) = -rp_;
    Vector sol = kkt_solve(rhs);
    dz = sol.head(n);
    dy = sol.tail(m);
    dzl = Vector::Zero(n);
    dzu = Vector::Zero(n);
    for (int i = 0; i < n; ++i) {
      if (finite_lo_[i])
        dzl(i) = (tl(i) - sl_(i) * zl_(i) - cl(i) - zl_(i) * dz(i)) / sl_(i);
      if (finite_hi_[i])
        dzu(i) = (tu(i) - su_(i) * zu_(i) - cu(i) + zu_(i) * dz(i)) / su_(i);
    }
  }

  bool newton_step() {
    const int n = cn_.n;
    if (!factorize()) return false;

    const Vector zero = Vector::Zero(n);
    Vector dz, dy, dzl, dzu;
    directions(zero, zero, zero, zero, dz, dy, dzl, dzu);
    if (!dz.allFinite()) return false;

    const double tau = std::clamp(1.0 - 0.1 * mu_, 0.99, 0.9999);
    const double ap_aff = primal_step(dz, tau);
    const double ad_aff = dual_step(dzl, dzu, tau);

    double mu_aff = 0.0;
    for (int i = 0; i < n; ++i) {
      if (finite_lo_[i])
        mu_aff += (z_(i) + ap_aff * dz(i) - cn_.lo(i)) *
                  (zl_(i) + ad_aff * dzl(i));
      if (finite_hi_[i])
        mu_aff += (cn_.hi(i) - z_(i) - ap_aff * dz(i)) *
                  (zu_(i) + ad_aff * dzu(i));
    }
    mu_aff = n_finite_ > 0 ? mu_aff / n_finite_ : 0.0;

    double sigma = 0.0;
    if (mu_ > 0.0) {
      const double ratio = std::clamp(mu_aff / mu_, 0.0, 1.0);
      sigma = std::clamp(ratio * ratio * ratio, 1e-6, 0.9);
    }

    Vector tl = Vector::Zero(n), tu = Vector::Zero(n);
    Vector cl = Vector::Zero(n), cu = Vector::Zero(n);
    for (int i = 0; i < n; ++i) {
      if (finite_lo_[i]) {
        tl(i) = sigma * mu_;
        cl(i) = dz(i) * dzl(i);
      }
      if (finite_hi_[i]) {
        tu(i) = sigma * mu_;
        cu(i) = -dz(i) * dzu(i);
      }
    }
    Vector dz2, dy2, dzl2, dzu2;
    directions(tl, tu, cl, cu, dz2, dy2, dzl2, dzu2);
    if (!dz2.allFinite()) return false;

    // A common step for both sides with a complementarity-growth guard;
    // asymmetric long steps can two-cycle on degenerate vertices.
    double a = std::min(primal_step(dz2, tau), dual_step(dzl2, dzu2, tau));
    for (int bt = 0; bt < 8; ++bt) {
      double comp = 0.0;
      for (int i = 0; i < n; ++i) {
        if (finite_lo_[i])
          comp += (z_(i) + a * dz2(i) - cn_.lo(i)) * (zl_(i) + a * dzl2(i));
        if (finite_hi_[i])
          comp += (cn_.hi(i) - z_(i) - a * dz2(i)) * (zu_(i) + a * dzu2(i));
      }
      const double mu_try = n_finite_ > 0 ? comp / n_finite_ : 0.0;
      if (mu_try <= 2.0 * mu_ + 1e-16) break;
      a *= 0.5;
    }
    z_ += a * dz2;
    y_ += a * dy2;
    zl_ += a * dzl2;
    zu_ += a * dzu2;
    return true;
  }

  const Canon& cn_;
  SolverOptions opts_;
  std::vector<bool> finite_lo_, finite_hi_;
  int n_finite_ = 0;

  Vector z_, y_, zl_, zu_, sl_, su_;
  Vector rd_, rp_, grad_, gapv_;
  double mu_ = 0.0, obj_ = 0.0;
  double base_delta_ = 1e-9;

  std::vector<Triplet> pattern_;
  SpMat kkt_;
  Eigen::SimplicialLDLT<SpMat> ldlt_;
  bool analyzed_ = false;
};

// Elastic phase-1 on the equality system: min theta with F z - theta r0 = g
// starting from an exactly feasible (z_mid, theta = 1).
bool phase1_feasible(const Canon& cn, const SolverOptions& opts,
                     Vector* witness) {
  Canon p1;
  p1.n_orig = cn.n + 1;
  p1.n = cn.n + 1;
  p1.m = cn.m;
  Vector z_mid = default_interior(cn);
  const Vector r0 = cn.F * z_mid - cn.g;

  std::vector<Triplet> trips;
  for (int c = 0; c < cn.F.outerSize(); ++c)
    for (SpMat::InnerIterator it(cn.F, c); it; ++it)
      trips.emplace_back(it.row(), c, it.value());
  for (int r = 0; r < cn.m; ++r)
    if (r0(r) != 0.0) trips.emplace_back(r, cn.n, -r0(r));
  p1.F.resize(p1.m, p1.n);
  p1.F.setFromTriplets(trips.begin(), trips.end());
  p1.g = cn.g;
  p1.q = Vector::Zero(p1.n);
  p1.q(cn.n) = 1.0;
  p1.lo = Vector(cn.n + 1);
  p1.hi = Vector(cn.n + 1);
  p1.lo.head(cn.n) = cn.lo;
  p1.hi.head(cn.n) = cn.hi;
  p1.lo(cn.n) = 0.0;
  p1.hi(cn.n) = 1.25;
  p1.artificial_lo = cn.artificial_lo;
  p1.artificial_hi = cn.artificial_hi;
  p1.artificial_lo.push_back(false);
  p1.artificial_hi.push_back(false);

  Vector z0(p1.n);
  z0.head(cn.n) = z_mid;
  z0(cn.n) = 1.0;
  clamp_interior(p1, z0);

  SolverOptions po = opts;
  po.max_iterations = std::max(po.max_iterations, 150);
  Ipm ipm(p1, po);
  IpmResult res = ipm.run(z0);
  if (res.status != SolveStatus::Optimal) return false;  // conservative
  const double theta = res.z(cn.n);
  const bool feasible = theta <= 1e-7 * (1.0 + cn.g.lpNorm<Eigen::Infinity>());
  if (feasible && witness) *witness = res.z.head(cn.n);
  return feasible;
}

SolveResult finish(const Canon& cn, const LinearProgram& lp,
                   const std::vector<LogTerm>& gaps, IpmResult&& res) {
  SolveResult out;
  out.stats = res.stats;
  out.z = res.z.head(cn.n_orig);
  if (res.status == SolveStatus::Optimal) {
    out.status = SolveStatus::Optimal;
    out.objective = lp.c.dot(out.z);
    for (const LogTerm& t : gaps) {
      Eigen::SparseVector<double> a = t.a;
      a.conservativeResize(res.z.size());
      out.objective += t.weight * std::log(a.dot(res.z) + t.b);
    }
    return out;
  }
  if (res.diverged && gaps.empty()) {
    out.status = SolveStatus::Unbounded;
    return out;
  }
  out.status = SolveStatus::NumericFailure;
  return out;
}

}  // namespace

SolveResult solve_lp(const LinearProgram& lp, const SolverOptions& opts) {
  Canon cn = canonicalize(lp, {});
  {
    Ipm ipm(cn, opts);
    SolveResult res = finish(cn, lp, {}, ipm.run(default_interior(cn)));
    if (res.status == SolveStatus::Optimal ||
        res.status == SolveStatus::Unbounded)
      return res;
  }
  // Stalled: decide infeasible vs numeric trouble, then retry once from the
  // strictly feasible phase-1 witness (centers fragile instances).
  Vector witness;
  if (!phase1_feasible(cn, opts, &witness)) {
    SolveResult out;
    out.status = SolveStatus::Infeasible;
    return out;
  }
  clamp_interior(cn, witness);
  Ipm retry(cn, opts);
  SolveResult res = finish(cn, lp, {}, retry.run(std::move(witness)));
  if (res.status != SolveStatus::Optimal &&
      res.status != SolveStatus::Unbounded)
    res.status = SolveStatus::NumericFailure;
  return res;
}

SolveResult solve_log_box(const ConcaveLogProgram& clp,
                          const SolverOptions& opts) {
  Canon cn = canonicalize(clp.base, clp.gaps);

  Vector z0;
  if (clp.warm_start.size() == cn.n_orig) {
    z0 = Vector::Zero(cn.n);
    z0.head(cn.n_orig) = clp.warm_start;
    // Slack guesses for the inequality rows.
    if (clp.base.G.rows() > 0) {
      Vector s = clp.base.h - clp.base.G * clp.warm_start;
      for (int r = 0; r < s.size(); ++r)
        z0(cn.n_orig + r) = std::max(s(r), 1e-3 * (1.0 + std::abs(s(r))));
    }
  } else {
    z0 = default_interior(cn);
  }
  clamp_interior(cn, z0);

  // Phase program: maximize the smallest gap value over the base polytope.
  auto gap_phase = [&]() -> SolveResult {
    LinearProgram ph = clp.base;
    const int n0 = static_cast<int>(ph.c.size());
    ph.c = Vector::Zero(n0 + 1);
    ph.c(n0) = 1.0;
    ph.lo.conservativeResize(n0 + 1);
    ph.hi.conservativeResize(n0 + 1);
    ph.lo(n0) = -kInf;
    ph.hi(n0) = kInf;
    SpMat G2(ph.G.rows() + static_cast<int>(clp.gaps.size()), n0 + 1);
    std::vector<Triplet> trips;
    for (int c = 0; c < ph.G.outerSize(); ++c)
      for (SpMat::InnerIterator it(ph.G, c); it; ++it)
        trips.emplace_back(it.row(), c, it.value());
    Vector h2(G2.rows());
    h2.head(ph.h.size()) = ph.h;
    const int base_rows = static_cast<int>(ph.G.rows());
    for (size_t s = 0; s < clp.gaps.size(); ++s) {
      for (Eigen::SparseVector<double>::InnerIterator it(clp.gaps[s].a); it;
           ++it)
        trips.emplace_back(base_rows + static_cast<int>(s), it.index(),
                           -it.value());
      trips.emplace_back(base_rows + static_cast<int>(s), n0, 1.0);
      h2(base_rows + static_cast<int>(s)) = clp.gaps[s].b;
    }
    G2.setFromTriplets(trips.begin(), trips.end());
    ph.G = std::move(G2);
    ph.h = std::move(h2);
    SpMat F2(ph.F.rows(), n0 + 1);
    if (ph.F.rows() > 0) {
      std::vector<Triplet> ft;
      for (int c = 0; c < ph.F.outerSize(); ++c)
        for (SpMat::InnerIterator it(ph.F, c); it; ++it)
          ft.emplace_back(it.row(), c, it.value());
      F2.setFromTriplets(ft.begin(), ft.end());
    }
    ph.F = std::move(F2);
    return solve_lp(ph, opts);
  };

  auto infeasible_verdict = [&](const SolveResult& phase) {
    SolveResult out;
    out.status = SolveStatus::Infeasible;
    if (phase.z.size() > 0) {
      double worst = kInf;
      for (size_t s = 0; s < clp.gaps.size(); ++s) {
        Eigen::SparseVector<double> a = clp.gaps[s].a;
        a.conservativeResize(phase.z.size());
        const double v = a.dot(phase.z) + clp.gaps[s].b;
        if (v < worst) {
          worst = v;
          out.bad_gap_term = static_cast<int>(s);
        }
      }
    } else if (!clp.gaps.empty()) {
      out.bad_gap_term = 0;
    }
    return out;
  };

  auto start_from_phase = [&](const SolveResult& phase, Vector& z) {
    z = Vector::Zero(cn.n);
    z.head(cn.n_orig) = phase.z.head(cn.n_orig);
    if (clp.base.G.rows() > 0) {
      Vector s = clp.base.h - clp.base.G * phase.z.head(cn.n_orig);
      for (int r = 0; r < s.size(); ++r)
        z(cn.n_orig + r) = std::max(s(r), 1e-6);
    }
    clamp_interior(cn, z);
    return repair_gaps(cn, z);
  };

  if (!repair_gaps(cn, z0)) {
    const SolveResult phase = gap_phase();
    if (!phase.ok() || phase.objective <= 1e-9) return infeasible_verdict(phase);
    if (!start_from_phase(phase, z0)) {
      SolveResult out;
      out.status = SolveStatus::NumericFailure;
      return out;
    }
  }

  Ipm ipm(cn, opts);
  SolveResult res = finish(cn, clp.base, clp.gaps, ipm.run(Vector(z0)));
  if (res.status == SolveStatus::Optimal) return res;

  // The main solve stalled: decide between a genuinely empty gap interior
  // and numeric trouble, retrying once from the phase point.
  const SolveResult phase = gap_phase();
  if (!phase.ok() || phase.objective <= 1e-9) return infeasible_verdict(phase);
  Vector z1;
  if (start_from_phase(phase, z1)) {
    Ipm retry(cn, opts);
    SolveResult res2 = finish(cn, clp.base, clp.gaps, retry.run(std::move(z1)));
    if (res2.status == SolveStatus::Optimal) return res2;
  }
  res.status = SolveStatus::NumericFailure;
  return res;
}


bool is_feasible(const LinearProgram& lp, Vector* witness) {
  Canon cn = canonicalize(lp, {});
  Vector w;
  const bool ok = phase1_feasible(cn, {}, witness ? &w : nullptr);
  if (ok && witness) *witness = w.head(cn.n_orig);
  return ok;
}

}  // namespace flexenv::opt
