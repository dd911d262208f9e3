#include "flexenv/system.hpp"

#include <unsupported/Eigen/MatrixFunctions>

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace flexenv {

std::string to_string(Scheme s) {
  return s == Scheme::ForwardEuler ? "euler" : "zoh";
}

std::optional<Scheme> scheme_from_string(const std::string& name) {
  if (name == "euler" || name == "forward_euler") return Scheme::ForwardEuler;
  if (name == "zoh" || name == "exact_zoh") return Scheme::ExactZOH;
  return std::nullopt;
}

Trajectory Trajectory::constant(double dt, int steps, const Vector& level) {
  Trajectory t;
  t.dt = dt;
  t.values = level.transpose().replicate(steps, 1);
  return t;
}

namespace {

void require(bool cond, const std::string& msg) {
  if (!cond) throw std::invalid_argument(msg);
}

std::string at(Eigen::Index i, Eigen::Index j) {
  std::ostringstream os;
  os << "(" << i << "," << j << ")";
  return os.str();
}

std::string at(Eigen::Index i) {
  std::ostringstream os;
  os << "(" << i << ")";
  return os.str();
}

}  // namespace

std::vector<std::string> validate_system(const LinearLossySystem& sys) {
  const auto n = sys.A.rows();
  require(sys.A.cols() == n, "A must be square");
  require(sys.B_p.rows() == n, "B_p row count must match state_dim");
  require(sys.B_d.rows() == n || sys.B_d.size() == 0,
          "B_d row count must match state_dim");
  const auto np = sys.B_p.cols();
  require(sys.p_min.size() == np && sys.p_max.size() == np,
          "power bounds must match power_dim");
  require(sys.x_min.size() == n && sys.x_max.size() == n && sys.x0.size() == n,
          "state bounds and x0 must match state_dim");

  std::vector<std::string> report;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (sys.A(i, i) > 0.0)
      report.push_back("diagonal positive at " + at(i, i));
    for (Eigen::Index j = 0; j < n; ++j)
      if (i != j && sys.A(i, j) < 0.0)
        report.push_back("off-diagonal negative at " + at(i, j));
  }
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < np; ++j)
      if (sys.B_p(i, j) < 0.0)
        report.push_back("B_p negative at " + at(i, j));
  for (Eigen::Index j = 0; j < np; ++j) {
    if (sys.p_min(j) < 0.0)
      report.push_back("p_min negative at " + at(j));
    if (sys.p_min(j) > sys.p_max(j))
      report.push_back("p_min exceeds p_max at " + at(j));
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    if (sys.x_min(i) > sys.x_max(i))
      report.push_back("x_min exceeds x_max at " + at(i));
    if (sys.x0(i) < sys.x_min(i) || sys.x0(i) > sys.x_max(i))
      report.push_back("x0 outside state bounds at " + at(i));
  }
  if (!sys.A.allFinite()) report.push_back("A has non-finite entries");
  if (!sys.B_p.allFinite()) report.push_back("B_p has non-finite entries");
  if (sys.B_d.size() > 0 && !sys.B_d.allFinite())
    report.push_back("B_d has non-finite entries");
  return report;
}

Matrix matrix_exponential(const Matrix& A, double t) {
  require(A.rows() == A.cols(), "matrix_exponential: matrix must be square");
  require(A.allFinite(), "matrix_exponential: non-finite entries");
  require(t >= 0.0, "matrix_exponential: t must be nonnegative");
  return (A * t).exp();
}

DiscreteSystem discretize(const LinearLossySystem& sys, double dt, int steps,
                          Scheme scheme) {
  require(dt > 0.0, "discretize: dt must be positive");
  require(steps >= 0, "discretize: steps must be nonnegative");
  const auto n = sys.state_dim();
  const auto np = sys.power_dim();
  const auto nd = sys.dist_dim();

  DiscreteSystem d;
  d.source = sys;
  d.dt = dt;
  d.steps = steps;
  d.scheme = scheme;

  if (scheme == Scheme::ForwardEuler) {
    for (Eigen::Index i = 0; i < n; ++i) {
      if (dt * std::abs(sys.A(i, i)) >= 1.0) {
        std::ostringstream os;
        os << "discretize: forward Euler unstable, need dt < "
           << 1.0 / std::abs(sys.A(i, i)) << " s for state " << i
           << " (got dt = " << dt << " s)";
        throw std::invalid_argument(os.str());
      }
    }
    d.Ad = Matrix::Identity(n, n) + dt * sys.A;
    d.Bpd = dt * sys.B_p;
    d.Bdd = dt * sys.B_d;
  } else {
    // Input maps from one augmented exponential: the top-right blocks of
    // exp([[A, Bp, Bd], [0,0,0]] dt) are the hold integrals of e^{As} B,
    // equal to dt * sum_m (A dt)^m / (m+1)! * B, also for singular A.
    Matrix aug = Matrix::Zero(n + np + nd, n + np + nd);
    aug.topLeftCorner(n, n) = sys.A;
    aug.block(0, n, n, np) = sys.B_p;
    if (nd > 0) aug.block(0, n + np, n, nd) = sys.B_d;
    const Matrix e = matrix_exponential(aug, dt);
    d.Ad = e.topLeftCorner(n, n);
    d.Bpd = e.block(0, n, n, np);
    d.Bdd = e.block(0, n + np, n, nd);
  }
  return d;
}

StateTrajectory simulate(const DiscreteSystem& dsys, const Trajectory& p,
                         const Trajectory& d) {
  const int K = p.steps();
  require(p.values.cols() == dsys.power_dim(),
          "simulate: power trajectory dimension mismatch");
  require(d.steps() >= K, "simulate: disturbance trajectory too short");
  require(d.values.cols() == dsys.dist_dim() ||
              (dsys.dist_dim() == 0 && d.values.cols() == 0),
          "simulate: disturbance dimension mismatch");
  require(p.dt == dsys.dt && d.dt == dsys.dt, "simulate: grid mismatch");

  StateTrajectory xs;
  xs.dt = dsys.dt;
  xs.values.resize(K + 1, dsys.state_dim());
  Vector x = dsys.source.x0;
  xs.values.row(0) = x.transpose();
  for (int k = 0; k < K; ++k) {
    x = dsys.Ad * x + dsys.Bpd * p.values.row(k).transpose();
    if (dsys.dist_dim() > 0) x += dsys.Bdd * d.values.row(k).transpose();
    xs.values.row(k + 1) = x.transpose();
  }
  return xs;
}

TrajectoryVerdict check_state_feasibility(const StateTrajectory& xs,
                                          const LinearLossySystem& sys,
                                          double tol) {
  const auto n = sys.state_dim();
  require(xs.values.cols() == n, "check_state_feasibility: dimension mismatch");

  TrajectoryVerdict v;
  v.worst_over = Vector::Zero(n);
  v.worst_under = Vector::Zero(n);
  for (int k = 0; k < xs.values.rows(); ++k) {
    for (Eigen::Index i = 0; i < n; ++i) {
      const double over = xs.values(k, i) - sys.x_max(i);
      const double under = sys.x_min(i) - xs.values(k, i);
      if (over > v.worst_over(i)) v.worst_over(i) = over;
      if (under > v.worst_under(i)) v.worst_under(i) = under;
      if ((over > tol || under > tol) && !v.first_violation_step)
        v.first_violation_step = k;
    }
  }
  v.feasible = (v.worst_over.maxCoeff() <= tol) &&
               (v.worst_under.maxCoeff() <= tol);
  return v;
}

}  // namespace flexenv
