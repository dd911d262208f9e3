#pragma once

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include <limits>
#include <string>
#include <vector>

namespace flexenv::opt {

using SpMat = Eigen::SparseMatrix<double>;
using Triplet = Eigen::Triplet<double>;
using Vector = Eigen::VectorXd;

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// maximize c.z  subject to  G z <= h,  F z = g,  lo <= z <= hi.
/// Empty G/F are allowed; +-inf bounds are allowed.
struct LinearProgram {
  Vector c;
  SpMat G;
  Vector h;
  SpMat F;
  Vector g;
  Vector lo, hi;

  static LinearProgram boxed(int n);
};

/// One affine gap term  weight * ln(a.z + b).
struct LogTerm {
  Eigen::SparseVector<double> a;
  double b = 0.0;
  double weight = 1.0;
};

/// maximize c.z + sum_s w_s ln(a_s.z + b_s) over the same constraint family.
/// Every gap term must admit a strictly positive feasible value.
struct ConcaveLogProgram {
  LinearProgram base;
  std::vector<LogTerm> gaps;
  Vector warm_start;  // optional, gap-interior if provided
};

enum class SolveStatus { Optimal, Infeasible, Unbounded, NumericFailure };

std::string to_string(SolveStatus s);

struct SolverStats {
  int iterations = 0;
  double primal_residual = 0.0;
  double dual_residual = 0.0;
  double complementarity = 0.0;
  double duality_gap = 0.0;  // LP only
};

struct SolveResult {
  SolveStatus status = SolveStatus::NumericFailure;
  Vector z;
  double objective = 0.0;
  SolverStats stats;
  int bad_gap_term = -1;  // set when a gap term blocks interiority

  bool ok() const { return status == SolveStatus::Optimal; }
};

struct SolverOptions {
  int max_iterations = 200;
  double tol_primal = 1e-8;
  double tol_dual = 1e-8;
  double tol_complementarity = 1e-9;
};

SolveResult solve_lp(const LinearProgram& lp, const SolverOptions& opts = {});

SolveResult solve_log_box(const ConcaveLogProgram& clp,
                          const SolverOptions& opts = {});

/// Classifies feasibility of {G z <= h, F z = g, lo <= z <= hi} via an
/// elastic phase-1 program. Returns true when a feasible point exists.
bool is_feasible(const LinearProgram& lp, Vector* witness = nullptr);

}  // namespace flexenv::opt
