#pragma once

#include <optional>
#include <vector>

#include "bmpc/linalg.hpp"

namespace bmpc::qp {

struct ActiveSetOptions {
  /// Primal feasibility / step tolerance, scaled by the problem data.
  double tol = 1e-11;
  /// Iteration guard; 0 picks 10 * (rows + cols) + 100.
  int max_iterations = 0;
  bool record_objective = false;
};

struct ActiveSetResult {
  Vector z;
  /// Multipliers for every row; zero outside the working set.
  Vector lambda;
  /// Final working set, ascending row indices.
  std::vector<int> working_set;
  int iterations = 0;
  bool used_phase_one = false;
  std::vector<double> objective_trace;
};

struct KktResidual {
  double stationarity = 0.0;  ///< ||H z - f + A^T lambda||_inf
  double primal = 0.0;        ///< max(A z - b, 0)
  double dual = 0.0;          ///< max(-lambda, 0)
  double complementarity = 0.0;  ///< max |lambda_i (b_i - a_i z)|

  double max() const;
};

/// Convex QP  minimize 1/2 z^T H z - f^T z  subject to  A z <= b  with fixed
/// H (positive definite) and A. The factorisations that depend only on (H, A)
/// are computed once so that many (f, b) instances can be solved cheaply.
///
/// Primal active-set method: start from a feasible point (the caller's warm
/// start, the origin, or the Chebyshev centre from a phase-one LP), solve the
/// equality-constrained subproblem on the working set, add the first blocking
/// constraint or drop the most negative multiplier. After a run of stalled
/// iterations the choice switches to Bland's smallest-index rule.
class DenseQp {
 public:
  DenseQp(Matrix h, Matrix a);

  const Matrix& h() const { return h_; }
  const Matrix& a() const { return a_; }
  Eigen::Index dim() const { return h_.rows(); }
  Eigen::Index rows() const { return a_.rows(); }

  /// Row i has a_i = 0; it constrains only the data b_i.
  bool is_zero_row(Eigen::Index i) const { return zero_row_[static_cast<std::size_t>(i)]; }

  const Eigen::LLT<Matrix>& h_llt() const { return llt_; }
  /// H^{-1} A^T and A H^{-1} A^T.
  const Matrix& hinv_at() const { return hinv_at_; }
  const Matrix& a_hinv_at() const { return a_hinv_at_; }

  /// Throws kInfeasible when {z : A z <= b} is empty and kNotConverged when
  /// the iteration guard trips.
  ActiveSetResult solve(const Vector& f, const Vector& b, const ActiveSetOptions& options = {},
                        const std::optional<Vector>& warm_start = std::nullopt) const;

  double objective(const Vector& f, const Vector& z) const { return 0.5 * z.dot(h_ * z) - f.dot(z); }

  KktResidual kkt(const Vector& f, const Vector& b, const Vector& z, const Vector& lambda) const;

  /// Largest violation max_i (a_i z - b_i), or -inf for an empty row set.
  double max_violation(const Vector& b, const Vector& z) const;

  /// Solve the equality-constrained problem on `working` exactly:
  /// returns z and the multipliers of the working rows.
  std::pair<Vector, Vector> solve_on_working_set(const Vector& f, const Vector& b,
                                                 const std::vector<int>& working) const;

 private:
  Matrix h_;
  Matrix a_;
  Eigen::LLT<Matrix> llt_;
  Matrix hinv_at_;
  Matrix a_hinv_at_;
  std::vector<bool> zero_row_;
};

}  // namespace bmpc::qp
