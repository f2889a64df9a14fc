#pragma once

#include <memory>
#include <optional>
#include <vector>

#include "bmpc/dense_qp.hpp"
#include "bmpc/linalg.hpp"

namespace bmpc {

/// x_{t+1} = A x_t + B u_t
struct LinearSystem {
  Matrix a;
  Matrix b;

  Eigen::Index state_dim() const { return a.rows(); }
  Eigen::Index input_dim() const { return b.cols(); }
  void validate() const;
  Vector step(const Vector& x, const Vector& u) const { return a * x + b * u; }
};

/// {x : A x <= b} with unit-norm rows. Construction normalises the rows and
/// certifies nonemptiness with a feasibility LP.
class Polytope {
 public:
  Polytope() = default;
  Polytope(Matrix a, Vector b);

  /// [-bound, bound]^dim as 2*dim rows (+e_i, then -e_i, per coordinate).
  static Polytope box(Eigen::Index dim, double bound);

  const Matrix& a() const { return a_; }
  const Vector& b() const { return b_; }
  Eigen::Index dim() const { return a_.cols(); }
  Eigen::Index rows() const { return a_.rows(); }

  bool contains(const Vector& x, double tol = 0.0) const;
  /// min_i (b_i - a_i x); positive in the interior.
  double margin(const Vector& x) const;

 private:
  Matrix a_;
  Vector b_;
};

/// How the quadratic term of the condensed objective is scaled.
enum class HessianConvention {
  /// H = 2 (R + Bhat^T Q Bhat), F = -2 Ahat^T Q Bhat: 1/2 u^T H u - x0^T F u
  /// equals the summed stage cost up to a function of x0.
  kStageCost,
  /// H = R + Bhat^T Q Bhat with the same F, as the matrices are often
  /// written; the linear term then carries twice its stage-cost weight.
  kHalfHessian,
};

/// Finite-horizon problem: stage costs Q_1..Q_T on states and R_0..R_{T-1}
/// on inputs, with x_t in X and u_t in U.
struct MpcSpec {
  LinearSystem sys;
  int horizon = 1;
  std::vector<Matrix> q;  ///< T state-cost matrices, Q_1..Q_T
  std::vector<Matrix> r;  ///< T input-cost matrices, R_0..R_{T-1}
  Polytope state_set;
  Polytope input_set;
  HessianConvention hessian = HessianConvention::kStageCost;

  void validate() const;
};

struct PredictionMatrices {
  Matrix a_hat;  ///< (T dx) x dx, stacks A^1..A^T
  Matrix b_hat;  ///< (T dx) x (T du), block lower triangular A^{i-j} B
};

PredictionMatrices build_prediction_matrices(const LinearSystem& sys, int horizon);

/// Condensed multiparametric QP in the input sequence u = (u_0..u_{T-1}):
///   minimize 1/2 u^T H u - x0^T F u   subject to   G u <= w + P x0.
/// Rows are stacked per step t as [input rows of u_t ; state rows of x_{t+1}]
/// and scaled to unit norm (w and P scaled alike). Rows of G that vanish
/// (state rows not reachable by any input yet) are kept unscaled; they only
/// constrain x0.
struct CondensedQp {
  Matrix h;
  Matrix f;  ///< dx x (T du)
  Matrix g;  ///< m x (T du)
  Matrix p;  ///< m x dx
  Vector w;
  Matrix a_hat;
  Matrix b_hat;
  Eigen::Index state_dim = 0;
  Eigen::Index input_dim = 0;
  int horizon = 1;
  /// Constant term x0^T S x0 so that the condensed objective plus it equals
  /// the summed stage cost; empty for QPs built from raw matrices.
  Matrix cost_offset;
  /// The state polytope X when built by condense(); used by policies that
  /// need to project or test states.
  std::optional<Polytope> state_set;

  Eigen::Index m() const { return g.rows(); }
  Eigen::Index n() const { return h.rows(); }

  /// Right-hand side w + P x0.
  Vector rhs(const Vector& x0) const { return w + p * x0; }
  /// Linear term F^T x0 of the objective gradient.
  Vector linear_term(const Vector& x0) const { return f.transpose() * x0; }
  double objective(const Vector& x0, const Vector& u) const;

  /// Row i of G is identically zero.
  bool is_parameter_row(Eigen::Index i) const { return solver().is_zero_row(i); }

  /// Shared factorisations of (H, G).
  const qp::DenseQp& solver() const;

  /// Builds from raw data. Rows are normalised unless `normalize` is false.
  static CondensedQp from_matrices(Matrix h, Matrix f, Matrix g, Matrix p, Vector w, bool normalize = true);

  /// Recomputes the cached factorisation after fields were edited.
  void refresh();

 private:
  std::shared_ptr<const qp::DenseQp> solver_;
};

CondensedQp condense(const MpcSpec& spec);

/// phi = w + P x0 - G u (negative entries flag infeasibility).
Vector residuals(const CondensedQp& qp, const Vector& x0, const Vector& u);

/// Geometry of {u : G u <= w + P x0} at a fixed x0 (parameter rows excluded).
struct QpGeometry {
  double inner_radius = 0.0;   ///< r, Chebyshev radius
  Vector chebyshev_center;
  double outer_radius = 0.0;   ///< R, origin-centred enclosing radius (box bound)
  double lipschitz = 0.0;      ///< L_V >= sup ||H u - F^T x0|| over the set
  double strong_convexity = 0.0;  ///< alpha = lambda_min(H)
};

QpGeometry geometry(const CondensedQp& qp, const Vector& x0);

}  // namespace bmpc
