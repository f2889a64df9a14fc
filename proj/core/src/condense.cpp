#include "bmpc/condense.hpp"

#include <cmath>
#include <string>

#include "bmpc/error.hpp"
#include "bmpc/lp.hpp"

namespace bmpc {

namespace {

constexpr double kZeroRow = 1e-14;

bool all_finite(const Matrix& m) { return m.allFinite(); }

Matrix block_diagonal(const std::vector<Matrix>& blocks) {
  Eigen::Index rows = 0;
  Eigen::Index cols = 0;
  for (const auto& b : blocks) {
    rows += b.rows();
    cols += b.cols();
  }
  Matrix out = Matrix::Zero(rows, cols);
  Eigen::Index r = 0;
  Eigen::Index c = 0;
  for (const auto& b : blocks) {
    out.block(r, c, b.rows(), b.cols()) = b;
    r += b.rows();
    c += b.cols();
  }
  return out;
}

}  // namespace

void LinearSystem::validate() const {
  if (a.rows() < 1 || a.rows() != a.cols()) fail(ErrorCode::kDimensionMismatch, "A must be square with dx >= 1");
  if (b.rows() != a.rows() || b.cols() < 1) fail(ErrorCode::kDimensionMismatch, "B must be dx x du with du >= 1");
  if (!all_finite(a) || !all_finite(b)) fail(ErrorCode::kInvalidArgument, "system matrices must be finite");
}

Polytope::Polytope(Matrix a, Vector b) : a_(std::move(a)), b_(std::move(b)) {
  if (a_.rows() != b_.size() || a_.cols() < 1 || a_.rows() < 1) {
    fail(ErrorCode::kDimensionMismatch, "Polytope: A is k x d with k = len(b) >= 1");
  }
  if (!a_.allFinite() || !b_.allFinite()) fail(ErrorCode::kInvalidArgument, "Polytope: non-finite data");
  for (Eigen::Index i = 0; i < a_.rows(); ++i) {
    const double nrm = a_.row(i).norm();
    if (nrm <= kZeroRow) fail(ErrorCode::kInvalidArgument, "Polytope: zero row " + std::to_string(i));
    a_.row(i) /= nrm;
    b_(i) /= nrm;
  }
  const auto ball = lp::chebyshev_center(a_, b_);
  if (ball.radius < -1e-12) fail(ErrorCode::kInfeasible, "Polytope: empty set");
}

Polytope Polytope::box(Eigen::Index dim, double bound) {
  Matrix a = Matrix::Zero(2 * dim, dim);
  Vector b = Vector::Constant(2 * dim, bound);
  for (Eigen::Index i = 0; i < dim; ++i) {
    a(2 * i, i) = 1.0;
    a(2 * i + 1, i) = -1.0;
  }
  return Polytope(std::move(a), std::move(b));
}

bool Polytope::contains(const Vector& x, double tol) const { return margin(x) >= -tol; }

double Polytope::margin(const Vector& x) const { return (b_ - a_ * x).minCoeff(); }

void MpcSpec::validate() const {
  sys.validate();
  if (horizon < 1) fail(ErrorCode::kInvalidArgument, "horizon T must be >= 1");
  const auto dx = sys.state_dim();
  const auto du = sys.input_dim();
  if (static_cast<int>(q.size()) != horizon || static_cast<int>(r.size()) != horizon) {
    fail(ErrorCode::kDimensionMismatch, "need T state-cost and T input-cost matrices");
  }
  for (const auto& qt : q) {
    if (qt.rows() != dx || qt.cols() != dx) fail(ErrorCode::kDimensionMismatch, "Q_t must be dx x dx");
    if (!linalg::is_symmetric(qt) || linalg::min_eigenvalue(0.5 * (qt + qt.transpose())) <= 0.0) {
      fail(ErrorCode::kNotPsd, "Q_t must be symmetric positive definite");
    }
  }
  for (const auto& rt : r) {
    if (rt.rows() != du || rt.cols() != du) fail(ErrorCode::kDimensionMismatch, "R_t must be du x du");
    if (!linalg::is_symmetric(rt) || linalg::min_eigenvalue(0.5 * (rt + rt.transpose())) <= 0.0) {
      fail(ErrorCode::kNotPsd, "R_t must be symmetric positive definite");
    }
  }
  if (state_set.dim() != dx) fail(ErrorCode::kDimensionMismatch, "state polytope dimension");
  if (input_set.dim() != du) fail(ErrorCode::kDimensionMismatch, "input polytope dimension");
}

PredictionMatrices build_prediction_matrices(const LinearSystem& sys, int horizon) {
  sys.validate();
  if (horizon < 1) fail(ErrorCode::kInvalidArgument, "horizon T must be >= 1");
  const auto dx = sys.state_dim();
  const auto du = sys.input_dim();
  const auto t = static_cast<Eigen::Index>(horizon);
  PredictionMatrices pm{Matrix::Zero(t * dx, dx), Matrix::Zero(t * dx, t * du)};
  // powers[k] = A^k
  std::vector<Matrix> powers{Matrix::Identity(dx, dx)};
  for (Eigen::Index k = 1; k <= t; ++k) powers.push_back(sys.a * powers.back());
  for (Eigen::Index i = 0; i < t; ++i) {
    pm.a_hat.block(i * dx, 0, dx, dx) = powers[static_cast<std::size_t>(i + 1)];
    for (Eigen::Index j = 0; j <= i; ++j) {
      pm.b_hat.block(i * dx, j * du, dx, du) = powers[static_cast<std::size_t>(i - j)] * sys.b;
    }
  }
  return pm;
}

double CondensedQp::objective(const Vector& x0, const Vector& u) const {
  return 0.5 * u.dot(h * u) - x0.dot(f * u);
}

const qp::DenseQp& CondensedQp::solver() const {
  if (!solver_) fail(ErrorCode::kInvalidArgument, "CondensedQp used before refresh()");
  return *solver_;
}

void CondensedQp::refresh() { solver_ = std::make_shared<const qp::DenseQp>(h, g); }

CondensedQp CondensedQp::from_matrices(Matrix h, Matrix f, Matrix g, Matrix p, Vector w, bool normalize) {
  const auto n = h.rows();
  if (h.cols() != n || n < 1) fail(ErrorCode::kDimensionMismatch, "H must be square");
  if (f.cols() != n) fail(ErrorCode::kDimensionMismatch, "F must have T*du columns");
  if (g.cols() != n || p.rows() != g.rows() || w.size() != g.rows() || p.cols() != f.rows()) {
    fail(ErrorCode::kDimensionMismatch, "G, P, w shapes");
  }
  if (!linalg::is_symmetric(h)) fail(ErrorCode::kInvalidArgument, "H must be symmetric");
  if (linalg::min_eigenvalue(h) <= 0.0) fail(ErrorCode::kNotPsd, "H must be positive definite");
  CondensedQp qp;
  if (normalize) {
    for (Eigen::Index i = 0; i < g.rows(); ++i) {
      const double nrm = g.row(i).norm();
      if (nrm <= kZeroRow) {
        g.row(i).setZero();
        continue;
      }
      g.row(i) /= nrm;
      p.row(i) /= nrm;
      w(i) /= nrm;
    }
  }
  qp.h = std::move(h);
  qp.f = std::move(f);
  qp.g = std::move(g);
  qp.p = std::move(p);
  qp.w = std::move(w);
  qp.state_dim = qp.f.rows();
  qp.input_dim = n;
  qp.horizon = 1;
  qp.refresh();
  return qp;
}

CondensedQp condense(const MpcSpec& spec) {
  spec.validate();
  const auto dx = spec.sys.state_dim();
  const auto du = spec.sys.input_dim();
  const auto t = static_cast<Eigen::Index>(spec.horizon);
  const auto pm = build_prediction_matrices(spec.sys, spec.horizon);

  const Matrix q_blk = block_diagonal(spec.q);
  const Matrix r_blk = block_diagonal(spec.r);
  const double h_scale = spec.hessian == HessianConvention::kStageCost ? 2.0 : 1.0;
  Matrix h = h_scale * (r_blk + pm.b_hat.transpose() * q_blk * pm.b_hat);
  h = 0.5 * (h + h.transpose());
  Matrix f = -2.0 * pm.a_hat.transpose() * q_blk * pm.b_hat;

  const auto& ux = spec.input_set;
  const auto& xx = spec.state_set;
  const Eigen::Index ku = ux.rows();
  const Eigen::Index kx = xx.rows();
  const Eigen::Index m = t * (ku + kx);
  Matrix g = Matrix::Zero(m, t * du);
  Matrix p = Matrix::Zero(m, dx);
  Vector w(m);
  for (Eigen::Index s = 0; s < t; ++s) {
    const Eigen::Index base = s * (ku + kx);
    g.block(base, s * du, ku, du) = ux.a();
    w.segment(base, ku) = ux.b();
    const Eigen::Index xr = base + ku;
    g.block(xr, 0, kx, t * du) = xx.a() * pm.b_hat.middleRows(s * dx, dx);
    p.block(xr, 0, kx, dx) = -xx.a() * pm.a_hat.middleRows(s * dx, dx);
    w.segment(xr, kx) = xx.b();
  }

  CondensedQp qp = CondensedQp::from_matrices(std::move(h), std::move(f), std::move(g), std::move(p), std::move(w));
  qp.a_hat = pm.a_hat;
  qp.b_hat = pm.b_hat;
  qp.state_dim = dx;
  qp.input_dim = du;
  qp.horizon = spec.horizon;
  if (spec.hessian == HessianConvention::kStageCost) qp.cost_offset = pm.a_hat.transpose() * q_blk * pm.a_hat;
  qp.state_set = spec.state_set;
  return qp;
}

Vector residuals(const CondensedQp& qp, const Vector& x0, const Vector& u) {
  if (x0.size() != qp.p.cols() || u.size() != qp.g.cols()) fail(ErrorCode::kDimensionMismatch, "residuals");
  return qp.w + qp.p * x0 - qp.g * u;
}

QpGeometry geometry(const CondensedQp& qp, const Vector& x0) {
  const Vector c = qp.rhs(x0);
  std::vector<Eigen::Index> rows;
  for (Eigen::Index i = 0; i < qp.m(); ++i) {
    if (qp.is_parameter_row(i)) {
      if (c(i) < 0.0) fail(ErrorCode::kInfeasible, "geometry: x0 violates a parameter-only row");
    } else {
      rows.push_back(i);
    }
  }
  const auto n = qp.n();
  Matrix a(static_cast<Eigen::Index>(rows.size()), n);
  Vector b(a.rows());
  for (Eigen::Index k = 0; k < a.rows(); ++k) {
    a.row(k) = qp.g.row(rows[static_cast<std::size_t>(k)]);
    b(k) = c(rows[static_cast<std::size_t>(k)]);
  }

  QpGeometry geo;
  const auto ball = lp::chebyshev_center(a, b);
  if (ball.radius <= 0.0) fail(ErrorCode::kInfeasible, "geometry: feasible set has empty interior at x0");
  geo.inner_radius = ball.radius;
  geo.chebyshev_center = ball.center;

  // Interval enclosure: per-coordinate LP bounds.
  Vector extent(n);
  for (Eigen::Index j = 0; j < n; ++j) {
    Vector cost = Vector::Zero(n);
    double hi = 0.0;
    double lo = 0.0;
    for (const double sign : {-1.0, 1.0}) {
      cost(j) = sign;
      const auto res = lp::solve_lp(cost, a, b);
      if (res.status == lp::LpStatus::kUnbounded) fail(ErrorCode::kInvalidArgument, "geometry: feasible set unbounded");
      if (res.status != lp::LpStatus::kOptimal) fail(ErrorCode::kNotConverged, "geometry: bound LP failed");
      (sign < 0 ? hi : lo) = res.x(j);
    }
    extent(j) = std::max(std::abs(hi), std::abs(lo));
  }
  geo.outer_radius = extent.norm();
  geo.strong_convexity = linalg::min_eigenvalue(qp.h);
  geo.lipschitz = linalg::spectral_norm(qp.h) * geo.outer_radius + linalg::spectral_norm(qp.f) * x0.norm();
  return geo;
}

}  // namespace bmpc
