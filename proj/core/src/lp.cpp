#include "bmpc/lp.hpp"

#include <cmath>
#include <limits>
#include <vector>

#include "bmpc/error.hpp"

namespace bmpc::lp {

namespace {

// Row-major dense tableau. Column `cols-1` is the right-hand side; the last
// row is the (phase) objective in reduced-cost form.
class Tableau {
 public:
  Tableau(Eigen::Index rows, Eigen::Index cols) : t_(Matrix::Zero(rows, cols)) {}

  double& operator()(Eigen::Index r, Eigen::Index c) { return t_(r, c); }
  double operator()(Eigen::Index r, Eigen::Index c) const { return t_(r, c); }
  Eigen::Index rows() const { return t_.rows(); }
  Eigen::Index cols() const { return t_.cols(); }

  void pivot(Eigen::Index pr, Eigen::Index pc) {
    t_.row(pr) /= t_(pr, pc);
    for (Eigen::Index r = 0; r < t_.rows(); ++r) {
      if (r == pr) continue;
      const double f = t_(r, pc);
      if (f != 0.0) t_.row(r) -= f * t_.row(pr);
    }
  }

 private:
  Matrix t_;
};

enum class Step { kOptimal, kUnbounded, kLimit };

// Runs simplex pivots on the objective stored in row `obj_row`, considering
// only columns < `enter_limit` for entering.
Step run_simplex(Tableau& t, std::vector<Eigen::Index>& basis, Eigen::Index obj_row, Eigen::Index n_cons,
                 Eigen::Index enter_limit, const LpOptions& opt, int& pivots) {
  const Eigen::Index rhs = t.cols() - 1;
  int degenerate_run = 0;
  while (true) {
    if (pivots >= opt.max_pivots) return Step::kLimit;
    const bool bland = degenerate_run >= opt.bland_after;
    Eigen::Index enter = -1;
    double best = -opt.tol;
    for (Eigen::Index c = 0; c < enter_limit; ++c) {
      const double rc = t(obj_row, c);
      if (rc < best) {
        enter = c;
        if (bland) break;
        best = rc;
      }
    }
    if (enter < 0) return Step::kOptimal;

    Eigen::Index leave = -1;
    double ratio = std::numeric_limits<double>::infinity();
    for (Eigen::Index r = 0; r < n_cons; ++r) {
      const double a = t(r, enter);
      if (a > opt.tol) {
        const double q = t(r, rhs) / a;
        if (q < ratio - 1e-12 || (std::abs(q - ratio) <= 1e-12 && leave >= 0 && basis[r] < basis[leave])) {
          ratio = q;
          leave = r;
        }
      }
    }
    if (leave < 0) return Step::kUnbounded;
    degenerate_run = ratio <= opt.tol ? degenerate_run + 1 : 0;
    t.pivot(leave, enter);
    basis[leave] = enter;
    ++pivots;
  }
}

}  // namespace

LpResult solve_lp(const Vector& c, const Matrix& a, const Vector& b, const LpOptions& opt) {
  const Eigen::Index m = a.rows();
  const Eigen::Index n = a.cols();
  if (c.size() != n || b.size() != m) fail(ErrorCode::kDimensionMismatch, "solve_lp: shapes");

  // Columns: x+ (n), x- (n), slack (m), artificial (one per negative b).
  std::vector<Eigen::Index> art_rows;
  for (Eigen::Index i = 0; i < m; ++i) {
    if (b(i) < 0.0) art_rows.push_back(i);
  }
  const Eigen::Index n_art = static_cast<Eigen::Index>(art_rows.size());
  const Eigen::Index n_struct = 2 * n + m;
  const Eigen::Index n_cols = n_struct + n_art + 1;
  // Rows: m constraints, phase-II objective, phase-I objective.
  Tableau t(m + 2, n_cols);
  const Eigen::Index rhs = n_cols - 1;
  const Eigen::Index obj2 = m;
  const Eigen::Index obj1 = m + 1;
  std::vector<Eigen::Index> basis(static_cast<std::size_t>(m));

  Eigen::Index art = 0;
  for (Eigen::Index i = 0; i < m; ++i) {
    const double s = b(i) < 0.0 ? -1.0 : 1.0;
    for (Eigen::Index j = 0; j < n; ++j) {
      t(i, j) = s * a(i, j);
      t(i, n + j) = -s * a(i, j);
    }
    t(i, 2 * n + i) = s;
    t(i, rhs) = s * b(i);
    if (s < 0.0) {
      const Eigen::Index col = n_struct + art++;
      t(i, col) = 1.0;
      basis[static_cast<std::size_t>(i)] = col;
    } else {
      basis[static_cast<std::size_t>(i)] = 2 * n + i;
    }
  }
  for (Eigen::Index j = 0; j < n; ++j) {
    t(obj2, j) = c(j);
    t(obj2, n + j) = -c(j);
  }
  // Phase-I objective: sum of artificials, expressed in non-basic terms.
  for (Eigen::Index i : art_rows) {
    for (Eigen::Index col = 0; col < n_cols; ++col) {
      if (col >= n_struct && col < n_struct + n_art) continue;
      t(obj1, col) -= t(i, col);
    }
  }

  LpResult result;
  if (n_art > 0) {
    const Step s = run_simplex(t, basis, obj1, m, n_struct + n_art, opt, result.pivots);
    if (s == Step::kLimit) return result;
    if (-t(obj1, rhs) > std::max(opt.tol, 1e-9 * (1.0 + b.cwiseAbs().maxCoeff()))) {
      result.status = LpStatus::kInfeasible;
      return result;
    }
    // Drive zero-level artificials out of the basis where possible.
    for (Eigen::Index r = 0; r < m; ++r) {
      if (basis[static_cast<std::size_t>(r)] < n_struct) continue;
      for (Eigen::Index col = 0; col < n_struct; ++col) {
        if (std::abs(t(r, col)) > 1e-9) {
          t.pivot(r, col);
          basis[static_cast<std::size_t>(r)] = col;
          break;
        }
      }
    }
  }

  const Step s = run_simplex(t, basis, obj2, m, n_struct, opt, result.pivots);
  if (s == Step::kLimit) return result;
  if (s == Step::kUnbounded) {
    result.status = LpStatus::kUnbounded;
    return result;
  }

  Vector z = Vector::Zero(n_struct);
  for (Eigen::Index r = 0; r < m; ++r) {
    const Eigen::Index col = basis[static_cast<std::size_t>(r)];
    if (col < n_struct) z(col) = t(r, rhs);
  }
  result.x = z.head(n) - z.segment(n, n);
  result.objective = c.dot(result.x);
  result.status = LpStatus::kOptimal;
  return result;
}

ChebyshevBall chebyshev_center(const Matrix& a, const Vector& b, double radius_cap) {
  const Eigen::Index m = a.rows();
  const Eigen::Index n = a.cols();
  // Variables (x, t): maximise t s.t. a_i x + ||a_i|| t <= b_i, t <= cap.
  std::vector<Eigen::Index> rows;
  double zero_row_slack = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < m; ++i) {
    if (a.row(i).norm() > 1e-12) {
      rows.push_back(i);
    } else {
      zero_row_slack = std::min(zero_row_slack, b(i));
    }
  }
  const auto k = static_cast<Eigen::Index>(rows.size());
  Matrix lp_a = Matrix::Zero(k + 1, n + 1);
  Vector lp_b(k + 1);
  for (Eigen::Index r = 0; r < k; ++r) {
    const auto i = rows[static_cast<std::size_t>(r)];
    lp_a.row(r).head(n) = a.row(i);
    lp_a(r, n) = a.row(i).norm();
    lp_b(r) = b(i);
  }
  lp_a(k, n) = 1.0;
  lp_b(k) = radius_cap;
  Vector c = Vector::Zero(n + 1);
  c(n) = -1.0;

  const LpResult res = solve_lp(c, lp_a, lp_b);
  ChebyshevBall ball;
  if (res.status != LpStatus::kOptimal) {
    // Negative b rows with a free t always admit a feasible point, so this
    // only happens on pivot-limit exhaustion.
    fail(ErrorCode::kNotConverged, "chebyshev_center: LP did not reach optimality");
  }
  ball.center = res.x.head(n);
  ball.radius = res.x(n);
  if (zero_row_slack < 0.0) ball.radius = std::min(ball.radius, zero_row_slack);
  return ball;
}

}  // namespace bmpc::lp
