#include "bmpc/dense_qp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "bmpc/error.hpp"
#include "bmpc/lp.hpp"

namespace bmpc::qp {

namespace {

constexpr int kStallBeforeBland = 20;

Matrix gather(const Matrix& m, const std::vector<int>& rows, const std::vector<int>& cols) {
  Matrix out(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (std::size_t c = 0; c < cols.size(); ++c) {
      out(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = m(rows[r], cols[c]);
    }
  }
  return out;
}

}  // namespace

double KktResidual::max() const { return std::max({stationarity, primal, dual, complementarity}); }

DenseQp::DenseQp(Matrix h, Matrix a) : h_(std::move(h)), a_(std::move(a)) {
  if (h_.rows() != h_.cols()) fail(ErrorCode::kDimensionMismatch, "DenseQp: H must be square");
  if (a_.cols() != h_.rows()) fail(ErrorCode::kDimensionMismatch, "DenseQp: A columns must match H");
  llt_.compute(h_);
  if (llt_.info() != Eigen::Success) fail(ErrorCode::kNotPsd, "DenseQp: H is not positive definite");
  hinv_at_ = llt_.solve(a_.transpose());
  a_hinv_at_ = a_ * hinv_at_;
  zero_row_.resize(static_cast<std::size_t>(a_.rows()));
  for (Eigen::Index i = 0; i < a_.rows(); ++i) {
    zero_row_[static_cast<std::size_t>(i)] = a_.row(i).norm() <= 1e-14;
  }
}

double DenseQp::max_violation(const Vector& b, const Vector& z) const {
  if (a_.rows() == 0) return -std::numeric_limits<double>::infinity();
  return (a_ * z - b).maxCoeff();
}

KktResidual DenseQp::kkt(const Vector& f, const Vector& b, const Vector& z, const Vector& lambda) const {
  KktResidual r;
  r.stationarity = (h_ * z - f + a_.transpose() * lambda).cwiseAbs().maxCoeff();
  if (a_.rows() > 0) {
    const Vector slack = b - a_ * z;
    r.primal = std::max(0.0, -slack.minCoeff());
    r.dual = std::max(0.0, -lambda.minCoeff());
    r.complementarity = lambda.cwiseProduct(slack).cwiseAbs().maxCoeff();
  }
  return r;
}

std::pair<Vector, Vector> DenseQp::solve_on_working_set(const Vector& f, const Vector& b,
                                                        const std::vector<int>& working) const {
  const Vector hinv_f = llt_.solve(f);
  if (working.empty()) return {hinv_f, Vector(0)};
  const Matrix s = gather(a_hinv_at_, working, working);
  Vector rhs(static_cast<Eigen::Index>(working.size()));
  for (std::size_t k = 0; k < working.size(); ++k) {
    rhs(static_cast<Eigen::Index>(k)) = a_.row(working[k]).dot(hinv_f) - b(working[k]);
  }
  Eigen::FullPivLU<Matrix> lu(s);
  if (!lu.isInvertible()) fail(ErrorCode::kDegenerate, "working-set constraints are linearly dependent");
  const Vector mu = lu.solve(rhs);
  Vector z = hinv_f;
  for (std::size_t k = 0; k < working.size(); ++k) {
    z -= hinv_at_.col(working[k]) * mu(static_cast<Eigen::Index>(k));
  }
  return {z, mu};
}

ActiveSetResult DenseQp::solve(const Vector& f, const Vector& b, const ActiveSetOptions& opt,
                               const std::optional<Vector>& warm_start) const {
  const Eigen::Index n = dim();
  const Eigen::Index m = rows();
  if (f.size() != n || b.size() != m) fail(ErrorCode::kDimensionMismatch, "DenseQp::solve: shapes");

  const double feas_tol = 1e-9 * (1.0 + (m > 0 ? b.cwiseAbs().maxCoeff() : 0.0));
  for (Eigen::Index i = 0; i < m; ++i) {
    if (is_zero_row(i) && b(i) < -feas_tol) fail(ErrorCode::kInfeasible, "constraint 0 <= b_i violated");
  }

  ActiveSetResult res;
  // Feasible start.
  Vector z;
  if (warm_start && warm_start->size() == n && max_violation(b, *warm_start) <= feas_tol) {
    z = *warm_start;
  } else if (m == 0 || b.minCoeff() >= 0.0) {
    z = Vector::Zero(n);
  } else {
    const auto ball = lp::chebyshev_center(a_, b, 1.0);
    if (ball.radius < -feas_tol) fail(ErrorCode::kInfeasible, "phase-one LP found no feasible point");
    z = ball.center;
    res.used_phase_one = true;
  }

  const int max_iter = opt.max_iterations > 0 ? opt.max_iterations : static_cast<int>(10 * (m + n) + 100);
  std::vector<int> working;
  std::vector<int> added_order;
  // Rows found linearly dependent on the current working set. In exact
  // arithmetic they never block a step in the working set's null space, so
  // they are kept out of the ratio test until the working set shrinks.
  std::vector<int> dependent;
  int stall = 0;
  bool at_minimizer = false;
  const double step_tol = opt.tol;

  auto in_working = [&](int i) { return std::find(working.begin(), working.end(), i) != working.end(); };

  for (res.iterations = 0; res.iterations < max_iter; ++res.iterations) {
    if (opt.record_objective) res.objective_trace.push_back(objective(f, z));
    const Vector g = h_ * z - f;
    const Vector hinv_g = llt_.solve(g);
    Vector p = -hinv_g;
    Vector mu;
    if (!working.empty()) {
      const Matrix s = gather(a_hinv_at_, working, working);
      Vector rhs(static_cast<Eigen::Index>(working.size()));
      for (std::size_t k = 0; k < working.size(); ++k) {
        rhs(static_cast<Eigen::Index>(k)) = -a_.row(working[k]).dot(hinv_g);
      }
      Eigen::LDLT<Matrix> ldlt(s);
      if (ldlt.info() != Eigen::Success || ldlt.rcond() < 1e-14) {
        // Dependent working rows: drop the most recently added one.
        const int last = added_order.back();
        added_order.pop_back();
        working.erase(std::find(working.begin(), working.end(), last));
        dependent.push_back(last);
        continue;
      }
      mu = ldlt.solve(rhs);
      for (std::size_t k = 0; k < working.size(); ++k) {
        p -= hinv_at_.col(working[k]) * mu(static_cast<Eigen::Index>(k));
      }
    }

    // Stationary on the working set when the step vanishes or the previous
    // step was an unblocked full step (badly scaled H leaves roundoff in p).
    const double z_scale = 1.0 + z.cwiseAbs().maxCoeff();
    if (at_minimizer || p.cwiseAbs().maxCoeff() <= step_tol * z_scale) {
      at_minimizer = false;
      if (working.empty()) break;
      const double dual_tol = 1e-10 * (1.0 + mu.cwiseAbs().maxCoeff());
      const bool bland = stall >= kStallBeforeBland;
      Eigen::Index drop = -1;
      double most_negative = -dual_tol;
      for (Eigen::Index k = 0; k < mu.size(); ++k) {
        if (mu(k) < most_negative) {
          drop = k;
          if (bland) break;  // working is ascending: first negative is smallest index
          most_negative = mu(k);
        }
      }
      if (drop < 0) break;
      const int row = working[static_cast<std::size_t>(drop)];
      working.erase(working.begin() + drop);
      added_order.erase(std::find(added_order.begin(), added_order.end(), row));
      dependent.clear();
      continue;
    }

    // Ratio test for the first blocking constraint; ties go to the smaller index.
    double alpha = 1.0;
    int block = -1;
    const double p_norm = p.norm();
    for (Eigen::Index i = 0; i < m; ++i) {
      if (is_zero_row(i) || in_working(static_cast<int>(i))) continue;
      if (std::find(dependent.begin(), dependent.end(), static_cast<int>(i)) != dependent.end()) continue;
      const double ap = a_.row(i).dot(p);
      if (ap <= 1e-13 * p_norm * a_.row(i).norm()) continue;
      const double slack = std::max(0.0, b(i) - a_.row(i).dot(z));
      const double ai = slack / ap;
      if (ai < alpha) {
        alpha = ai;
        block = static_cast<int>(i);
      }
    }
    z += alpha * p;
    stall = alpha <= 0.0 ? stall + 1 : 0;
    at_minimizer = block < 0;
    if (block >= 0) {
      working.insert(std::upper_bound(working.begin(), working.end(), block), block);
      added_order.push_back(block);
    }
  }
  if (res.iterations >= max_iter) fail(ErrorCode::kNotConverged, "active-set iteration guard exceeded");

  // Polish: solve the KKT system of the final working set exactly.
  res.lambda = Vector::Zero(m);
  auto [z_ws, mu_ws] = solve_on_working_set(f, b, working);
  if (max_violation(b, z_ws) <= feas_tol) z = z_ws;
  for (std::size_t k = 0; k < working.size(); ++k) res.lambda(working[k]) = mu_ws(static_cast<Eigen::Index>(k));
  res.z = std::move(z);
  res.working_set = std::move(working);
  if (opt.record_objective) res.objective_trace.push_back(objective(f, res.z));
  return res;
}

}  // namespace bmpc::qp
