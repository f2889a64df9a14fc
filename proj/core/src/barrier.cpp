#include "bmpc/barrier.hpp"

#include <cmath>
#include <cstdint>
#include <limits>

#include "bmpc/error.hpp"
#include "bmpc/explicit_mpc.hpp"
#include "bmpc/lp.hpp"

namespace bmpc {

namespace {

constexpr double kFullStepDecrement = 0.25;
constexpr double kStageTol = 1e-2;
constexpr double kStageShrink = 0.1;

struct NewtonRun {
  Vector u;
  int iters = 0;
  double decrement = std::numeric_limits<double>::infinity();
  bool converged = false;
  std::vector<double> trace;
};

double min_residual(const CondensedQp& qp, const Vector& x0, const Vector& u) {
  return residuals(qp, x0, u).minCoeff();
}

// Damped Newton on V^eta / eta (self-concordant), from a strictly interior u.
NewtonRun newton(const CondensedQp& qp, double eta, const Vector& x0, Vector u, const Vector& d, double tol,
                 int max_iters, bool record) {
  NewtonRun run;
  double prev_dec = std::numeric_limits<double>::infinity();
  int stalls = 0;
  for (run.iters = 0; run.iters < max_iters; ++run.iters) {
    const auto ev = barrier_objective(qp, eta, x0, u, d);
    if (record) run.trace.push_back(ev.value);
    Eigen::LLT<Matrix> llt(ev.hessian);
    if (llt.info() != Eigen::Success) fail(ErrorCode::kNotConverged, "barrier Hessian lost definiteness");
    const Vector step = -llt.solve(ev.gradient);
    const double dec = std::sqrt(std::max(0.0, -ev.gradient.dot(step)) / eta);
    run.decrement = dec;
    if (dec <= tol) {
      run.converged = true;
      break;
    }
    // At machine precision the decrement stops shrinking; accept once small.
    if (dec < 1e-7 && dec > 0.5 * prev_dec) {
      if (++stalls >= 3) {
        run.converged = true;
        break;
      }
    }
    prev_dec = dec;
    double t = dec <= kFullStepDecrement ? 1.0 : 1.0 / (1.0 + dec);
    Vector candidate = u + t * step;
    // The damped step stays inside the Dikin ellipsoid in exact arithmetic;
    // guard against rounding at the boundary and keep descent monotone.
    for (int halving = 0; halving < 60; ++halving) {
      const Vector phi = residuals(qp, x0, candidate);
      if (phi.minCoeff() > 0.0) {
        const double v = barrier_objective(qp, eta, x0, candidate, d).value;
        if (v <= ev.value + 1e-13 * (1.0 + std::abs(ev.value))) break;
      }
      t *= 0.5;
      candidate = u + t * step;
    }
    u = std::move(candidate);
  }
  run.u = std::move(u);
  return run;
}

}  // namespace

void BarrierConfig::validate() const {
  if (!(eta > 0.0) || !std::isfinite(eta)) fail(ErrorCode::kInvalidArgument, "eta must be positive");
  if (!(newton_tol > 0.0) || newton_tol > 0.25) fail(ErrorCode::kInvalidArgument, "newton_tol must be in (0, 1/4]");
  if (max_newton_iters < 1) fail(ErrorCode::kInvalidArgument, "max_newton_iters must be >= 1");
  if (!(feasibility_margin > 0.0)) fail(ErrorCode::kInvalidArgument, "feasibility_margin must be positive");
}

Vector recentering_vector(const CondensedQp& qp) {
  if ((qp.w.array() <= 0.0).any()) {
    fail(ErrorCode::kInvalidArgument, "recentering needs w > 0 (origin strictly inside at x0 = 0)");
  }
  return -(qp.g.transpose() * qp.w.cwiseInverse());
}

BarrierEvaluation barrier_objective(const CondensedQp& qp, double eta, const Vector& x0, const Vector& u) {
  return barrier_objective(qp, eta, x0, u, recentering_vector(qp));
}

BarrierEvaluation barrier_objective(const CondensedQp& qp, double eta, const Vector& x0, const Vector& u,
                                    const Vector& d) {
  const Vector phi = residuals(qp, x0, u);
  if (!(phi.minCoeff() > 0.0)) fail(ErrorCode::kOutsideDomain, "barrier objective needs phi > 0");
  const Vector inv = phi.cwiseInverse();
  BarrierEvaluation ev;
  ev.value = 0.5 * u.dot(qp.h * u) - x0.dot(qp.f * u) - eta * (phi.array().log().sum() - d.dot(u));
  ev.gradient = qp.h * u - qp.f.transpose() * x0 + eta * (qp.g.transpose() * inv + d);
  const Matrix scaled = inv.asDiagonal() * qp.g;  // Phi^-1 G
  ev.hessian = qp.h + eta * scaled.transpose() * scaled;
  return ev;
}

BarrierSolution solve_barrier(const CondensedQp& qp, const BarrierConfig& cfg, const Vector& x0,
                              const std::optional<Vector>& warm_start) {
  cfg.validate();
  if (x0.size() != qp.state_dim) fail(ErrorCode::kDimensionMismatch, "solve_barrier: x0 dimension");
  const Vector d = recentering_vector(qp);
  const Vector c = qp.rhs(x0);
  for (Eigen::Index i = 0; i < qp.m(); ++i) {
    if (qp.is_parameter_row(i) && c(i) <= 0.0) fail(ErrorCode::kInfeasible, "x0 violates a parameter-only row");
  }

  BarrierSolution sol;
  std::optional<NewtonRun> run;
  if (warm_start && warm_start->size() == qp.n() && min_residual(qp, x0, *warm_start) >= cfg.feasibility_margin) {
    NewtonRun direct = newton(qp, cfg.eta, x0, *warm_start, d, cfg.newton_tol, cfg.max_newton_iters, true);
    if (direct.converged) run = std::move(direct);
  }
  if (!run) {
    Vector u0 = Vector::Zero(qp.n());
    if (min_residual(qp, x0, u0) < cfg.feasibility_margin) {
      const auto ball = lp::chebyshev_center(qp.g, c);
      if (ball.radius < cfg.feasibility_margin) fail(ErrorCode::kInfeasible, "no strictly interior input sequence");
      u0 = ball.center;
      sol.used_phase_one = true;
    }
    // Continuation from a weight at which the barrier dominates the cost.
    const Vector grad_q = qp.h * u0 - qp.f.transpose() * x0;
    double eta_k = std::max(cfg.eta, 10.0 * grad_q.norm() * min_residual(qp, x0, u0));
    int used = 0;
    while (eta_k > cfg.eta) {
      NewtonRun stage = newton(qp, eta_k, x0, u0, d, kStageTol, cfg.max_newton_iters, false);
      used += stage.iters;
      u0 = std::move(stage.u);
      eta_k = std::max(cfg.eta, eta_k * kStageShrink);
    }
    run = newton(qp, cfg.eta, x0, u0, d, cfg.newton_tol, cfg.max_newton_iters, true);
    run->iters += used;
  }

  sol.u_eta = std::move(run->u);
  sol.newton_iters = run->iters;
  sol.decrement = run->decrement;
  sol.converged = run->converged;
  sol.value_trace = std::move(run->trace);
  sol.phi = residuals(qp, x0, sol.u_eta);
  sol.jacobian = policy_jacobian(qp, cfg.eta, x0, sol.u_eta);
  return sol;
}

Matrix policy_jacobian(const CondensedQp& qp, double eta, const Vector& x0, const Vector& u_eta) {
  const Vector phi = residuals(qp, x0, u_eta);
  if (!(phi.minCoeff() > 0.0)) fail(ErrorCode::kOutsideDomain, "policy_jacobian needs an interior point");
  const Vector inv2 = phi.array().square().inverse();
  const Matrix weighted_g = inv2.asDiagonal() * qp.g;  // Phi^-2 G
  const Matrix lhs = qp.h + eta * qp.g.transpose() * weighted_g;
  const Matrix rhs = qp.f.transpose() + eta * weighted_g.transpose() * qp.p;
  return lhs.llt().solve(rhs);
}

Matrix policy_jacobian_woodbury(const CondensedQp& qp, double eta, const Vector& x0, const Vector& u_eta) {
  const Vector phi = residuals(qp, x0, u_eta);
  if (!(phi.minCoeff() > 0.0)) fail(ErrorCode::kOutsideDomain, "policy_jacobian needs an interior point");
  const auto& solver = qp.solver();
  const Matrix hinv_ft = solver.h_llt().solve(qp.f.transpose());
  Matrix inner = solver.a_hinv_at();
  inner.diagonal() += phi.array().square().matrix() / eta;
  const Matrix coupling = qp.g * hinv_ft - qp.p;
  return hinv_ft - solver.hinv_at() * inner.ldlt().solve(coupling);
}

ConvexCombination convex_combination_jacobian(const CondensedQp& qp, double eta, const Vector& x0,
                                              const Vector& u_eta) {
  const auto m = static_cast<std::size_t>(qp.m());
  if (qp.m() > linalg::kMaxSubsetDim) {
    fail(ErrorCode::kCombinatorialLimit, "convex_combination_jacobian enumerates 2^m subsets; m > 12");
  }
  const Vector phi = residuals(qp, x0, u_eta);
  if (!(phi.minCoeff() > 0.0)) fail(ErrorCode::kOutsideDomain, "convex_combination_jacobian needs phi > 0");
  const Vector lambda = phi.array().square().matrix() / eta;
  const Matrix& ghg = qp.solver().a_hinv_at();

  ConvexCombination out;
  out.jacobian = Matrix::Zero(qp.n(), qp.state_dim);
  double h = 0.0;
  for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << m); ++mask) {
    const ActiveSet sigma = ActiveSet::from_mask(mask, m);
    const Matrix sub = linalg::principal_submatrix(ghg, sigma);
    if (linalg::psd_submatrix_is_singular(sub)) continue;
    double h_sigma = linalg::determinant(sub);
    for (std::size_t i = 0; i < m; ++i) {
      if (!sigma.test(i)) h_sigma *= lambda(static_cast<Eigen::Index>(i));
    }
    h += h_sigma;
    out.terms.push_back({sigma, h_sigma, piece_gains(qp, sigma).gain});
  }
  for (auto& t : out.terms) {
    t.weight /= h;
    out.weight_sum += t.weight;
    out.jacobian += t.weight * t.gain;
  }
  return out;
}

Vector barrier_policy(const CondensedQp& qp, const BarrierConfig& cfg, const Vector& x0) {
  const auto sol = solve_barrier(qp, cfg, x0);
  return sol.u_eta.head(qp.input_dim);
}

Vector shift_plan(const Vector& u, Eigen::Index input_dim) {
  const auto n = u.size();
  if (input_dim < 1 || n % input_dim != 0) fail(ErrorCode::kDimensionMismatch, "shift_plan: plan length");
  Vector out(n);
  out.head(n - input_dim) = u.tail(n - input_dim);
  out.tail(input_dim) = u.tail(input_dim);
  return out;
}

}  // namespace bmpc
