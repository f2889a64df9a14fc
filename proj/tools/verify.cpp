#include "verify.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <sstream>

#include "bmpc/barrier.hpp"
#include "bmpc/bounds.hpp"
#include "bmpc/csv.hpp"
#include "bmpc/error.hpp"
#include "bmpc/explicit_mpc.hpp"
#include "bmpc/linalg.hpp"
#include "bmpc/lp.hpp"
#include "bmpc/rng.hpp"
#include "bmpc/rollout.hpp"

namespace bmpc::cli {

namespace {

std::string fmt(double v) { return csv::format(v); }

std::string vec(const Vector& v) {
  std::string s = "(";
  for (Eigen::Index i = 0; i < v.size(); ++i) s += (i ? "," : "") + fmt(v(i));
  return s + ")";
}

Matrix random_matrix(Rng& rng, Eigen::Index r, Eigen::Index c) {
  Matrix m(r, c);
  for (Eigen::Index i = 0; i < r; ++i)
    for (Eigen::Index j = 0; j < c; ++j) m(i, j) = rng.normal();
  return m;
}

Matrix random_psd(Rng& rng, Eigen::Index n) {
  const Eigen::Index rank = 1 + static_cast<Eigen::Index>(rng.uniform() * static_cast<double>(n));
  const Matrix b = random_matrix(rng, n, std::min(rank, n));
  return b * b.transpose();
}

// Strictly feasible states on a grid over X.
std::vector<Vector> feasible_grid(const MpcSpec& spec, const CondensedQp& qp, int per_dim, double scale) {
  const auto& x = spec.state_set;
  Vector lo(x.dim()), hi(x.dim());
  for (Eigen::Index i = 0; i < x.dim(); ++i) {
    Vector c = Vector::Zero(x.dim());
    c(i) = 1.0;
    lo(i) = lp::solve_lp(c, x.a(), scale * x.b()).x(i);
    hi(i) = lp::solve_lp(-c, x.a(), scale * x.b()).x(i);
  }
  const auto grid = StateGrid::uniform(lo, hi, per_dim);
  std::vector<Vector> out;
  for (std::size_t k = 0; k < grid.size(); ++k) {
    const Vector p = grid.point(k);
    const Vector c = qp.rhs(p);
    bool ok = true;
    for (Eigen::Index i = 0; i < qp.m() && ok; ++i) ok = !qp.is_parameter_row(i) || c(i) > 0.0;
    if (ok && lp::chebyshev_center(qp.g, c).radius > 1e-6) out.push_back(p);
  }
  return out;
}

struct Tally {
  std::size_t count = 0;
  std::size_t violations = 0;
  double worst = 0.0;
  std::string witness;

  void add(double value, double limit, const std::string& where) {
    ++count;
    if (value > worst || (value > limit && witness.empty())) {
      worst = std::max(worst, value);
    }
    if (value > limit) {
      if (violations == 0) witness = where + " value=" + fmt(value) + " limit=" + fmt(limit);
      ++violations;
    }
  }

  CheckResult result(const std::string& name, const std::string& what) const {
    CheckResult r{name, violations == 0, false, ""};
    if (violations == 0) {
      r.detail = std::to_string(count) + " cases, worst " + what + " " + fmt(worst);
    } else {
      r.detail = std::to_string(violations) + "/" + std::to_string(count) + " violations; first: " + witness;
    }
    return r;
  }
};

CheckResult guarded(const std::string& name, const std::function<CheckResult()>& body) {
  try {
    return body();
  } catch (const std::exception& e) {
    return CheckResult{name, false, false, std::string("exception: ") + e.what()};
  }
}

}  // namespace

std::vector<CheckResult> run_verify_suite(const MpcSpec& spec, const VerifyOptions& options) {
  std::vector<CheckResult> out;
  const CondensedQp qp = condense(spec);
  const std::vector<Vector> states = feasible_grid(spec, qp, options.grid, 1.0);
  const std::vector<double> etas{1e-3, 1e-1, 10.0};

  out.push_back(guarded("adjugate identity adj(M) M = det(M) I", [&] {
    Rng rng(options.seed, 1);
    Tally t;
    for (int k = 0; k < 100; ++k) {
      const auto n = 1 + static_cast<Eigen::Index>(rng.uniform() * 8);
      Matrix m = random_matrix(rng, n, n);
      if (k % 4 == 0 && n > 1) m.col(n - 1) = m.col(0);  // singular cases
      const Matrix lhs = linalg::adjugate(m) * m;
      const double det = m.fullPivLu().determinant();
      const double err = (lhs - det * Matrix::Identity(n, n)).cwiseAbs().maxCoeff() / (1.0 + std::abs(det));
      t.add(err, 1e-9, "n=" + std::to_string(n) + " case " + std::to_string(k));
    }
    return t.result("adjugate identity adj(M) M = det(M) I", "scaled error");
  }));

  out.push_back(guarded("det(A + Diag(lambda)) subset expansion", [&] {
    Rng rng(options.seed, 2);
    Tally t;
    for (int k = 0; k < 100; ++k) {
      const auto n = 1 + static_cast<Eigen::Index>(rng.uniform() * 8);
      const Matrix a = random_psd(rng, n);
      Vector lam(n);
      for (Eigen::Index i = 0; i < n; ++i) lam(i) = rng.uniform(0.1, 3.0);
      const double direct = (a + Matrix(lam.asDiagonal())).fullPivLu().determinant();
      t.add(std::abs(linalg::det_plus_diagonal(a, lam) - direct) / std::abs(direct), 1e-9,
            "n=" + std::to_string(n) + " case " + std::to_string(k));
    }
    return t.result("det(A + Diag(lambda)) subset expansion", "relative error");
  }));

  out.push_back(guarded("(A + Diag(lambda))^-1 decomposition", [&] {
    Rng rng(options.seed, 3);
    Tally t;
    for (int k = 0; k < 60; ++k) {
      const auto n = 1 + static_cast<Eigen::Index>(rng.uniform() * 7);
      const Matrix a = random_psd(rng, n);
      Vector lam(n);
      for (Eigen::Index i = 0; i < n; ++i) lam(i) = rng.uniform(0.1, 3.0);
      const Matrix sum = a + Matrix(lam.asDiagonal());
      const auto dec = linalg::decompose_inverse_plus_diagonal(a, lam);
      const double err = (sum * dec.reconstruct() - Matrix::Identity(n, n)).cwiseAbs().maxCoeff();
      t.add(err, 1e-8, "n=" + std::to_string(n) + " case " + std::to_string(k));
    }
    return t.result("(A + Diag(lambda))^-1 decomposition", "entry error");
  }));

  out.push_back(guarded("Woodbury identity", [&] {
    Rng rng(options.seed, 4);
    Tally t;
    for (int k = 0; k < 30; ++k) {
      const Matrix a = random_matrix(rng, 5, 5) + 6.0 * Matrix::Identity(5, 5);
      const Matrix u = random_matrix(rng, 5, 2), v = random_matrix(rng, 2, 5);
      const Matrix c = random_matrix(rng, 2, 2) + 3.0 * Matrix::Identity(2, 2);
      const Matrix direct = (a + u * c * v).inverse();
      t.add((linalg::woodbury_inverse(a, u, c, v) - direct).norm() / direct.norm(), 1e-10,
            "case " + std::to_string(k));
    }
    return t.result("Woodbury identity", "relative error");
  }));

  out.push_back(guarded("prediction matrices reproduce the rollout", [&] {
    Rng rng(options.seed, 5);
    const auto pm = build_prediction_matrices(spec.sys, spec.horizon);
    const auto dx = spec.sys.state_dim(), du = spec.sys.input_dim();
    Tally t;
    for (int k = 0; k < 20; ++k) {
      const Vector x0 = rng.normal_vector(dx), u = rng.normal_vector(du * spec.horizon);
      Vector x = x0, stacked(dx * spec.horizon);
      for (int s = 0; s < spec.horizon; ++s) {
        x = spec.sys.step(x, u.segment(s * du, du));
        stacked.segment(s * dx, dx) = x;
      }
      t.add((pm.a_hat * x0 + pm.b_hat * u - stacked).cwiseAbs().maxCoeff() / (1.0 + stacked.norm()), 1e-12,
            "x0=" + vec(x0));
    }
    return t.result("prediction matrices reproduce the rollout", "error");
  }));

  out.push_back(guarded("condensed cost differs from stage cost by a function of x0", [&] {
    Rng rng(options.seed, 6);
    const auto dx = spec.sys.state_dim(), du = spec.sys.input_dim();
    auto stage_cost = [&](const Vector& x0, const Vector& u) {
      double c = 0.0;
      Vector x = x0;
      for (int s = 0; s < spec.horizon; ++s) {
        const Vector us = u.segment(s * du, du);
        c += us.dot(spec.r[static_cast<std::size_t>(s)] * us);
        x = spec.sys.step(x, us);
        c += x.dot(spec.q[static_cast<std::size_t>(s)] * x);
      }
      return c;
    };
    Tally t;
    for (int k = 0; k < 20; ++k) {
      const Vector x0 = rng.normal_vector(dx);
      const Vector u1 = rng.normal_vector(qp.n()), u2 = rng.normal_vector(qp.n());
      const double d_stage = stage_cost(x0, u1) - stage_cost(x0, u2);
      const double d_qp = qp.objective(x0, u1) - qp.objective(x0, u2);
      t.add(std::abs(d_stage - d_qp) / (1.0 + std::abs(d_stage)), 1e-10, "x0=" + vec(x0));
    }
    return t.result("condensed cost differs from stage cost by a function of x0", "relative error");
  }));

  out.push_back(guarded("exact QP: KKT residual and eval_explicit agreement", [&] {
    Tally t;
    PieceCache cache;
    for (const auto& x0 : states) {
      const auto sol = solve_qp(qp, x0);
      const double kkt = kkt_residual(qp, x0, sol).max() / (1.0 + sol.u_star.norm());
      const auto ev = eval_explicit(qp, x0, cache);
      const double diff = (ev.u - sol.u_star).norm();
      t.add(std::max(kkt, diff), 1e-8, "x0=" + vec(x0));
    }
    return t.result("exact QP: KKT residual and eval_explicit agreement", "residual");
  }));

  out.push_back(guarded("recentering: grad V^eta(0, 0) = 0", [&] {
    Tally t;
    const Vector zero = Vector::Zero(qp.state_dim), u0 = Vector::Zero(qp.n());
    for (double eta : etas) {
      t.add(barrier_objective(qp, eta, zero, u0).gradient.norm(), 1e-12 * (1.0 + eta), "eta=" + fmt(eta));
    }
    return t.result("recentering: grad V^eta(0, 0) = 0", "gradient norm");
  }));

  out.push_back(guarded("barrier gradient and Hessian vs finite differences", [&] {
    Rng rng(options.seed, 8);
    Tally t;
    for (std::size_t k = 0; k < std::min<std::size_t>(states.size(), 10); ++k) {
      const Vector& x0 = states[k * states.size() / std::min<std::size_t>(states.size(), 10)];
      const double eta = 0.1;
      const auto pts = hit_and_run(qp, x0, lp::chebyshev_center(qp.g, qp.rhs(x0)).center, 1, rng);
      const Vector& u = pts.front();
      const auto ev = barrier_objective(qp, eta, x0, u);
      const double hstep = 1e-6 * std::max(1e-3, residuals(qp, x0, u).minCoeff());
      Vector g_fd(qp.n());
      Matrix h_fd(qp.n(), qp.n());
      for (Eigen::Index i = 0; i < qp.n(); ++i) {
        Vector e = Vector::Zero(qp.n());
        e(i) = hstep;
        g_fd(i) = (barrier_objective(qp, eta, x0, u + e).value - barrier_objective(qp, eta, x0, u - e).value) /
                  (2 * hstep);
        h_fd.col(i) = (barrier_objective(qp, eta, x0, u + e).gradient -
                       barrier_objective(qp, eta, x0, u - e).gradient) / (2 * hstep);
      }
      t.add((g_fd - ev.gradient).norm() / std::max(1.0, ev.gradient.norm()), 1e-6, "x0=" + vec(x0));
      t.add((h_fd - ev.hessian).norm() / ev.hessian.norm(), 1e-5, "x0=" + vec(x0) + " (Hessian)");
    }
    return t.result("barrier gradient and Hessian vs finite differences", "relative error");
  }));

  out.push_back(guarded("policy Jacobian vs central differences", [&] {
    Tally t;
    const double h = 1e-5;
    for (double eta : etas) {
      BarrierConfig cfg;
      cfg.eta = eta;
      cfg.newton_tol = 1e-14;
      for (const auto& x0 : states) {
        const auto sol = solve_barrier(qp, cfg, x0);
        if (sol.phi.minCoeff() < 1e-3) continue;
        Matrix fd(qp.n(), qp.state_dim);
        for (Eigen::Index j = 0; j < qp.state_dim; ++j) {
          Vector e = Vector::Zero(qp.state_dim);
          e(j) = h;
          fd.col(j) = (solve_barrier(qp, cfg, x0 + e, sol.u_eta).u_eta -
                       solve_barrier(qp, cfg, x0 - e, sol.u_eta).u_eta) / (2 * h);
        }
        const double wood = (policy_jacobian_woodbury(qp, eta, x0, sol.u_eta) - sol.jacobian).norm() /
                            (1.0 + sol.jacobian.norm());
        t.add(std::max((fd - sol.jacobian).norm() / std::max(sol.jacobian.norm(), 1e-3), wood * 1e5), 1e-4,
              "eta=" + fmt(eta) + " x0=" + vec(x0));
      }
    }
    return t.result("policy Jacobian vs central differences", "relative error");
  }));

  out.push_back(guarded("convex-combination identity (T=2)", [&] {
    MpcSpec small = spec;
    small.horizon = 2;
    small.q.resize(2, spec.q.back());
    small.r.resize(2, spec.r.back());
    CondensedQp qp2 = condense(small);
    if (qp2.m() > linalg::kMaxSubsetDim) {
      small.horizon = 1;
      small.q.resize(1);
      small.r.resize(1);
      qp2 = condense(small);
    }
    if (qp2.m() > linalg::kMaxSubsetDim) {
      return CheckResult{"convex-combination identity (T=2)", true, true, "m > 12 even at T=1"};
    }
    Tally t;
    for (const auto& x0 : feasible_grid(small, qp2, 6, 0.9)) {
      for (double eta : etas) {
        BarrierConfig cfg;
        cfg.eta = eta;
        const auto sol = solve_barrier(qp2, cfg, x0);
        const auto cc = convex_combination_jacobian(qp2, eta, x0, sol.u_eta);
        double min_w = 0.0;
        for (const auto& term : cc.terms) min_w = std::min(min_w, term.weight);
        const double err = (cc.jacobian - sol.jacobian).norm() / (1.0 + sol.jacobian.norm());
        t.add(std::max({err * 1e-4 / 1e-8, std::abs(cc.weight_sum - 1.0) * 1e-4 / 1e-12, -min_w * 1e12}), 1e-4,
              "eta=" + fmt(eta) + " x0=" + vec(x0));
      }
    }
    return t.result("convex-combination identity (T=2)", "scaled error");
  }));

  std::vector<ActiveSet> sigmas;
  {
    Vector lo(qp.state_dim), hi(qp.state_dim);
    const auto& x = spec.state_set;
    for (Eigen::Index i = 0; i < x.dim(); ++i) {
      Vector c = Vector::Zero(x.dim());
      c(i) = 1.0;
      lo(i) = lp::solve_lp(c, x.a(), x.b()).x(i);
      hi(i) = lp::solve_lp(-c, x.a(), x.b()).x(i);
    }
    const auto census = enumerate_pieces(qp, StateGrid::uniform(lo, hi, std::max(options.grid, 20)), options.jobs);
    std::vector<ActiveSet> seeds;
    for (const auto& kv : census.counts) seeds.push_back(kv.first);
    sigmas = sampled_sigma_set(qp, seeds);
  }

  out.push_back(guarded("Jacobian norm within the hull of piece gains", [&] {
    const double lj = jacobian_norm_bound(qp, sigmas);
    Tally t;
    for (double eta : etas) {
      BarrierConfig cfg;
      cfg.eta = eta;
      for (const auto& x0 : states) {
        const auto sol = solve_barrier(qp, cfg, x0);
        t.add(linalg::spectral_norm(sol.jacobian), lj + 1e-9, "eta=" + fmt(eta) + " x0=" + vec(x0));
      }
    }
    return t.result("Jacobian norm within the hull of piece gains", "norm");
  }));

  out.push_back(guarded("residual floor and suboptimality inequality", [&] {
    Tally t;
    for (double eta : {1e-4, 1e-3, 1e-2, 1e-1, 1.0, 10.0}) {
      BarrierConfig cfg;
      cfg.eta = eta;
      for (const auto& x0 : states) {
        const auto geo = geometry(qp, x0);
        const double nu = self_concordance_parameter(qp, geo.outer_radius);
        const double lb = residual_lower_bound(eta, nu, geo);
        const auto sol = solve_barrier(qp, cfg, x0);
        const auto opt = solve_qp(qp, x0);
        const auto sub = suboptimality_report(qp, eta, sol.u_eta, opt.u_star, nu);
        const std::string where = "eta=" + fmt(eta) + " x0=" + vec(x0);
        t.add(lb / sol.phi.minCoeff(), 1.0, where + " (residual floor)");
        t.add(sub.half_alpha_gap_sq / sub.eta_nu, 1.0, where + " (suboptimality)");
      }
    }
    return t.result("residual floor and suboptimality inequality", "bound ratio");
  }));

  out.push_back(guarded("Hessian-tensor bound", [&] {
    Tally t;
    for (double eta : etas) {
      BarrierConfig cfg;
      cfg.eta = eta;
      for (std::size_t k = 0; k < states.size(); k += std::max<std::size_t>(1, states.size() / 8)) {
        HessianProbe probe;
        probe.directions = 8;
        probe.seed = options.seed;
        const auto rep = hessian_norm_report(qp, cfg, states[k], sigmas, probe);
        t.add(rep.hess_actual / rep.hess_bound, 1.0, "eta=" + fmt(eta) + " x0=" + vec(states[k]));
      }
    }
    return t.result("Hessian-tensor bound", "ratio actual/bound");
  }));

  out.push_back(guarded("barrier Hessian floor and nu inner-product checks", [&] {
    Tally t;
    for (std::size_t k = 0; k < states.size(); k += std::max<std::size_t>(1, states.size() / 4)) {
      const auto floor = barrier_hessian_floor_check(qp, states[k], 100, options.seed);
      const auto nu = self_concordance_check(qp, states[k], 100, options.seed);
      t.add(floor.bound / floor.worst, 1.0, "x0=" + vec(states[k]) + " (Hessian floor)");
      t.add(nu.worst / nu.bound, 1.0, "x0=" + vec(states[k]) + " (nu)");
    }
    return t.result("barrier Hessian floor and nu inner-product checks", "ratio");
  }));

  out.push_back(guarded("barrier rollouts stay strictly feasible", [&] {
    auto shared = std::make_shared<const CondensedQp>(qp);
    BarrierConfig cfg;
    cfg.eta = 0.1;
    const Policy pol = make_barrier_policy(shared, cfg);
    const auto starts = sample_initial_states(qp, spec.state_set, 10, options.seed);
    Tally t;
    for (const auto& x0 : starts) {
      const auto tr = closed_loop(spec, pol, x0, 20);
      std::size_t bad = tr.halted ? 1 : 0;
      for (bool f : tr.feasible) bad += f ? 0 : 1;
      // Replayed inputs reproduce the recorded states.
      double replay = 0.0;
      Vector x = x0;
      for (std::size_t s = 0; s < tr.steps(); ++s) {
        x = spec.sys.step(x, tr.inputs[s]);
        replay = std::max(replay, (x - tr.states[s + 1]).norm());
      }
      t.add(static_cast<double>(bad) + (replay > 1e-12 ? 1.0 : 0.0), 0.0, "x0=" + vec(x0));
    }
    return t.result("barrier rollouts stay strictly feasible", "violations");
  }));

  return out;
}

}  // namespace bmpc::cli
