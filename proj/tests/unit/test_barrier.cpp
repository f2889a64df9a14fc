#include <algorithm>
#include <cmath>

#include "../support.hpp"
#include "bmpc/barrier.hpp"
#include "bmpc/condense.hpp"
#include "bmpc/error.hpp"
#include "bmpc/explicit_mpc.hpp"
#include "bmpc/problem_io.hpp"
#include "bmpc/rollout.hpp"
#include "doctest.h"

using namespace bmpc;

namespace {

CondensedQp scalar_box_qp() {
  return CondensedQp::from_matrices(Matrix::Ones(1, 1), Matrix::Ones(1, 1), Matrix{{1.0}, {-1.0}}, Matrix::Zero(2, 1),
                                    Vector::Ones(2));
}

// Root of u - x + 2 eta u / (1 - u^2) on (-1, 1), the scalar barrier optimum.
double scalar_barrier_root(double eta, double x) {
  double lo = -1.0, hi = 1.0;
  for (int k = 0; k < 200; ++k) {
    const double mid = 0.5 * (lo + hi);
    (mid - x + 2.0 * eta * mid / (1.0 - mid * mid) > 0.0 ? hi : lo) = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace

TEST_SUITE("barrier") {
  TEST_CASE("recentering vector") {
    CHECK(recentering_vector(scalar_box_qp()).norm() == 0.0);
    // One-sided constraint u <= 2: d = -1/2.
    const auto one = CondensedQp::from_matrices(Matrix::Ones(1, 1), Matrix::Ones(1, 1), Matrix::Ones(1, 1),
                                                Matrix::Zero(1, 1), Vector::Constant(1, 2.0));
    CHECK(recentering_vector(one)(0) == doctest::Approx(-0.5));
    const auto qp = condense(double_integrator_spec());
    const auto ev = barrier_objective(qp, 0.7, Vector::Zero(2), Vector::Zero(qp.n()));
    CHECK(ev.gradient.norm() <= 1e-12);
    CHECK(solve_barrier(qp, BarrierConfig{}, Vector::Zero(2)).u_eta.norm() <= 1e-10);
  }

  TEST_CASE("scalar value and gradient") {
    const auto qp = scalar_box_qp();
    const auto ev = barrier_objective(qp, 0.5, Vector::Constant(1, 1.0), Vector::Constant(1, 0.5));
    const double expected = 0.125 - 0.5 - 0.5 * (std::log(0.5) + std::log(1.5));
    CHECK(ev.value == doctest::Approx(expected).epsilon(1e-14));
    CHECK(ev.gradient(0) == doctest::Approx(0.5 - 1.0 + 0.5 * (1.0 / 0.5 - 1.0 / 1.5)).epsilon(1e-14));
    CHECK(ev.hessian(0, 0) == doctest::Approx(1.0 + 0.5 * (4.0 + 1.0 / 2.25)).epsilon(1e-14));
    CHECK_THROWS_AS(barrier_objective(qp, 0.5, Vector::Constant(1, 1.0), Vector::Constant(1, 1.0)), Error);
  }

  TEST_CASE("scalar optimum against bisection") {
    const auto qp = scalar_box_qp();
    for (double eta : {1e-4, 1e-2, 0.5, 10.0}) {
      for (double x : {-5.0, -1.0, 0.3, 1.0, 2.0}) {
        BarrierConfig cfg;
        cfg.eta = eta;
        const auto sol = solve_barrier(qp, cfg, Vector::Constant(1, x));
        const double u = scalar_barrier_root(eta, x);
        CHECK(sol.converged);
        CHECK(sol.u_eta(0) == doctest::Approx(u).epsilon(1e-9));
        const double slope = 1.0 / (1.0 + 2.0 * eta * (1.0 + u * u) / ((1.0 - u * u) * (1.0 - u * u)));
        CHECK(sol.jacobian(0, 0) == doctest::Approx(slope).epsilon(1e-7));
      }
    }
  }

  TEST_CASE("scalar Jacobian at the origin is a convex combination of piece gains") {
    const auto qp = scalar_box_qp();
    BarrierConfig cfg;
    cfg.eta = 0.5;
    const auto sol = solve_barrier(qp, cfg, Vector::Zero(1));
    CHECK(sol.jacobian(0, 0) == doctest::Approx(0.5));
    const auto cc = convex_combination_jacobian(qp, 0.5, Vector::Zero(1), sol.u_eta);
    CHECK(cc.jacobian(0, 0) == doctest::Approx(0.5));
    CHECK(cc.weight_sum == doctest::Approx(1.0));
    REQUIRE(cc.terms.size() == 3);
    for (const auto& t : cc.terms) {
      if (t.sigma.empty()) {
        CHECK(t.weight == doctest::Approx(4.0 / 8.0));
        CHECK(t.gain(0, 0) == doctest::Approx(1.0));
      } else {
        CHECK(t.sigma.count() == 1);
        CHECK(t.weight == doctest::Approx(2.0 / 8.0));
        CHECK(t.gain(0, 0) == doctest::Approx(0.0));
      }
    }
  }

  TEST_CASE("vanishing weight recovers the exact MPC input") {
    const auto spec = double_integrator_spec();
    const auto qp = condense(spec);
    BarrierConfig cfg;
    cfg.eta = 1e-6;
    for (const auto& x0 : sample_initial_states(qp, spec.state_set, 20, 5)) {
      const double u_eta = solve_barrier(qp, cfg, x0).u_eta(0);
      CHECK(std::abs(u_eta - solve_qp(qp, x0).u_star(0)) <= 1e-2);
    }
  }

  TEST_CASE("odd symmetry on a symmetric problem") {
    const auto spec = double_integrator_spec();
    const auto qp = condense(spec);
    for (double eta : {1e-3, 0.1, 10.0}) {
      BarrierConfig cfg;
      cfg.eta = eta;
      for (const auto& x0 : sample_initial_states(qp, spec.state_set, 10, 6)) {
        const Vector a = barrier_policy(qp, cfg, x0), b = barrier_policy(qp, cfg, -x0);
        CHECK((a + b).norm() <= 1e-8);
      }
    }
  }

  TEST_CASE("gradient and Hessian against finite differences") {
    const auto spec = double_integrator_spec();
    const auto qp = condense(spec);
    Rng rng(12, 1);
    for (const auto& x0 : sample_initial_states(qp, spec.state_set, 10, 7)) {
      BarrierConfig cfg;
      cfg.eta = 0.3;
      const Vector u = solve_barrier(qp, cfg, x0).u_eta + 1e-3 * rng.unit_vector(qp.n());
      const auto ev = barrier_objective(qp, cfg.eta, x0, u);
      const double h = 1e-6;
      Vector grad(qp.n());
      Matrix hess(qp.n(), qp.n());
      for (Eigen::Index j = 0; j < qp.n(); ++j) {
        Vector e = Vector::Zero(qp.n());
        e(j) = h;
        const auto plus = barrier_objective(qp, cfg.eta, x0, u + e), minus = barrier_objective(qp, cfg.eta, x0, u - e);
        grad(j) = (plus.value - minus.value) / (2 * h);
        hess.col(j) = (plus.gradient - minus.gradient) / (2 * h);
      }
      CHECK((grad - ev.gradient).norm() <= 1e-5 * (1.0 + ev.gradient.norm()));
      CHECK((hess - ev.hessian).norm() <= 1e-6 * ev.hessian.norm());
    }
  }

  TEST_CASE("Jacobian forms agree with each other and with finite differences") {
    const auto spec = double_integrator_spec();
    const auto qp = condense(spec);
    for (double eta : {1e-3, 1.0, 100.0}) {
      BarrierConfig cfg;
      cfg.eta = eta;
      cfg.newton_tol = 1e-14;
      for (const auto& x0 : sample_initial_states(qp, spec.state_set, 8, 8)) {
        const auto sol = solve_barrier(qp, cfg, x0);
        const Matrix direct = policy_jacobian(qp, eta, x0, sol.u_eta);
        const Matrix wood = policy_jacobian_woodbury(qp, eta, x0, sol.u_eta);
        CHECK((direct - wood).norm() <= 1e-8 * direct.norm());
        CHECK((direct - sol.jacobian).norm() <= 1e-12 * direct.norm());
        Matrix fd(qp.n(), 2);
        for (Eigen::Index j = 0; j < 2; ++j) {
          Vector e = Vector::Zero(2);
          e(j) = 1e-6;
          fd.col(j) = (solve_barrier(qp, cfg, x0 + e, sol.u_eta).u_eta - solve_barrier(qp, cfg, x0 - e, sol.u_eta).u_eta) / 2e-6;
        }
        CHECK((fd - direct).norm() <= 1e-4 * direct.norm());
      }
    }
  }

  TEST_CASE("Newton iterates decrease the objective and stay interior") {
    const auto qp = condense(double_integrator_spec());
    BarrierConfig cfg;
    cfg.eta = 1e-4;
    const auto sol = solve_barrier(qp, cfg, Vector{{-6.0, 2.0}});
    CHECK(sol.converged);
    CHECK(sol.phi.minCoeff() > 0.0);
    CHECK(sol.decrement <= cfg.newton_tol);
    for (std::size_t i = 1; i < sol.value_trace.size(); ++i)
      CHECK(sol.value_trace[i] <= sol.value_trace[i - 1] + 1e-12 * (1.0 + std::abs(sol.value_trace[i - 1])));
  }

  TEST_CASE("errors") {
    const auto qp = condense(double_integrator_spec());
    BarrierConfig bad;
    bad.eta = -1.0;
    CHECK_THROWS_AS(solve_barrier(qp, bad, Vector::Zero(2)), Error);
    try {
      solve_barrier(qp, BarrierConfig{}, Vector{{10.0, 9.0}});
      FAIL("infeasible state accepted");
    } catch (const Error& e) {
      CHECK_FALSE(e.is_config_error());
    }
    CHECK(shift_plan(Vector{{1.0, 2.0, 3.0}}, 1) == Vector{{2.0, 3.0, 3.0}});
    CHECK_THROWS_AS(shift_plan(Vector{{1.0, 2.0, 3.0}}, 2), Error);
  }
}
