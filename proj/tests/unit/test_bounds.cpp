#include <algorithm>
#include <cmath>

#include "../support.hpp"
#include "bmpc/barrier.hpp"
#include "bmpc/bounds.hpp"
#include "bmpc/condense.hpp"
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

}  // namespace

TEST_SUITE("bounds") {
  TEST_CASE("self-concordance parameter") {
    CHECK(self_concordance_parameter(scalar_box_qp(), 1.0) == doctest::Approx(40.0));
    // u <= 2 alone: m = 1, |d| = 1/2, R = 4  ->  20 (1 + 16/4) = 100.
    const auto one = CondensedQp::from_matrices(Matrix::Ones(1, 1), Matrix::Ones(1, 1), Matrix::Ones(1, 1),
                                                Matrix::Zero(1, 1), Vector::Constant(1, 2.0));
    CHECK(self_concordance_parameter(one, 4.0) == doctest::Approx(100.0));
  }

  TEST_CASE("residual floor, scalar case") {
    QpGeometry geo;
    geo.inner_radius = 1.0;
    geo.outer_radius = 1.0;
    geo.lipschitz = 2.0;
    // eta = 1: min(1/2, 1 / (150 (40 + 5))) = 1/6750.
    CHECK(residual_lower_bound(1.0, 40.0, geo) == doctest::Approx(1.0 / 6750.0));
    // Large eta: the second term tends to 1/(150 nu).
    CHECK(residual_lower_bound(1e8, 40.0, geo) == doctest::Approx(1.0 / 6000.0).epsilon(1e-6));
    // Small eta: the floor is O(eta^2).
    CHECK(residual_lower_bound(1e-3, 40.0, geo) == doctest::Approx(1e-6 / (150.0 * (40e-6 + 5.0))));

    const auto qp = scalar_box_qp();
    const auto g = geometry(qp, Vector::Constant(1, 0.5));
    const double nu = self_concordance_parameter(qp, g.outer_radius);
    for (double eta : {1e-4, 1e-2, 1.0, 100.0}) {
      for (double x : {-3.0, 0.0, 0.5, 3.0}) {
        BarrierConfig cfg;
        cfg.eta = eta;
        const auto geo_x = geometry(qp, Vector::Constant(1, x));
        const auto sol = solve_barrier(qp, cfg, Vector::Constant(1, x));
        CHECK(sol.phi.minCoeff() >= residual_lower_bound(eta, nu, geo_x));
      }
    }
  }

  TEST_CASE("scalar second derivative of the policy") {
    const auto qp = scalar_box_qp();
    const auto sigmas = sampled_sigma_set(qp, {});
    CHECK(sigmas.size() == 3);  // {}, {1}, {2}; the full set is singular
    CHECK(jacobian_norm_bound(qp, sigmas) == doctest::Approx(1.0));
    for (double eta : {0.05, 0.5, 2.0}) {
      for (double x : {-2.0, -0.4, 0.3, 1.5}) {
        BarrierConfig cfg;
        cfg.eta = eta;
        cfg.newton_tol = 1e-14;
        const double u = solve_barrier(qp, cfg, Vector::Constant(1, x)).u_eta(0);
        const double s = 1.0 - u * u;
        const double g1 = 1.0 + 2.0 * eta * (1.0 + u * u) / (s * s);
        const double g2 = 4.0 * eta * u * (3.0 + u * u) / (s * s * s);
        const double expected = std::abs(g2 / (g1 * g1 * g1));
        HessianProbe probe;
        probe.directions = 2;
        const auto rep = hessian_norm_report(qp, cfg, Vector::Constant(1, x), sigmas, probe);
        CHECK(rep.hess_actual == doctest::Approx(expected).epsilon(1e-4).scale(1e-6));
        CHECK(rep.holds());
      }
    }
  }

  TEST_CASE("suboptimality bound on the double integrator") {
    const auto spec = double_integrator_spec();
    const auto qp = condense(spec);
    for (const auto& x0 : sample_initial_states(qp, spec.state_set, 10, 13)) {
      for (double eta : {1e-4, 1e-2, 1.0}) {
        BarrierConfig cfg;
        cfg.eta = eta;
        const auto rep = suboptimality_report(qp, cfg, x0);
        CHECK(rep.holds());
        CHECK(rep.gap_actual <= rep.gap_bound);
      }
    }
  }

  TEST_CASE("bounds report is consistent") {
    const auto qp = condense(double_integrator_spec());
    const Vector x0{{-6.0, 2.0}};
    const auto sigmas = sampled_sigma_set(qp, {solve_qp(qp, x0).sigma});
    const auto rep = bounds_report(qp, 0.1, x0, sigmas);
    CHECK(rep.sigma_count == sigmas.size());
    CHECK(rep.nu == doctest::Approx(self_concordance_parameter(qp, rep.geometry.outer_radius)));
    CHECK(rep.res_lb == doctest::Approx(residual_lower_bound(0.1, rep.nu, rep.geometry)));
    CHECK(rep.lipschitz_jacobian == doctest::Approx(jacobian_norm_bound(qp, sigmas)));
    CHECK(rep.hessian_constant == doctest::Approx(hessian_constant(qp, sigmas)));
    CHECK(rep.hess_ub > 0.0);
  }

  TEST_CASE("hit-and-run stays inside and the sampling checks hold") {
    const auto qp = condense(double_integrator_spec());
    const Vector x0{{-6.0, 2.0}};
    Rng rng(14, 1);
    BarrierConfig cfg;
    const Vector start = solve_barrier(qp, cfg, x0).u_eta;
    const auto pts = hit_and_run(qp, x0, start, 200, rng);
    CHECK(pts.size() == 200);
    for (const auto& u : pts) CHECK(residuals(qp, x0, u).minCoeff() > 0.0);
    CHECK(barrier_hessian_floor_check(qp, x0, 100, 1).passed());
    CHECK(self_concordance_check(qp, x0, 100, 2).passed());
    CHECK(barrier_hessian_floor_check(scalar_box_qp(), Vector::Constant(1, 0.2), 100, 3).passed());
  }
}
