#include "bmpc/bounds.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include "bmpc/error.hpp"
#include "bmpc/explicit_mpc.hpp"
#include "bmpc/lp.hpp"

namespace bmpc {

namespace {

struct Chord {
  double lo = 0.0;
  double hi = 0.0;
};

// {t : G (u + t v) <= c} over rows that depend on u.
Chord chord(const CondensedQp& qp, const Vector& c, const Vector& u, const Vector& v) {
  const Vector slack = c - qp.g * u;
  const Vector gv = qp.g * v;
  Chord ch{-std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity()};
  for (Eigen::Index i = 0; i < qp.m(); ++i) {
    if (qp.is_parameter_row(i)) continue;
    if (gv(i) > 0.0) ch.hi = std::min(ch.hi, slack(i) / gv(i));
    if (gv(i) < 0.0) ch.lo = std::max(ch.lo, slack(i) / gv(i));
  }
  if (!std::isfinite(ch.lo) || !std::isfinite(ch.hi)) fail(ErrorCode::kInvalidArgument, "feasible set is unbounded");
  return ch;
}

Vector interior_start(const CondensedQp& qp, const Vector& x0) {
  const auto ball = lp::chebyshev_center(qp.g, qp.rhs(x0));
  if (!(ball.radius > 0.0)) fail(ErrorCode::kInfeasible, "no interior point at x0");
  return ball.center;
}

// Interior samples, half of them moved most of the way to the boundary.
std::vector<Vector> probe_points(const CondensedQp& qp, const Vector& x0, std::size_t count, Rng& rng) {
  const Vector c = qp.rhs(x0);
  auto pts = hit_and_run(qp, x0, interior_start(qp, x0), count, rng);
  for (std::size_t k = 1; k < pts.size(); k += 2) {
    const Vector v = rng.unit_vector(qp.n());
    const auto ch = chord(qp, c, pts[k], v);
    const double frac = 1.0 - std::pow(10.0, -rng.uniform(1.0, 8.0));
    pts[k] += frac * ch.hi * v;
  }
  return pts;
}

}  // namespace

double self_concordance_parameter(const CondensedQp& qp, double outer_radius) {
  const double dn = recentering_vector(qp).norm();
  return 20.0 * (static_cast<double>(qp.m()) + outer_radius * outer_radius * dn * dn);
}

double residual_lower_bound(double eta, double nu, const QpGeometry& geo) {
  const double r2 = geo.outer_radius * geo.outer_radius;
  const double lv2 = geo.lipschitz * geo.lipschitz;
  const double second = geo.inner_radius * eta * eta / (150.0 * (nu * eta * eta + r2 * (lv2 + 1.0)));
  return std::min(0.5 * eta, second);
}

SuboptimalityReport suboptimality_report(const CondensedQp& qp, double eta, const Vector& u_eta, const Vector& u_star,
                                         double nu) {
  const double alpha = linalg::min_eigenvalue(qp.h);
  SuboptimalityReport rep;
  rep.gap_actual = (u_eta - u_star).norm();
  rep.gap_bound = std::sqrt(2.0 * eta * nu / alpha);
  rep.half_alpha_gap_sq = 0.5 * alpha * rep.gap_actual * rep.gap_actual;
  rep.eta_nu = eta * nu;
  return rep;
}

SuboptimalityReport suboptimality_report(const CondensedQp& qp, const BarrierConfig& cfg, const Vector& x0) {
  const auto geo = geometry(qp, x0);
  const double nu = self_concordance_parameter(qp, geo.outer_radius);
  const auto bar = solve_barrier(qp, cfg, x0);
  if (!bar.converged) fail(ErrorCode::kNotConverged, "barrier solve did not converge");
  const auto opt = solve_qp(qp, x0);
  return suboptimality_report(qp, cfg.eta, bar.u_eta, opt.u_star, nu);
}

std::vector<ActiveSet> sampled_sigma_set(const CondensedQp& qp, const std::vector<ActiveSet>& seeds, int max_size) {
  const auto m = static_cast<std::size_t>(qp.m());
  std::set<ActiveSet> all(seeds.begin(), seeds.end());
  all.insert(ActiveSet(m));
  if (max_size >= 1) {
    for (std::size_t i = 0; i < m; ++i) {
      ActiveSet one(m);
      one.set(i);
      all.insert(one);
      if (max_size >= 2) {
        for (std::size_t j = i + 1; j < m; ++j) {
          ActiveSet two = one;
          two.set(j);
          all.insert(two);
        }
      }
    }
  }
  const Matrix& ghg = qp.solver().a_hinv_at();
  std::vector<ActiveSet> out;
  for (const auto& s : all) {
    if (s.size() != m) fail(ErrorCode::kDimensionMismatch, "sampled_sigma_set: sigma length");
    if (!linalg::psd_submatrix_is_singular(linalg::principal_submatrix(ghg, s))) out.push_back(s);
  }
  return out;
}

double jacobian_norm_bound(const CondensedQp& qp, const std::vector<ActiveSet>& sigmas) {
  if (sigmas.empty()) fail(ErrorCode::kInvalidArgument, "jacobian_norm_bound: empty sigma set");
  double best = 0.0;
  for (const auto& s : sigmas) best = std::max(best, linalg::spectral_norm(piece_gains(qp, s).gain));
  return best;
}

double hessian_constant(const CondensedQp& qp, const std::vector<ActiveSet>& sigmas) {
  if (sigmas.empty()) fail(ErrorCode::kInvalidArgument, "hessian_constant: empty sigma set");
  const auto& solver = qp.solver();
  double best = 0.0;
  for (const auto& s : sigmas) {
    const Matrix inv = linalg::padded_inverse(solver.a_hinv_at(), s);
    best = std::max(best, linalg::spectral_norm(2.0 * solver.hinv_at() * inv));
  }
  return best;
}

BoundsReport bounds_report(const CondensedQp& qp, double eta, const Vector& x0, const std::vector<ActiveSet>& sigmas) {
  if (!(eta > 0.0)) fail(ErrorCode::kInvalidArgument, "eta must be positive");
  BoundsReport rep;
  rep.eta = eta;
  rep.geometry = geometry(qp, x0);
  rep.nu = self_concordance_parameter(qp, rep.geometry.outer_radius);
  rep.res_lb = residual_lower_bound(eta, rep.nu, rep.geometry);
  rep.subopt_ub = std::sqrt(2.0 * eta * rep.nu / rep.geometry.strong_convexity);
  rep.lipschitz_jacobian = jacobian_norm_bound(qp, sigmas);
  rep.hessian_constant = hessian_constant(qp, sigmas);
  const double factor = linalg::spectral_norm(qp.p) + linalg::spectral_norm(qp.g) * rep.lipschitz_jacobian;
  rep.hess_ub = rep.hessian_constant / rep.res_lb * factor * factor;
  rep.sigma_count = sigmas.size();
  return rep;
}

HessianReport hessian_norm_report(const CondensedQp& qp, const BarrierConfig& cfg, const Vector& x0,
                                  const std::vector<ActiveSet>& sigmas, const HessianProbe& probe) {
  HessianReport rep;
  rep.bounds = bounds_report(qp, cfg.eta, x0, sigmas);
  rep.hess_bound = rep.bounds.hess_ub;
  const auto base = solve_barrier(qp, cfg, x0);
  Rng rng(probe.seed, x0);
  for (int k = 0; k < probe.directions; ++k) {
    const Vector y = rng.unit_vector(qp.state_dim);
    const auto plus = solve_barrier(qp, cfg, x0 + probe.step * y, base.u_eta);
    const auto minus = solve_barrier(qp, cfg, x0 - probe.step * y, base.u_eta);
    const Matrix d = (plus.jacobian - minus.jacobian) / (2.0 * probe.step);
    rep.hess_actual = std::max(rep.hess_actual, linalg::spectral_norm(d));
  }
  return rep;
}

std::vector<Vector> hit_and_run(const CondensedQp& qp, const Vector& x0, const Vector& start, std::size_t count,
                                Rng& rng, int thinning) {
  const Vector c = qp.rhs(x0);
  if (!((c - qp.g * start).minCoeff() > 0.0)) fail(ErrorCode::kOutsideDomain, "hit_and_run: start not interior");
  std::vector<Vector> out;
  out.reserve(count);
  Vector u = start;
  while (out.size() < count) {
    for (int s = 0; s < std::max(1, thinning); ++s) {
      const Vector v = rng.unit_vector(qp.n());
      const auto ch = chord(qp, c, u, v);
      double t = rng.uniform(ch.lo, ch.hi);
      Vector next = u + t * v;
      // The open chord excludes its endpoints; redraw on a rounding hit.
      while (!((c - qp.g * next).minCoeff() > 0.0)) {
        t *= 0.5;
        next = u + t * v;
      }
      u = std::move(next);
    }
    out.push_back(u);
  }
  return out;
}

SamplingCheck barrier_hessian_floor_check(const CondensedQp& qp, const Vector& x0, std::size_t samples,
                                          std::uint64_t seed) {
  const auto geo = geometry(qp, x0);
  SamplingCheck chk;
  chk.bound = 1.0 / (9.0 * geo.outer_radius * geo.outer_radius);
  chk.worst = std::numeric_limits<double>::infinity();
  Rng rng(seed, x0);
  for (const auto& u : probe_points(qp, x0, samples, rng)) {
    const Vector phi = residuals(qp, x0, u);
    // lambda_min(G^T Phi^-2 G) = sigma_min(Phi^-1 G)^2; forming the product
    // would square the conditioning near the boundary.
    const Matrix scaled = phi.cwiseInverse().asDiagonal() * qp.g;
    const double smin = Eigen::JacobiSVD<Matrix>(scaled).singularValues().minCoeff();
    const double lmin = smin * smin;
    chk.worst = std::min(chk.worst, lmin);
    ++chk.samples;
    if (lmin < chk.bound) ++chk.violations;
  }
  return chk;
}

SamplingCheck self_concordance_check(const CondensedQp& qp, const Vector& x0, std::size_t samples, std::uint64_t seed) {
  const auto geo = geometry(qp, x0);
  const Vector d = recentering_vector(qp);
  const Vector c = qp.rhs(x0);
  SamplingCheck chk;
  chk.bound = self_concordance_parameter(qp, geo.outer_radius);
  chk.worst = -std::numeric_limits<double>::infinity();
  Rng rng(seed ^ 0x5cULL, x0);
  for (const auto& u : probe_points(qp, x0, samples, rng)) {
    const Vector phi = c - qp.g * u;
    Vector grad = d;
    for (Eigen::Index i = 0; i < qp.m(); ++i) {
      if (!qp.is_parameter_row(i)) grad += qp.g.row(i).transpose() / phi(i);
    }
    const Vector v = rng.unit_vector(qp.n());
    const auto ch = chord(qp, c, u, v);
    const double t = rng.uniform() < 0.5 ? ch.hi : ch.lo;
    const double val = grad.dot(t * v);
    chk.worst = std::max(chk.worst, val);
    ++chk.samples;
    if (val > chk.bound) ++chk.violations;
  }
  return chk;
}

}  // namespace bmpc
