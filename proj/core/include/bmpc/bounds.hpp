#pragma once

#include <cstdint>
#include <vector>

#include "bmpc/active_set.hpp"
#include "bmpc/barrier.hpp"
#include "bmpc/condense.hpp"
#include "bmpc/rng.hpp"

namespace bmpc {

/// nu = 20 (m + R^2 ||d||^2): parameter of the recentred barrier
/// -sum log phi_i + d^T u on a set inside B(0, R). m counts every row.
double self_concordance_parameter(const CondensedQp& qp, double outer_radius);

/// min{eta / 2, r eta^2 / (150 (nu eta^2 + R^2 (L_V^2 + 1)))}.
double residual_lower_bound(double eta, double nu, const QpGeometry& geo);

struct SuboptimalityReport {
  double gap_actual = 0.0;  ///< ||u_eta - u*||
  double gap_bound = 0.0;   ///< sqrt(2 eta nu / alpha)
  double half_alpha_gap_sq = 0.0;
  double eta_nu = 0.0;

  bool holds() const { return half_alpha_gap_sq <= eta_nu; }
};

SuboptimalityReport suboptimality_report(const CondensedQp& qp, const BarrierConfig& cfg, const Vector& x0);
/// Same with both minimisers supplied.
SuboptimalityReport suboptimality_report(const CondensedQp& qp, double eta, const Vector& u_eta, const Vector& u_star,
                                         double nu);

/// The sampled subset family used for L and C: the given sigmas together
/// with every sigma of size <= max_size, restricted to nonsingular
/// [G H^-1 G^T]_sigma and returned sorted without duplicates.
std::vector<ActiveSet> sampled_sigma_set(const CondensedQp& qp, const std::vector<ActiveSet>& seeds, int max_size = 2);

/// L = max ||K_sigma|| over the given sigmas. Throws on an empty set.
double jacobian_norm_bound(const CondensedQp& qp, const std::vector<ActiveSet>& sigmas);

/// C = max ||2 H^-1 G^T (G H^-1 G^T)_sigma^-1|| over the given sigmas.
double hessian_constant(const CondensedQp& qp, const std::vector<ActiveSet>& sigmas);

struct BoundsReport {
  QpGeometry geometry;
  double eta = 0.0;
  double nu = 0.0;
  double res_lb = 0.0;
  double subopt_ub = 0.0;
  double lipschitz_jacobian = 0.0;  ///< L
  double hessian_constant = 0.0;    ///< C (sampled)
  double hess_ub = 0.0;
  std::size_t sigma_count = 0;
};

BoundsReport bounds_report(const CondensedQp& qp, double eta, const Vector& x0, const std::vector<ActiveSet>& sigmas);

struct HessianReport {
  double hess_actual = 0.0;
  double hess_bound = 0.0;
  BoundsReport bounds;

  bool holds() const { return hess_actual <= hess_bound; }
};

struct HessianProbe {
  int directions = 32;
  double step = 1e-5;
  std::uint64_t seed = 0;
};

/// Directional central differences of the analytic Jacobian over random
/// unit directions, maximised, against C / res_lb (||P|| + ||G|| L)^2.
HessianReport hessian_norm_report(const CondensedQp& qp, const BarrierConfig& cfg, const Vector& x0,
                                  const std::vector<ActiveSet>& sigmas, const HessianProbe& probe = {});

/// Interior samples of {u : G u < w + P x0} by hit-and-run from `start`.
std::vector<Vector> hit_and_run(const CondensedQp& qp, const Vector& x0, const Vector& start, std::size_t count,
                                Rng& rng, int thinning = 5);

struct SamplingCheck {
  std::size_t samples = 0;
  std::size_t violations = 0;
  double bound = 0.0;
  double worst = 0.0;  ///< extreme sampled value (max for upper bounds, min for floors)

  bool passed() const { return violations == 0; }
};

/// lambda_min(sum_i g_i g_i^T / phi_i^2) >= 1 / (9 R^2) at sampled interior
/// points, some of them pushed close to the boundary.
SamplingCheck barrier_hessian_floor_check(const CondensedQp& qp, const Vector& x0, std::size_t samples,
                                          std::uint64_t seed);

/// grad(-sum log phi_i + d^T u)(x)^T (y - x) <= nu for interior x and
/// boundary points y.
SamplingCheck self_concordance_check(const CondensedQp& qp, const Vector& x0, std::size_t samples, std::uint64_t seed);

}  // namespace bmpc
