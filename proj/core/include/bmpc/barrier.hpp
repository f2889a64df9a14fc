#pragma once

#include <optional>
#include <vector>

#include "bmpc/active_set.hpp"
#include "bmpc/condense.hpp"

namespace bmpc {

struct BarrierConfig {
  double eta = 1.0;
  /// Termination threshold on the Newton decrement of V^eta / eta.
  double newton_tol = 1e-10;
  int max_newton_iters = 500;
  /// Minimum residual for a start point to count as strictly interior.
  double feasibility_margin = 1e-9;

  void validate() const;
};

/// d = grad_u sum_i log phi_i(0, u) at u = 0 = -sum_i g_i / w_i. Requires
/// w > 0 (the origin strictly inside at x0 = 0).
Vector recentering_vector(const CondensedQp& qp);

struct BarrierEvaluation {
  double value = 0.0;
  Vector gradient;
  Matrix hessian;
};

/// V^eta(x0, u) = 1/2 u^T H u - x0^T F u - eta (sum_i log phi_i - d^T u) with
/// its gradient and Hessian. Throws kOutsideDomain unless phi > 0.
BarrierEvaluation barrier_objective(const CondensedQp& qp, double eta, const Vector& x0, const Vector& u);
/// Same, with d supplied by the caller.
BarrierEvaluation barrier_objective(const CondensedQp& qp, double eta, const Vector& x0, const Vector& u,
                                    const Vector& d);

struct BarrierSolution {
  Vector u_eta;
  Vector phi;
  Matrix jacobian;  ///< d u_eta / d x0, (T du) x dx
  int newton_iters = 0;
  double decrement = 0.0;  ///< final Newton decrement of V^eta / eta
  bool converged = false;
  bool used_phase_one = false;
  /// V^eta at each iterate of the final (target-eta) Newton run.
  std::vector<double> value_trace;
};

/// Minimises V^eta(x0, .) by damped Newton: full step when the decrement
/// lambda <= 1/4, step 1/(1 + lambda) otherwise. A cold start far from the
/// minimiser at small eta is first carried along a short continuation in
/// eta. Throws kInfeasible when no strictly interior start exists; a run that
/// exhausts the budget returns the last iterate with converged = false.
BarrierSolution solve_barrier(const CondensedQp& qp, const BarrierConfig& cfg, const Vector& x0,
                              const std::optional<Vector>& warm_start = std::nullopt);

/// (H + eta G^T Phi^-2 G)^{-1} (F^T + eta G^T Phi^-2 P) at the given minimiser.
Matrix policy_jacobian(const CondensedQp& qp, double eta, const Vector& x0, const Vector& u_eta);

/// H^{-1}[F^T - G^T (G H^{-1} G^T + Lambda)^{-1} (G H^{-1} F^T - P)],
/// Lambda = Phi^2 / eta. Algebraically identical to policy_jacobian.
Matrix policy_jacobian_woodbury(const CondensedQp& qp, double eta, const Vector& x0, const Vector& u_eta);

struct WeightedGain {
  ActiveSet sigma;
  double weight = 0.0;  ///< h_sigma / h
  Matrix gain;          ///< K_sigma
};

struct ConvexCombination {
  Matrix jacobian;
  std::vector<WeightedGain> terms;  ///< sigma in S only (det > 0)
  double weight_sum = 0.0;
};

/// sum_{sigma in S} (h_sigma / h) K_sigma with
/// h_sigma = det([G H^-1 G^T]_sigma) prod_i (phi_i^2 / eta)^{1 - sigma_i}.
/// Enumerates all 2^m subsets; throws kCombinatorialLimit for m > 12.
ConvexCombination convex_combination_jacobian(const CondensedQp& qp, double eta, const Vector& x0,
                                              const Vector& u_eta);

/// First input block of solve_barrier's minimiser.
Vector barrier_policy(const CondensedQp& qp, const BarrierConfig& cfg, const Vector& x0);

/// Previous plan shifted by one stage with the last stage repeated.
Vector shift_plan(const Vector& u, Eigen::Index input_dim);

}  // namespace bmpc
