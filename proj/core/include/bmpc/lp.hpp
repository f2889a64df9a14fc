#pragma once

#include "bmpc/linalg.hpp"

namespace bmpc::lp {

enum class LpStatus { kOptimal, kInfeasible, kUnbounded, kIterationLimit };

struct LpResult {
  LpStatus status = LpStatus::kIterationLimit;
  Vector x;
  double objective = 0.0;
  int pivots = 0;
};

struct LpOptions {
  double tol = 1e-10;
  int max_pivots = 5000;
  /// Consecutive degenerate pivots before switching from Dantzig's rule to
  /// Bland's rule.
  int bland_after = 50;
};

/// minimize c^T x  subject to  A x <= b, with x free. Dense two-phase
/// tableau simplex.
LpResult solve_lp(const Vector& c, const Matrix& a, const Vector& b, const LpOptions& options = {});

/// Largest ball {y : ||y - center|| <= radius} inside {x : A x <= b}. Rows of
/// A with (near) zero norm are treated as pure feasibility checks on b.
struct ChebyshevBall {
  Vector center;
  double radius = 0.0;
};

/// Returns the optimal ball; radius is negative when the polytope is empty
/// (the LP then reports the least-violated point). `radius_cap` bounds the
/// LP for unbounded polytopes.
ChebyshevBall chebyshev_center(const Matrix& a, const Vector& b, double radius_cap = 1e6);

}  // namespace bmpc::lp
