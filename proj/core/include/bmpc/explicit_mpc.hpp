#pragma once

#include <map>
#include <optional>
#include <shared_mutex>
#include <vector>

#include "bmpc/active_set.hpp"
#include "bmpc/condense.hpp"
#include "bmpc/dense_qp.hpp"

namespace bmpc {

/// Optimum of the condensed QP at one x0.
struct QpSolution {
  Vector u_star;
  ActiveSet sigma;  ///< working set at termination (binding rows)
  Vector lambda;    ///< multipliers, one per row, zero off sigma
  int iterations = 0;
  bool used_phase_one = false;
  std::vector<double> objective_trace;
};

/// Reference solver. Throws kInfeasible when {u : G u <= w + P x0} is empty.
QpSolution solve_qp(const CondensedQp& qp, const Vector& x0, const qp::ActiveSetOptions& options = {},
                    const std::optional<Vector>& warm_start = std::nullopt);

qp::KktResidual kkt_residual(const CondensedQp& qp, const Vector& x0, const QpSolution& sol);

/// Explicit-MPC piece u = K x0 + k valid on the critical region of sigma,
/// together with the affine multiplier map lambda_sigma = M x0 + mu used to
/// test region membership.
struct AffinePiece {
  ActiveSet sigma;
  Matrix gain;    ///< K_sigma, (T du) x dx
  Vector offset;  ///< k_sigma
  std::vector<int> rows;  ///< indices of sigma, ascending
  Matrix dual_gain;
  Vector dual_offset;

  Vector input(const Vector& x0) const { return gain * x0 + offset; }
  Vector multipliers(const Vector& x0) const { return dual_gain * x0 + dual_offset; }
};

/// K_sigma = H^{-1}[F^T - G^T (G H^{-1} G^T)_sigma^{-1} (G H^{-1} F^T - P)],
/// k_sigma = H^{-1} G^T (G H^{-1} G^T)_sigma^{-1} w. Throws kDegenerate when
/// [G H^{-1} G^T]_sigma is singular.
AffinePiece piece_gains(const CondensedQp& qp, const ActiveSet& sigma);

/// True when the piece's KKT conditions hold at x0: primal feasibility of
/// K x0 + k and nonnegative multipliers, both to `tol` (scaled).
bool piece_contains(const CondensedQp& qp, const AffinePiece& piece, const Vector& x0, double tol = 1e-9);

/// Cache of explicit-MPC pieces with linear-scan lookup. Lookups take a
/// shared lock; insertion takes an exclusive one.
class PieceCache {
 public:
  PieceCache() = default;
  PieceCache(const PieceCache&) = delete;
  PieceCache& operator=(const PieceCache&) = delete;

  /// Index of a piece whose region contains x0, trying `hint` first.
  std::optional<std::size_t> find(const CondensedQp& qp, const Vector& x0,
                                  std::optional<std::size_t> hint = std::nullopt) const;
  /// Inserts unless a piece with the same sigma is present; returns its index.
  std::size_t insert(AffinePiece piece);
  AffinePiece at(std::size_t index) const;
  std::size_t size() const;

 private:
  mutable std::shared_mutex mu_;
  std::vector<AffinePiece> pieces_;
};

struct ExplicitEvaluation {
  Vector u;
  ActiveSet sigma;
  std::size_t piece = 0;
  bool cache_hit = false;
  int qp_iterations = 0;
};

/// Looks x0 up in the cache; on a miss solves the QP and inserts the piece.
ExplicitEvaluation eval_explicit(const CondensedQp& qp, const Vector& x0, PieceCache& cache,
                                 std::optional<std::size_t> hint = std::nullopt);

/// Tensor grid over a box: points[d] samples per dimension, endpoints included.
struct StateGrid {
  Vector lower;
  Vector upper;
  std::vector<int> points;

  static StateGrid uniform(const Vector& lower, const Vector& upper, int per_dim);
  std::size_t size() const;
  /// Row-major point (last dimension fastest).
  Vector point(std::size_t index) const;
};

struct PieceCensus {
  std::map<ActiveSet, std::size_t> counts;
  std::size_t infeasible = 0;
  std::size_t evaluated = 0;
  std::size_t degenerate = 0;  ///< feasible points whose piece gains were singular

  std::size_t distinct() const { return counts.size(); }
};

/// Distinct optimal active sets over the grid with their sample counts.
/// Sampling undercounts regions thinner than the grid spacing.
PieceCensus enumerate_pieces(const CondensedQp& qp, const StateGrid& grid, int jobs = 1);

}  // namespace bmpc
