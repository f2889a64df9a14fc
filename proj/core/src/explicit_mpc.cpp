#include "bmpc/explicit_mpc.hpp"

#include <mutex>

#include "bmpc/error.hpp"
#include "bmpc/parallel.hpp"

namespace bmpc {

QpSolution solve_qp(const CondensedQp& qp, const Vector& x0, const qp::ActiveSetOptions& options,
                    const std::optional<Vector>& warm_start) {
  if (x0.size() != qp.state_dim) fail(ErrorCode::kDimensionMismatch, "solve_qp: x0 dimension");
  auto res = qp.solver().solve(qp.linear_term(x0), qp.rhs(x0), options, warm_start);
  QpSolution sol;
  sol.u_star = std::move(res.z);
  sol.lambda = std::move(res.lambda);
  sol.sigma = ActiveSet::from_indices(res.working_set, static_cast<std::size_t>(qp.m()));
  sol.iterations = res.iterations;
  sol.used_phase_one = res.used_phase_one;
  sol.objective_trace = std::move(res.objective_trace);
  return sol;
}

qp::KktResidual kkt_residual(const CondensedQp& qp, const Vector& x0, const QpSolution& sol) {
  return qp.solver().kkt(qp.linear_term(x0), qp.rhs(x0), sol.u_star, sol.lambda);
}

AffinePiece piece_gains(const CondensedQp& qp, const ActiveSet& sigma) {
  if (sigma.size() != static_cast<std::size_t>(qp.m())) fail(ErrorCode::kDimensionMismatch, "piece_gains: mask length");
  const auto& solver = qp.solver();
  const Matrix& ghg = solver.a_hinv_at();  // G H^-1 G^T
  Matrix padded;
  try {
    padded = linalg::padded_inverse(ghg, sigma);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kSingular) fail(ErrorCode::kDegenerate, "[G H^-1 G^T]_sigma is singular");
    throw;
  }
  const Matrix hinv_ft = solver.h_llt().solve(qp.f.transpose());
  const Matrix& hinv_gt = solver.hinv_at();
  const Matrix coupling = qp.g * hinv_ft - qp.p;  // G H^-1 F^T - P

  AffinePiece piece;
  piece.sigma = sigma;
  piece.rows = sigma.indices();
  piece.gain = hinv_ft - hinv_gt * (padded * coupling);
  piece.offset = hinv_gt * (padded * qp.w);

  const auto k = static_cast<Eigen::Index>(piece.rows.size());
  piece.dual_gain.resize(k, qp.state_dim);
  piece.dual_offset.resize(k);
  for (Eigen::Index a = 0; a < k; ++a) {
    const int ra = piece.rows[static_cast<std::size_t>(a)];
    piece.dual_gain.row(a) = padded.row(ra) * coupling;
    piece.dual_offset(a) = -padded.row(ra).dot(qp.w);
  }
  return piece;
}

bool piece_contains(const CondensedQp& qp, const AffinePiece& piece, const Vector& x0, double tol) {
  const Vector c = qp.rhs(x0);
  const Vector u = piece.input(x0);
  const double primal_tol = tol * (1.0 + c.cwiseAbs().maxCoeff());
  if ((qp.g * u - c).maxCoeff() > primal_tol) return false;
  if (piece.rows.empty()) return true;
  const Vector lam = piece.multipliers(x0);
  return lam.minCoeff() >= -tol * (1.0 + lam.cwiseAbs().maxCoeff());
}

std::optional<std::size_t> PieceCache::find(const CondensedQp& qp, const Vector& x0,
                                            std::optional<std::size_t> hint) const {
  std::shared_lock lock(mu_);
  if (hint && *hint < pieces_.size() && piece_contains(qp, pieces_[*hint], x0)) return hint;
  for (std::size_t i = 0; i < pieces_.size(); ++i) {
    if (hint && i == *hint) continue;
    if (piece_contains(qp, pieces_[i], x0)) return i;
  }
  return std::nullopt;
}

std::size_t PieceCache::insert(AffinePiece piece) {
  std::unique_lock lock(mu_);
  for (std::size_t i = 0; i < pieces_.size(); ++i) {
    if (pieces_[i].sigma == piece.sigma) return i;
  }
  pieces_.push_back(std::move(piece));
  return pieces_.size() - 1;
}

AffinePiece PieceCache::at(std::size_t index) const {
  std::shared_lock lock(mu_);
  return pieces_.at(index);
}

std::size_t PieceCache::size() const {
  std::shared_lock lock(mu_);
  return pieces_.size();
}

ExplicitEvaluation eval_explicit(const CondensedQp& qp, const Vector& x0, PieceCache& cache,
                                 std::optional<std::size_t> hint) {
  ExplicitEvaluation out;
  if (auto idx = cache.find(qp, x0, hint)) {
    const AffinePiece piece = cache.at(*idx);
    out.u = piece.input(x0);
    out.sigma = piece.sigma;
    out.piece = *idx;
    out.cache_hit = true;
    return out;
  }
  QpSolution sol = solve_qp(qp, x0);
  out.u = std::move(sol.u_star);
  out.sigma = sol.sigma;
  out.qp_iterations = sol.iterations;
  try {
    AffinePiece piece = piece_gains(qp, sol.sigma);
    // Report the affine law so the value does not depend on cache history.
    out.u = piece.input(x0);
    out.piece = cache.insert(std::move(piece));
  } catch (const Error& e) {
    if (e.code() != ErrorCode::kDegenerate) throw;
    out.piece = cache.size();  // not cached
  }
  return out;
}

StateGrid StateGrid::uniform(const Vector& lower, const Vector& upper, int per_dim) {
  if (lower.size() != upper.size() || per_dim < 1) fail(ErrorCode::kInvalidArgument, "StateGrid::uniform");
  return StateGrid{lower, upper, std::vector<int>(static_cast<std::size_t>(lower.size()), per_dim)};
}

std::size_t StateGrid::size() const {
  std::size_t n = 1;
  for (int p : points) n *= static_cast<std::size_t>(p);
  return points.empty() ? 0 : n;
}

Vector StateGrid::point(std::size_t index) const {
  const auto d = lower.size();
  Vector x(d);
  for (Eigen::Index k = d - 1; k >= 0; --k) {
    const auto pk = static_cast<std::size_t>(points[static_cast<std::size_t>(k)]);
    const auto i = index % pk;
    index /= pk;
    x(k) = pk == 1 ? 0.5 * (lower(k) + upper(k))
                   : lower(k) + (upper(k) - lower(k)) * static_cast<double>(i) / static_cast<double>(pk - 1);
  }
  return x;
}

PieceCensus enumerate_pieces(const CondensedQp& qp, const StateGrid& grid, int jobs) {
  const std::size_t total = grid.size();
  const std::size_t line = grid.points.empty() ? 1 : static_cast<std::size_t>(grid.points.back());
  const std::size_t lines = total / line;

  PieceCache cache;
  std::mutex merge_mu;
  PieceCensus census;
  parallel_for(lines, jobs, [&](std::size_t li) {
    PieceCensus local;
    std::optional<std::size_t> hint;
    for (std::size_t j = 0; j < line; ++j) {
      const Vector x0 = grid.point(li * line + j);
      ++local.evaluated;
      if (auto idx = cache.find(qp, x0, hint)) {
        hint = idx;
        ++local.counts[cache.at(*idx).sigma];
        continue;
      }
      QpSolution sol;
      try {
        sol = solve_qp(qp, x0);
      } catch (const Error& e) {
        if (e.code() != ErrorCode::kInfeasible) throw;
        ++local.infeasible;
        continue;
      }
      ++local.counts[sol.sigma];
      try {
        hint = cache.insert(piece_gains(qp, sol.sigma));
      } catch (const Error& e) {
        if (e.code() != ErrorCode::kDegenerate) throw;
        ++local.degenerate;
      }
    }
    std::lock_guard lock(merge_mu);
    for (const auto& [s, c] : local.counts) census.counts[s] += c;
    census.infeasible += local.infeasible;
    census.evaluated += local.evaluated;
    census.degenerate += local.degenerate;
  });
  return census;
}

}  // namespace bmpc
