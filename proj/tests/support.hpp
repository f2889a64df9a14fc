#pragma once

#include <chrono>
#include <cmath>
#include <string>
#include <vector>

#include "bmpc/condense.hpp"
#include "bmpc/lp.hpp"
#include "bmpc/rng.hpp"

namespace bmpc::test {

inline Matrix random_matrix(Rng& rng, Eigen::Index r, Eigen::Index c) {
  Matrix m(r, c);
  for (Eigen::Index i = 0; i < r; ++i)
    for (Eigen::Index j = 0; j < c; ++j) m(i, j) = rng.normal();
  return m;
}

/// B B^T with B of random rank in [1, n].
inline Matrix random_psd(Rng& rng, Eigen::Index n) {
  const auto rank = 1 + static_cast<Eigen::Index>(rng.uniform() * static_cast<double>(n));
  const Matrix b = random_matrix(rng, n, std::min(rank, n));
  return b * b.transpose();
}

/// Axis-aligned box of a polytope given as a box (rows +-e_i).
inline std::pair<Vector, Vector> box_of(const Polytope& x) {
  Vector lo = Vector::Constant(x.dim(), -1e300), hi = Vector::Constant(x.dim(), 1e300);
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    for (Eigen::Index i = 0; i < x.dim(); ++i) {
      const double a = x.a()(r, i);
      if (a > 0.5) hi(i) = std::min(hi(i), x.b()(r) / a);
      if (a < -0.5) lo(i) = std::max(lo(i), x.b()(r) / a);
    }
  }
  return {lo, hi};
}

/// MPC problem strictly feasible at x0: every zero row of G satisfied and a
/// ball of radius `radius` inside {u : G u <= w + P x0}.
inline bool strictly_feasible(const CondensedQp& qp, const Vector& x0, double radius = 1e-6) {
  const Vector c = qp.rhs(x0);
  Matrix g(0, qp.n());
  Vector b(0);
  for (Eigen::Index i = 0; i < qp.m(); ++i) {
    if (qp.g.row(i).norm() == 0.0) {
      if (c(i) <= 0.0) return false;
      continue;
    }
    g.conservativeResize(g.rows() + 1, Eigen::NoChange);
    b.conservativeResize(b.size() + 1);
    g.row(g.rows() - 1) = qp.g.row(i) / qp.g.row(i).norm();
    b(b.size() - 1) = c(i) / qp.g.row(i).norm();
  }
  return lp::chebyshev_center(g, b).radius > radius;
}

/// Strictly feasible points of a per_dim^2 grid over `scale` times the box.
inline std::vector<Vector> feasible_grid(const CondensedQp& qp, const Polytope& x, int per_dim, double scale = 1.0) {
  const auto [lo, hi] = box_of(x);
  std::vector<Vector> out;
  for (int i = 0; i < per_dim; ++i) {
    for (int j = 0; j < per_dim; ++j) {
      Vector p(2);
      p(0) = scale * (lo(0) + (hi(0) - lo(0)) * i / (per_dim - 1));
      p(1) = scale * (lo(1) + (hi(1) - lo(1)) * j / (per_dim - 1));
      if (strictly_feasible(qp, p)) out.push_back(p);
    }
  }
  return out;
}

inline std::vector<double> logspace(double lo, double hi, int n) {
  std::vector<double> v;
  for (int i = 0; i < n; ++i) {
    v.push_back(n == 1 ? lo : std::pow(10.0, std::log10(lo) + (std::log10(hi) - std::log10(lo)) * i / (n - 1)));
  }
  return v;
}

class Stopwatch {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

}  // namespace bmpc::test
