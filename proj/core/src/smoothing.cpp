#include "bmpc/smoothing.hpp"

#include <cmath>
#include <memory>
#include <mutex>

#include "bmpc/error.hpp"
#include "bmpc/lp.hpp"
#include "bmpc/parallel.hpp"
#include "bmpc/rng.hpp"

namespace bmpc {

NoiseDistribution parse_distribution(const std::string& name) {
  if (name == "gaussian") return NoiseDistribution::kGaussian;
  if (name == "uniform-ball" || name == "ball") return NoiseDistribution::kUniformBall;
  if (name == "uniform-box" || name == "box") return NoiseDistribution::kUniformBox;
  fail(ErrorCode::kInvalidArgument, "unknown distribution '" + name + "' (gaussian, uniform-ball, uniform-box)");
}

std::string to_string(NoiseDistribution dist) {
  switch (dist) {
    case NoiseDistribution::kGaussian: return "gaussian";
    case NoiseDistribution::kUniformBall: return "uniform-ball";
    case NoiseDistribution::kUniformBox: return "uniform-box";
  }
  return "?";
}

void SmoothingSpec::validate() const {
  if (!(epsilon > 0.0) || !std::isfinite(epsilon)) fail(ErrorCode::kInvalidArgument, "epsilon must be positive");
  if (n_samples < 1) fail(ErrorCode::kInvalidArgument, "n_samples must be >= 1");
}

StateProjector::StateProjector(const CondensedQp& qp, double margin) : dx_(qp.state_dim), margin_(margin) {
  const Eigen::Index n = qp.n();
  const Eigen::Index kx = qp.state_set ? qp.state_set->rows() : 0;
  // z = (x, u); a small weight on u makes the QP strictly convex.
  constexpr double kInputWeight = 1e-8;
  Matrix h = Matrix::Zero(dx_ + n, dx_ + n);
  h.topLeftCorner(dx_, dx_).diagonal().setConstant(2.0);
  h.bottomRightCorner(n, n).diagonal().setConstant(2.0 * kInputWeight);
  a_ = Matrix::Zero(kx + qp.m(), dx_ + n);
  b_.resize(kx + qp.m());
  if (kx > 0) {
    a_.topLeftCorner(kx, dx_) = qp.state_set->a();
    b_.head(kx) = qp.state_set->b().array() - margin;
  }
  a_.bottomLeftCorner(qp.m(), dx_) = -qp.p;
  a_.bottomRightCorner(qp.m(), n) = qp.g;
  b_.tail(qp.m()) = qp.w.array() - margin;
  qp_ = std::make_shared<const qp::DenseQp>(std::move(h), a_);
}

Vector StateProjector::operator()(const Vector& x) const {
  if (x.size() != dx_) fail(ErrorCode::kDimensionMismatch, "StateProjector: state dimension");
  Vector f = Vector::Zero(qp_->dim());
  f.head(dx_) = 2.0 * x;
  Vector z = qp_->solve(f, b_).z;
  // The active-set iterate can miss the margin by roundoff; move toward the
  // lifted Chebyshev centre just far enough to restore it (the set is convex).
  const double viol = (a_ * z - b_).maxCoeff();
  if (viol > -margin_) {
    std::call_once(center_once_, [&] { center_ = lp::chebyshev_center(a_, b_).center; });
    const double slack = (b_ - a_ * center_).minCoeff();
    if (!(slack > margin_)) fail(ErrorCode::kInfeasible, "StateProjector: feasible state set is empty");
    const double t = std::min(1.0, (viol + 2.0 * margin_) / (viol + slack));
    z += t * (center_ - z);
  }
  return z.head(dx_);
}

Vector project_feasible_state(const CondensedQp& qp, const Vector& x, double margin) {
  return StateProjector(qp, margin)(x);
}

SmoothedInput randomized_policy(const CondensedQp& qp, const SmoothingSpec& spec, const Vector& x0, PieceCache& cache,
                                int jobs, const std::optional<Vector>& stream_key) {
  spec.validate();
  if (x0.size() != qp.state_dim) fail(ErrorCode::kDimensionMismatch, "randomized_policy: x0 dimension");
  const Eigen::Index dx = qp.state_dim;
  const Eigen::Index du = qp.input_dim;
  const std::size_t n = spec.n_samples;

  Rng rng(spec.seed, stream_key.value_or(x0));
  std::vector<Vector> noise(n);
  for (auto& w : noise) {
    switch (spec.distribution) {
      case NoiseDistribution::kGaussian: w = rng.normal_vector(dx); break;
      case NoiseDistribution::kUniformBall: w = rng.in_ball(dx); break;
      case NoiseDistribution::kUniformBox: w = rng.in_box(dx); break;
    }
  }

  std::vector<Vector> inputs(n);
  std::vector<char> projected(n, 0);
  std::vector<char> outside(n, 0);
  std::once_flag projector_once;
  std::unique_ptr<StateProjector> projector;
  const std::size_t chunk = std::max<std::size_t>(1, n / std::max(1, jobs));
  parallel_for((n + chunk - 1) / chunk, jobs, [&](std::size_t c) {
    std::optional<std::size_t> hint;
    for (std::size_t k = c * chunk; k < std::min(n, (c + 1) * chunk); ++k) {
      Vector x = x0 + spec.epsilon * noise[k];
      const bool in_x = !qp.state_set || qp.state_set->contains(x);
      outside[k] = in_x ? 0 : 1;
      bool need_projection = !in_x;
      if (!need_projection) {
        try {
          const auto ev = eval_explicit(qp, x, cache, hint);
          inputs[k] = ev.u.head(du);
          hint = ev.piece;
          continue;
        } catch (const Error& e) {
          if (e.code() != ErrorCode::kInfeasible) throw;
          need_projection = true;
        }
      }
      projected[k] = 1;
      std::call_once(projector_once, [&] { projector = std::make_unique<StateProjector>(qp); });
      x = (*projector)(x);
      const auto ev = eval_explicit(qp, x, cache, hint);
      inputs[k] = ev.u.head(du);
      hint = ev.piece;
    }
  });

  SmoothedInput out;
  out.samples = n;
  out.mean = Vector::Zero(du);
  for (std::size_t k = 0; k < n; ++k) {
    out.mean += inputs[k];
    out.projected += static_cast<std::size_t>(projected[k]);
    out.outside_state_set += static_cast<std::size_t>(outside[k]);
  }
  out.mean /= static_cast<double>(n);
  Vector var = Vector::Zero(du);
  for (const auto& u : inputs) var += (u - out.mean).cwiseAbs2();
  out.stderr_ = n > 1 ? Vector((var / static_cast<double>(n - 1) / static_cast<double>(n)).cwiseSqrt())
                      : Vector::Zero(du);
  return out;
}

Matrix smoothed_jacobian(const CondensedQp& qp, const SmoothingSpec& spec, const Vector& x0, double step,
                         PieceCache& cache, int jobs, const std::optional<Vector>& stream_key) {
  if (!(step > 0.0)) fail(ErrorCode::kInvalidArgument, "smoothed_jacobian: step must be positive");
  const Vector key = stream_key.value_or(x0);
  Matrix jac(qp.input_dim, qp.state_dim);
  for (Eigen::Index j = 0; j < qp.state_dim; ++j) {
    Vector e = Vector::Zero(qp.state_dim);
    e(j) = step;
    const auto plus = randomized_policy(qp, spec, x0 + e, cache, jobs, key);
    const auto minus = randomized_policy(qp, spec, x0 - e, cache, jobs, key);
    jac.col(j) = (plus.mean - minus.mean) / (2.0 * step);
  }
  return jac;
}

}  // namespace bmpc
