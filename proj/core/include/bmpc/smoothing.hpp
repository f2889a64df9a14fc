#pragma once

#include <cstdint>
#include <memory>
#include <mutex>
#include <optional>
#include <string>

#include "bmpc/condense.hpp"
#include "bmpc/explicit_mpc.hpp"

namespace bmpc {

enum class NoiseDistribution { kUniformBall, kUniformBox, kGaussian };

NoiseDistribution parse_distribution(const std::string& name);
std::string to_string(NoiseDistribution dist);

struct SmoothingSpec {
  NoiseDistribution distribution = NoiseDistribution::kGaussian;
  double epsilon = 1.0;
  std::size_t n_samples = 1000;
  std::uint64_t seed = 0;

  void validate() const;
};

struct SmoothedInput {
  Vector mean;     ///< first-input average over perturbed states
  Vector stderr_;  ///< per-component standard error of the mean
  std::size_t samples = 0;
  std::size_t projected = 0;    ///< perturbed states replaced by their projection
  std::size_t outside_state_set = 0;

  double projection_rate() const { return samples ? static_cast<double>(projected) / samples : 0.0; }
  double outside_fraction() const { return samples ? static_cast<double>(outside_state_set) / samples : 0.0; }
};

/// Euclidean projection onto {x in X : G u <= w + P x for some u}, shrunk by
/// `margin` so the result is strictly feasible. Solved as a QP in (x, u)
/// whose factorisation is built once.
class StateProjector {
 public:
  explicit StateProjector(const CondensedQp& qp, double margin = 1e-9);
  Vector operator()(const Vector& x) const;

 private:
  Eigen::Index dx_;
  double margin_;
  Matrix a_;
  Vector b_;
  std::shared_ptr<const qp::DenseQp> qp_;
  mutable std::once_flag center_once_;
  mutable Vector center_;
};

Vector project_feasible_state(const CondensedQp& qp, const Vector& x, double margin = 1e-9);

/// Monte Carlo estimate of E[pi_mpc(x0 + eps w)] with the explicit policy.
/// The draws depend only on (seed, stream_key), stream_key defaulting to x0;
/// passing the same key at nearby states gives common random numbers.
SmoothedInput randomized_policy(const CondensedQp& qp, const SmoothingSpec& spec, const Vector& x0, PieceCache& cache,
                                int jobs = 1, const std::optional<Vector>& stream_key = std::nullopt);

/// Central differences of randomized_policy in each coordinate with common
/// random numbers keyed by x0.
Matrix smoothed_jacobian(const CondensedQp& qp, const SmoothingSpec& spec, const Vector& x0, double step,
                         PieceCache& cache, int jobs = 1, const std::optional<Vector>& stream_key = std::nullopt);

}  // namespace bmpc
