#pragma once

#include <cmath>
#include <cstdint>
#include <cstring>
#include <numbers>
#include <random>

#include <Eigen/Dense>

namespace bmpc {

/// SplitMix64 finaliser; used to derive independent stream keys.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Deterministic stream keyed by a seed and an optional point, so that any
/// (seed, x0) pair yields the same draws regardless of evaluation order or
/// thread. Draws are produced without std distributions, which differ
/// between standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(mix64(seed)) {}
  Rng(std::uint64_t seed, const Eigen::VectorXd& key) : engine_(key_for(seed, key)) {}
  Rng(std::uint64_t seed, std::uint64_t stream) : engine_(mix64(mix64(seed) ^ mix64(stream + 0x632be59bd9b4e019ULL))) {}

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    const double rad = std::sqrt(-2.0 * std::log(u1));
    spare_ = rad * std::sin(2.0 * std::numbers::pi * u2);
    has_spare_ = true;
    return rad * std::cos(2.0 * std::numbers::pi * u2);
  }

  Eigen::VectorXd normal_vector(Eigen::Index dim) {
    Eigen::VectorXd v(dim);
    for (Eigen::Index i = 0; i < dim; ++i) v(i) = normal();
    return v;
  }

  Eigen::VectorXd unit_vector(Eigen::Index dim) {
    Eigen::VectorXd v = normal_vector(dim);
    double n = v.norm();
    while (n == 0.0) {
      v = normal_vector(dim);
      n = v.norm();
    }
    return v / n;
  }

  /// Uniform in the unit Euclidean ball.
  Eigen::VectorXd in_ball(Eigen::Index dim) {
    return unit_vector(dim) * std::pow(uniform(), 1.0 / static_cast<double>(dim));
  }

  /// Uniform in [-1, 1]^dim.
  Eigen::VectorXd in_box(Eigen::Index dim) {
    Eigen::VectorXd v(dim);
    for (Eigen::Index i = 0; i < dim; ++i) v(i) = uniform(-1.0, 1.0);
    return v;
  }

 private:
  static std::uint64_t key_for(std::uint64_t seed, const Eigen::VectorXd& key) {
    std::uint64_t h = mix64(seed);
    for (Eigen::Index i = 0; i < key.size(); ++i) {
      double v = key(i) == 0.0 ? 0.0 : key(i);  // fold -0.0 into +0.0
      std::uint64_t bits = 0;
      std::memcpy(&bits, &v, sizeof bits);
      h = mix64(h ^ bits);
    }
    return h;
  }

  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace bmpc
