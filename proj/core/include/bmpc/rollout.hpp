#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "bmpc/barrier.hpp"
#include "bmpc/condense.hpp"
#include "bmpc/explicit_mpc.hpp"
#include "bmpc/smoothing.hpp"

namespace bmpc {

/// One policy evaluation: the applied input, optionally its Jacobian and
/// the full plan (used to warm-start the next step).
struct PolicyOutput {
  Vector u;
  std::optional<Matrix> jacobian;
  std::optional<Vector> plan;
};

/// A state-feedback law. `previous` is the output at the preceding step of
/// the same rollout, if any.
struct Policy {
  std::string tag;
  std::function<PolicyOutput(const Vector& x, const PolicyOutput* previous)> evaluate;
};

Policy make_barrier_policy(std::shared_ptr<const CondensedQp> qp, BarrierConfig cfg);
Policy make_explicit_policy(std::shared_ptr<const CondensedQp> qp, std::shared_ptr<PieceCache> cache);
/// Jacobian by CRN central differences with the given step.
Policy make_randomized_policy(std::shared_ptr<const CondensedQp> qp, SmoothingSpec spec,
                              std::shared_ptr<PieceCache> cache, double jacobian_step);

struct Trajectory {
  std::vector<Vector> states;  ///< x_0..x_K (shorter when halted)
  std::vector<Vector> inputs;  ///< u_0..u_{K-1}
  std::vector<Matrix> jacobians;  ///< per step, empty when the policy exposes none
  std::vector<bool> feasible;  ///< per step: x_t in X and u_t in U
  std::string policy_tag;
  bool halted = false;  ///< a state left X

  std::size_t steps() const { return inputs.size(); }
};

/// Rolls x_{t+1} = A x_t + B pi(x_t) for K steps, adding disturbance[t] to
/// the successor state when given. Stops after the first state outside X.
Trajectory closed_loop(const MpcSpec& spec, const Policy& policy, const Vector& x0, int steps,
                       const std::vector<Vector>& disturbance = {});

struct IssEstimate {
  double gamma = 0.0;
  std::size_t rollouts = 0;
  std::size_t failed = 0;  ///< perturbed rollouts that left X or failed to solve
};

/// max over rollouts and t of ||x_t - xbar_t|| / max_{k<t} ||Delta_k||, with
/// Delta_k drawn uniformly on the sphere of radius eta_p.
IssEstimate iss_estimate(const MpcSpec& spec, const Policy& policy, const Vector& x0, double eta_p,
                         std::size_t n_rollouts, int steps, std::uint64_t seed);

/// Jacobian of the first input at x and at x + each offset.
using JacobianProbe = std::function<std::vector<Matrix>(const Vector& x, const std::vector<Vector>& offsets)>;

JacobianProbe barrier_jacobian_probe(std::shared_ptr<const CondensedQp> qp, BarrierConfig cfg);
JacobianProbe explicit_jacobian_probe(std::shared_ptr<const CondensedQp> qp, std::shared_ptr<PieceCache> cache);
JacobianProbe randomized_jacobian_probe(std::shared_ptr<const CondensedQp> qp, SmoothingSpec spec,
                                        std::shared_ptr<PieceCache> cache, double jacobian_step);

struct SmoothnessOptions {
  int directions = 4;
  /// Finite-difference step as a fraction of the grid extent; zero picks half
  /// the grid spacing, so the probes around neighbouring points tile the box.
  double relative_step = 0.0;
  std::uint64_t seed = 0;
  int jobs = 1;
};

struct SmoothnessEstimate {
  double parameter = 0.0;
  double l0 = 0.0;  ///< max ||dpi/dx|| over the grid
  double l1 = 0.0;  ///< max ||J(x + h y) - J(x - h y)|| / (2 h) over grid and directions
  std::size_t evaluated = 0;
  std::size_t failures = 0;  ///< grid states where the policy could not be evaluated
  StateGrid grid;
};

/// The step h used by estimate_smoothness.
double smoothness_step(const StateGrid& grid, const SmoothnessOptions& options);

SmoothnessEstimate estimate_smoothness(const JacobianProbe& probe, const StateGrid& grid,
                                       const SmoothnessOptions& options);

/// One estimate per parameter value, `family` mapping the parameter to a probe.
std::vector<SmoothnessEstimate> smoothness_sweep(const std::function<JacobianProbe(double)>& family,
                                                 const std::vector<double>& parameters, const StateGrid& grid,
                                                 const SmoothnessOptions& options);

void write_sweep_csv(std::ostream& out, const std::vector<SmoothnessEstimate>& rows);

/// Uniform draws from the box enclosing scale * X, kept when inside scale * X
/// and the MPC problem is strictly feasible there.
std::vector<Vector> sample_initial_states(const CondensedQp& qp, const Polytope& state_set, std::size_t count,
                                          std::uint64_t seed, double scale = 0.8);

/// Header traj_id,t,x_0..,u_0..,J_00..; one row per step, 17 significant digits.
void write_dataset(std::ostream& out, const std::vector<Trajectory>& trajectories);
void export_dataset(const std::vector<Trajectory>& trajectories, const std::filesystem::path& path);

/// Inverse of write_dataset (states x_0..x_{K-1}, inputs and Jacobians).
std::vector<Trajectory> read_dataset(std::istream& in);

}  // namespace bmpc
