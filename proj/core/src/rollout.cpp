#include "bmpc/rollout.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <ostream>

#include "bmpc/csv.hpp"
#include "bmpc/error.hpp"
#include "bmpc/lp.hpp"
#include "bmpc/parallel.hpp"
#include "bmpc/rng.hpp"

namespace bmpc {

Policy make_barrier_policy(std::shared_ptr<const CondensedQp> qp, BarrierConfig cfg) {
  cfg.validate();
  return Policy{"barrier", [qp, cfg](const Vector& x, const PolicyOutput* prev) {
                  std::optional<Vector> warm;
                  if (prev && prev->plan) warm = shift_plan(*prev->plan, qp->input_dim);
                  auto sol = solve_barrier(*qp, cfg, x, warm);
                  if (!sol.converged) fail(ErrorCode::kNotConverged, "barrier Newton iteration did not converge");
                  PolicyOutput out;
                  out.u = sol.u_eta.head(qp->input_dim);
                  out.jacobian = sol.jacobian.topRows(qp->input_dim);
                  out.plan = std::move(sol.u_eta);
                  return out;
                }};
}

Policy make_explicit_policy(std::shared_ptr<const CondensedQp> qp, std::shared_ptr<PieceCache> cache) {
  return Policy{"explicit", [qp, cache](const Vector& x, const PolicyOutput*) {
                  const auto ev = eval_explicit(*qp, x, *cache);
                  PolicyOutput out;
                  out.u = ev.u.head(qp->input_dim);
                  if (ev.piece < cache->size()) out.jacobian = cache->at(ev.piece).gain.topRows(qp->input_dim);
                  out.plan = ev.u;
                  return out;
                }};
}

Policy make_randomized_policy(std::shared_ptr<const CondensedQp> qp, SmoothingSpec spec,
                              std::shared_ptr<PieceCache> cache, double jacobian_step) {
  spec.validate();
  return Policy{"randomized", [qp, spec, cache, jacobian_step](const Vector& x, const PolicyOutput*) {
                  PolicyOutput out;
                  out.u = randomized_policy(*qp, spec, x, *cache).mean;
                  out.jacobian = smoothed_jacobian(*qp, spec, x, jacobian_step, *cache);
                  return out;
                }};
}

Trajectory closed_loop(const MpcSpec& spec, const Policy& policy, const Vector& x0, int steps,
                       const std::vector<Vector>& disturbance) {
  if (steps < 0) fail(ErrorCode::kInvalidArgument, "closed_loop: negative step count");
  if (x0.size() != spec.sys.state_dim()) fail(ErrorCode::kDimensionMismatch, "closed_loop: x0 dimension");
  if (!disturbance.empty() && disturbance.size() < static_cast<std::size_t>(steps)) {
    fail(ErrorCode::kDimensionMismatch, "closed_loop: fewer disturbances than steps");
  }
  Trajectory traj;
  traj.policy_tag = policy.tag;
  traj.states.push_back(x0);
  std::optional<PolicyOutput> prev;
  for (int t = 0; t < steps; ++t) {
    const Vector x = traj.states.back();
    PolicyOutput out;
    try {
      out = policy.evaluate(x, prev ? &*prev : nullptr);
    } catch (const Error& e) {
      fail(e.code(), "step " + std::to_string(t) + ": " + e.what());
    }
    traj.feasible.push_back(spec.state_set.contains(x) && spec.input_set.contains(out.u));
    Vector next = spec.sys.step(x, out.u);
    if (!disturbance.empty()) next += disturbance[static_cast<std::size_t>(t)];
    traj.inputs.push_back(out.u);
    if (out.jacobian) traj.jacobians.push_back(*out.jacobian);
    traj.states.push_back(next);
    prev = std::move(out);
    if (!spec.state_set.contains(next)) {
      traj.halted = true;
      break;
    }
  }
  return traj;
}

IssEstimate iss_estimate(const MpcSpec& spec, const Policy& policy, const Vector& x0, double eta_p,
                         std::size_t n_rollouts, int steps, std::uint64_t seed) {
  if (eta_p < 0.0) fail(ErrorCode::kInvalidArgument, "iss_estimate: negative perturbation level");
  IssEstimate est;
  if (eta_p == 0.0 || n_rollouts == 0) return est;
  const Trajectory nominal = closed_loop(spec, policy, x0, steps);
  if (nominal.halted) fail(ErrorCode::kInfeasible, "iss_estimate: nominal rollout leaves X");
  const Eigen::Index dx = spec.sys.state_dim();
  for (std::size_t r = 0; r < n_rollouts; ++r) {
    Rng rng(seed, static_cast<std::uint64_t>(r));
    std::vector<Vector> delta(static_cast<std::size_t>(steps));
    for (auto& d : delta) d = eta_p * rng.unit_vector(dx);
    ++est.rollouts;
    Trajectory pert;
    try {
      pert = closed_loop(spec, policy, x0, steps, delta);
    } catch (const Error&) {
      ++est.failed;
      continue;
    }
    if (pert.halted) {
      ++est.failed;
      continue;
    }
    // Every disturbance has norm eta_p, so max_{k<t} ||Delta_k|| = eta_p.
    for (std::size_t t = 1; t < pert.states.size(); ++t) {
      est.gamma = std::max(est.gamma, (pert.states[t] - nominal.states[t]).norm() / eta_p);
    }
  }
  if (est.failed == est.rollouts) fail(ErrorCode::kInfeasible, "iss_estimate: every perturbed rollout failed");
  return est;
}

JacobianProbe barrier_jacobian_probe(std::shared_ptr<const CondensedQp> qp, BarrierConfig cfg) {
  cfg.validate();
  return [qp, cfg](const Vector& x, const std::vector<Vector>& offsets) {
    const auto du = qp->input_dim;
    const auto base = solve_barrier(*qp, cfg, x);
    if (!base.converged) fail(ErrorCode::kNotConverged, "barrier solve did not converge");
    std::vector<Matrix> out{base.jacobian.topRows(du)};
    for (const auto& off : offsets) {
      const auto sol = solve_barrier(*qp, cfg, x + off, base.u_eta);
      if (!sol.converged) fail(ErrorCode::kNotConverged, "barrier solve did not converge");
      out.push_back(sol.jacobian.topRows(du));
    }
    return out;
  };
}

JacobianProbe explicit_jacobian_probe(std::shared_ptr<const CondensedQp> qp, std::shared_ptr<PieceCache> cache) {
  return [qp, cache](const Vector& x, const std::vector<Vector>& offsets) {
    std::vector<Matrix> out;
    std::optional<std::size_t> hint;
    auto gain_at = [&](const Vector& s) {
      const auto ev = eval_explicit(*qp, s, *cache, hint);
      if (ev.piece >= cache->size()) fail(ErrorCode::kDegenerate, "degenerate active set");
      hint = ev.piece;
      return Matrix(cache->at(ev.piece).gain.topRows(qp->input_dim));
    };
    out.push_back(gain_at(x));
    for (const auto& off : offsets) out.push_back(gain_at(x + off));
    return out;
  };
}

JacobianProbe randomized_jacobian_probe(std::shared_ptr<const CondensedQp> qp, SmoothingSpec spec,
                                        std::shared_ptr<PieceCache> cache, double jacobian_step) {
  spec.validate();
  return [qp, spec, cache, jacobian_step](const Vector& x, const std::vector<Vector>& offsets) {
    // One noise stream (keyed by x) for every evaluation around x.
    std::vector<Matrix> out{smoothed_jacobian(*qp, spec, x, jacobian_step, *cache, 1, x)};
    for (const auto& off : offsets) out.push_back(smoothed_jacobian(*qp, spec, x + off, jacobian_step, *cache, 1, x));
    return out;
  };
}

double smoothness_step(const StateGrid& grid, const SmoothnessOptions& options) {
  const double extent = (grid.upper - grid.lower).maxCoeff();
  if (options.relative_step > 0.0) return options.relative_step * (extent > 0.0 ? extent : 1.0);
  double spacing = 0.0;
  for (std::size_t d = 0; d < grid.points.size(); ++d) {
    const auto i = static_cast<Eigen::Index>(d);
    if (grid.points[d] > 1) spacing = std::max(spacing, (grid.upper(i) - grid.lower(i)) / (grid.points[d] - 1));
  }
  return spacing > 0.0 ? 0.5 * spacing : 1e-4 * (extent > 0.0 ? extent : 1.0);
}

SmoothnessEstimate estimate_smoothness(const JacobianProbe& probe, const StateGrid& grid,
                                       const SmoothnessOptions& options) {
  if (grid.size() == 0) fail(ErrorCode::kInvalidArgument, "estimate_smoothness: empty grid");
  const double h = smoothness_step(grid, options);
  const std::size_t n = grid.size();
  std::vector<double> l0(n, 0.0);
  std::vector<double> l1(n, 0.0);
  std::vector<char> ok(n, 0);
  parallel_for(n, options.jobs, [&](std::size_t i) {
    const Vector x = grid.point(i);
    Rng rng(options.seed, x);
    std::vector<Vector> offsets;
    for (int k = 0; k < options.directions; ++k) {
      const Vector y = rng.unit_vector(x.size());
      offsets.push_back(h * y);
      offsets.push_back(-h * y);
    }
    std::vector<Matrix> jac;
    try {
      jac = probe(x, offsets);
    } catch (const Error&) {
      return;
    }
    ok[i] = 1;
    l0[i] = linalg::spectral_norm(jac[0]);
    for (int k = 0; k < options.directions; ++k) {
      const auto kk = static_cast<std::size_t>(k);
      l1[i] = std::max(l1[i], linalg::spectral_norm(jac[1 + 2 * kk] - jac[2 + 2 * kk]) / (2.0 * h));
    }
  });
  SmoothnessEstimate est;
  est.grid = grid;
  for (std::size_t i = 0; i < n; ++i) {
    if (!ok[i]) {
      ++est.failures;
      continue;
    }
    ++est.evaluated;
    est.l0 = std::max(est.l0, l0[i]);
    est.l1 = std::max(est.l1, l1[i]);
  }
  return est;
}

std::vector<SmoothnessEstimate> smoothness_sweep(const std::function<JacobianProbe(double)>& family,
                                                 const std::vector<double>& parameters, const StateGrid& grid,
                                                 const SmoothnessOptions& options) {
  if (parameters.empty()) fail(ErrorCode::kInvalidArgument, "smoothness_sweep: empty parameter grid");
  std::vector<SmoothnessEstimate> out;
  for (double p : parameters) {
    auto est = estimate_smoothness(family(p), grid, options);
    est.parameter = p;
    out.push_back(std::move(est));
  }
  return out;
}

void write_sweep_csv(std::ostream& out, const std::vector<SmoothnessEstimate>& rows) {
  out << "parameter,L0,L1,n_failures\n";
  for (const auto& r : rows) {
    out << csv::join({csv::format(r.parameter), csv::format(r.l0), csv::format(r.l1), std::to_string(r.failures)})
        << '\n';
  }
}

std::vector<Vector> sample_initial_states(const CondensedQp& qp, const Polytope& state_set, std::size_t count,
                                          std::uint64_t seed, double scale) {
  if (!(scale > 0.0 && scale <= 1.0)) fail(ErrorCode::kInvalidArgument, "initial-state scale must be in (0, 1]");
  const Eigen::Index dx = state_set.dim();
  const Vector b = scale * state_set.b();
  Vector lo(dx), hi(dx);
  for (Eigen::Index i = 0; i < dx; ++i) {
    Vector c = Vector::Zero(dx);
    c(i) = 1.0;
    const auto mn = lp::solve_lp(c, state_set.a(), b);
    const auto mx = lp::solve_lp(-c, state_set.a(), b);
    if (mn.status != lp::LpStatus::kOptimal || mx.status != lp::LpStatus::kOptimal) {
      fail(ErrorCode::kInvalidArgument, "state set is unbounded");
    }
    lo(i) = mn.x(i);
    hi(i) = mx.x(i);
  }
  Rng rng(seed);
  std::vector<Vector> out;
  const std::size_t max_draws = 1000 * std::max<std::size_t>(count, 1);
  for (std::size_t draw = 0; out.size() < count; ++draw) {
    if (draw >= max_draws) fail(ErrorCode::kInfeasible, "could not sample feasible initial states");
    Vector x(dx);
    for (Eigen::Index i = 0; i < dx; ++i) x(i) = rng.uniform(lo(i), hi(i));
    if (!((b - state_set.a() * x).minCoeff() > 0.0)) continue;
    const Vector c = qp.rhs(x);
    bool ok = true;
    for (Eigen::Index i = 0; i < qp.m() && ok; ++i) ok = !qp.is_parameter_row(i) || c(i) > 0.0;
    if (!ok || lp::chebyshev_center(qp.g, c).radius <= 1e-6) continue;
    out.push_back(std::move(x));
  }
  return out;
}

void write_dataset(std::ostream& out, const std::vector<Trajectory>& trajectories) {
  if (trajectories.empty() || trajectories.front().steps() == 0) {
    fail(ErrorCode::kInvalidArgument, "export_dataset: no data");
  }
  const auto dx = trajectories.front().states.front().size();
  const auto du = trajectories.front().inputs.front().size();
  std::vector<std::string> header{"traj_id", "t"};
  for (Eigen::Index i = 0; i < dx; ++i) header.push_back("x_" + std::to_string(i));
  for (Eigen::Index i = 0; i < du; ++i) header.push_back("u_" + std::to_string(i));
  for (Eigen::Index i = 0; i < du; ++i) {
    for (Eigen::Index j = 0; j < dx; ++j) header.push_back("J_" + std::to_string(i) + std::to_string(j));
  }
  out << csv::join(header) << '\n';
  for (std::size_t k = 0; k < trajectories.size(); ++k) {
    const auto& tr = trajectories[k];
    if (tr.jacobians.size() != tr.steps()) fail(ErrorCode::kInvalidArgument, "export_dataset: missing Jacobians");
    for (std::size_t t = 0; t < tr.steps(); ++t) {
      const auto& x = tr.states[t];
      const auto& u = tr.inputs[t];
      const auto& jac = tr.jacobians[t];
      if (x.size() != dx || u.size() != du || jac.rows() != du || jac.cols() != dx) {
        fail(ErrorCode::kDimensionMismatch, "export_dataset: inconsistent dimensions");
      }
      std::vector<std::string> row{std::to_string(k), std::to_string(t)};
      for (Eigen::Index i = 0; i < dx; ++i) row.push_back(csv::format(x(i)));
      for (Eigen::Index i = 0; i < du; ++i) row.push_back(csv::format(u(i)));
      for (Eigen::Index i = 0; i < du; ++i) {
        for (Eigen::Index j = 0; j < dx; ++j) row.push_back(csv::format(jac(i, j)));
      }
      out << csv::join(row) << '\n';
    }
  }
}

void export_dataset(const std::vector<Trajectory>& trajectories, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) fail(ErrorCode::kIo, "cannot write " + path.string());
  write_dataset(out, trajectories);
  if (!out) fail(ErrorCode::kIo, "write failed: " + path.string());
}

std::vector<Trajectory> read_dataset(std::istream& in) {
  const auto table = csv::read(in);
  std::size_t dx = 0, du = 0;
  for (const auto& h : table.header) {
    if (h.rfind("x_", 0) == 0) ++dx;
    if (h.rfind("u_", 0) == 0) ++du;
  }
  const auto id_col = table.column("traj_id");
  const auto x_col = table.column("x_0");
  const auto u_col = table.column("u_0");
  const auto j_col = table.column("J_00");
  std::map<long, Trajectory> by_id;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    auto& tr = by_id[std::lround(table.number(r, id_col))];
    Vector x(static_cast<Eigen::Index>(dx)), u(static_cast<Eigen::Index>(du));
    Matrix jac(static_cast<Eigen::Index>(du), static_cast<Eigen::Index>(dx));
    for (std::size_t i = 0; i < dx; ++i) x(static_cast<Eigen::Index>(i)) = table.number(r, x_col + i);
    for (std::size_t i = 0; i < du; ++i) u(static_cast<Eigen::Index>(i)) = table.number(r, u_col + i);
    for (std::size_t i = 0; i < du; ++i) {
      for (std::size_t j = 0; j < dx; ++j) {
        jac(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = table.number(r, j_col + i * dx + j);
      }
    }
    tr.states.push_back(std::move(x));
    tr.inputs.push_back(std::move(u));
    tr.jacobians.push_back(std::move(jac));
    tr.feasible.push_back(true);
  }
  std::vector<Trajectory> out;
  for (auto& [id, tr] : by_id) out.push_back(std::move(tr));
  return out;
}

}  // namespace bmpc
