#include "cli.hpp"

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <memory>
#include <optional>
#include <ostream>
#include <sstream>

#include "CLI11.hpp"
#include "bmpc/barrier.hpp"
#include "bmpc/bounds.hpp"
#include "bmpc/condense.hpp"
#include "bmpc/csv.hpp"
#include "bmpc/error.hpp"
#include "bmpc/explicit_mpc.hpp"
#include "bmpc/lp.hpp"
#include "bmpc/parallel.hpp"
#include "bmpc/problem_io.hpp"
#include "bmpc/rollout.hpp"
#include "bmpc/smoothing.hpp"
#include "json.hpp"
#include "verify.hpp"

namespace bmpc::cli {

namespace {

using nlohmann::json;

struct Common {
  std::string problem;
  std::optional<std::uint64_t> seed;
  int jobs = 1;
  std::string output_dir;
  std::string hessian;
};

struct Context {
  MpcSpec spec;
  std::shared_ptr<CondensedQp> qp;
  std::uint64_t seed = 0;
};

std::uint64_t resolve_seed(const std::optional<std::uint64_t>& flag) {
  if (flag) return *flag;
  if (const char* env = std::getenv("BARRIER_MPC_SEED")) {
    try {
      std::size_t pos = 0;
      const auto v = std::stoull(env, &pos);
      if (pos == std::string(env).size()) return v;
    } catch (const std::exception&) {
    }
    fail(ErrorCode::kInvalidArgument, std::string("BARRIER_MPC_SEED is not an unsigned integer: ") + env);
  }
  return 0;
}

Context load(const Common& common) {
  Context ctx;
  ctx.spec = common.problem.empty() ? double_integrator_spec() : load_problem(common.problem);
  if (!common.hessian.empty()) ctx.spec.hessian = parse_hessian_convention(common.hessian);
  ctx.qp = std::make_shared<CondensedQp>(condense(ctx.spec));
  ctx.seed = resolve_seed(common.seed);
  if (common.jobs < 1) fail(ErrorCode::kInvalidArgument, "--jobs must be >= 1");
  return ctx;
}

Vector parse_vector(const std::string& text, Eigen::Index dim, const char* what) {
  std::vector<double> vals;
  std::stringstream ss(text);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    try {
      std::size_t pos = 0;
      vals.push_back(std::stod(tok, &pos));
      if (pos != tok.size()) throw std::invalid_argument(tok);
    } catch (const std::exception&) {
      fail(ErrorCode::kInvalidArgument, std::string(what) + ": not a number: '" + tok + "'");
    }
  }
  if (static_cast<Eigen::Index>(vals.size()) != dim) {
    fail(ErrorCode::kDimensionMismatch,
         std::string(what) + ": expected " + std::to_string(dim) + " comma-separated values");
  }
  return Eigen::Map<Vector>(vals.data(), dim);
}

std::string row(const Vector& v) {
  std::vector<std::string> f;
  for (Eigen::Index i = 0; i < v.size(); ++i) f.push_back(csv::format(v(i)));
  return csv::join(f);
}

void write_matrix(std::ostream& out, const Matrix& m) {
  for (Eigen::Index i = 0; i < m.rows(); ++i) out << row(m.row(i).transpose()) << '\n';
}

std::ofstream open_output(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream f(path);
  if (!f) fail(ErrorCode::kIo, "cannot write " + path.string());
  return f;
}

std::filesystem::path in_dir(const Common& c, const std::string& name) {
  return c.output_dir.empty() ? std::filesystem::path(name) : std::filesystem::path(c.output_dir) / name;
}

// Bounding box of scale * X.
std::pair<Vector, Vector> state_box(const MpcSpec& spec, double scale) {
  const auto& x = spec.state_set;
  Vector lo(x.dim()), hi(x.dim());
  for (Eigen::Index i = 0; i < x.dim(); ++i) {
    Vector c = Vector::Zero(x.dim());
    c(i) = 1.0;
    const auto mn = lp::solve_lp(c, x.a(), scale * x.b());
    const auto mx = lp::solve_lp(-c, x.a(), scale * x.b());
    if (mn.status != lp::LpStatus::kOptimal || mx.status != lp::LpStatus::kOptimal) {
      fail(ErrorCode::kInvalidArgument, "state set must be bounded");
    }
    lo(i) = mn.x(i);
    hi(i) = mx.x(i);
  }
  return {lo, hi};
}

BarrierConfig barrier_config(double eta, double tol, int iters) {
  BarrierConfig cfg;
  cfg.eta = eta;
  cfg.newton_tol = tol;
  cfg.max_newton_iters = iters;
  cfg.validate();
  return cfg;
}

json vector_json(const Vector& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

void add_common(CLI::App* sub, Common& c) {
  sub->add_option("--problem", c.problem, "Problem JSON (default: built-in double integrator, T=10)");
  sub->add_option("--seed", c.seed, "RNG seed (fallback: $BARRIER_MPC_SEED, then 0)");
  sub->add_option("--jobs", c.jobs, "Worker threads")->check(CLI::PositiveNumber);
  sub->add_option("--output-dir", c.output_dir, "Directory for output files");
  sub->add_option("--hessian", c.hessian, "Condensed-cost convention: stage-cost (default) | half");
}

}  // namespace

std::vector<double> parse_sweep(const std::string& text) {
  const auto first = text.find(':');
  if (first == std::string::npos) {
    std::vector<double> out;
    std::stringstream ss(text);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
      try {
        out.push_back(std::stod(tok));
      } catch (const std::exception&) {
        fail(ErrorCode::kInvalidArgument, "sweep: not a number: '" + tok + "'");
      }
    }
    if (out.empty()) fail(ErrorCode::kInvalidArgument, "sweep: empty list");
    return out;
  }
  const auto second = text.find(':', first + 1);
  if (second == std::string::npos) fail(ErrorCode::kInvalidArgument, "sweep: expected start:stop:logN");
  double start = 0.0, stop = 0.0;
  int count = 0;
  bool log = true;
  try {
    start = std::stod(text.substr(0, first));
    stop = std::stod(text.substr(first + 1, second - first - 1));
    const std::string tail = text.substr(second + 1);
    if (tail.rfind("log", 0) == 0) {
      log = true;
    } else if (tail.rfind("lin", 0) == 0) {
      log = false;
    } else {
      throw std::invalid_argument(tail);
    }
    std::size_t pos = 0;
    count = std::stoi(tail.substr(3), &pos);
    if (pos != tail.size() - 3) throw std::invalid_argument(tail);
  } catch (const std::exception&) {
    fail(ErrorCode::kInvalidArgument, "sweep: expected start:stop:logN, got '" + text + "'");
  }
  if (count < 1) fail(ErrorCode::kInvalidArgument, "sweep: N must be >= 1");
  if (log && !(start > 0.0 && stop > 0.0)) fail(ErrorCode::kInvalidArgument, "sweep: log range needs positive ends");
  std::vector<double> out;
  for (int k = 0; k < count; ++k) {
    const double s = count == 1 ? 0.0 : static_cast<double>(k) / (count - 1);
    out.push_back(log ? std::pow(10.0, std::log10(start) + s * (std::log10(stop) - std::log10(start)))
                      : start + s * (stop - start));
  }
  if (count > 1) {
    out.front() = start;
    out.back() = stop;
  }
  return out;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Log-barrier smoothed MPC for constrained linear systems"};
  app.require_subcommand(1);

  Common common;
  double eta = 1.0, newton_tol = 1e-10, eps = 1.0, jac_step = 1e-3, rel_step = 0.0, extent = 1.0;
  int max_iters = 500, grid = 50, steps = 20, n_traj = 50, directions = 4;
  std::size_t samples = 1000;
  std::string x0_text, dist = "gaussian", policy_name = "barrier", out_path, etas, epss;

  auto* condense_cmd = app.add_subcommand("condense", "Print the condensed QP (H, F, G, P, w)");
  add_common(condense_cmd, common);

  auto* solve_cmd = app.add_subcommand("solve", "Barrier MPC solve at x0: inputs, residual, Jacobian");
  add_common(solve_cmd, common);
  solve_cmd->add_option("--x0", x0_text, "Initial state, comma-separated")->required();
  solve_cmd->add_option("--eta", eta, "Barrier weight")->check(CLI::PositiveNumber);
  solve_cmd->add_option("--newton-tol", newton_tol, "Newton decrement tolerance");
  solve_cmd->add_option("--max-iters", max_iters, "Newton iteration budget");

  auto* explicit_cmd = app.add_subcommand("explicit", "Exact MPC solve (active set) at x0");
  add_common(explicit_cmd, common);
  explicit_cmd->add_option("--x0", x0_text, "Initial state, comma-separated")->required();

  auto* pieces_cmd = app.add_subcommand("pieces", "Census of explicit-MPC pieces on a state grid");
  add_common(pieces_cmd, common);
  pieces_cmd->add_option("--grid", grid, "Points per state dimension")->check(CLI::PositiveNumber);
  pieces_cmd->add_option("--extent", extent, "Grid box as a fraction of the state set's bounding box");
  pieces_cmd->add_option("--out", out_path, "CSV file (default: stdout)");

  auto* rs_cmd = app.add_subcommand("rs-solve", "Randomized-smoothing policy at x0");
  add_common(rs_cmd, common);
  rs_cmd->add_option("--x0", x0_text, "Initial state, comma-separated")->required();
  rs_cmd->add_option("--dist", dist, "gaussian | uniform-ball | uniform-box");
  rs_cmd->add_option("--eps", eps, "Noise magnitude")->check(CLI::PositiveNumber);
  rs_cmd->add_option("--samples", samples, "Monte Carlo samples")->check(CLI::PositiveNumber);
  rs_cmd->add_option("--jacobian-step", jac_step, "Finite-difference step for the smoothed Jacobian");

  auto* rollout_cmd = app.add_subcommand("rollout", "Closed-loop rollout from x0");
  add_common(rollout_cmd, common);
  rollout_cmd->add_option("--x0", x0_text, "Initial state, comma-separated")->required();
  rollout_cmd->add_option("--policy", policy_name, "barrier | explicit | randomized");
  rollout_cmd->add_option("--eta", eta, "Barrier weight")->check(CLI::PositiveNumber);
  rollout_cmd->add_option("--eps", eps, "Randomized-smoothing noise")->check(CLI::PositiveNumber);
  rollout_cmd->add_option("--dist", dist, "Randomized-smoothing distribution");
  rollout_cmd->add_option("--samples", samples, "Randomized-smoothing samples")->check(CLI::PositiveNumber);
  rollout_cmd->add_option("--steps", steps, "Closed-loop steps K")->check(CLI::NonNegativeNumber);
  rollout_cmd->add_option("--out", out_path, "CSV file (default: stdout)");

  auto* sweep_cmd = app.add_subcommand("sweep", "L0/L1 smoothness sweep over eta or epsilon");
  add_common(sweep_cmd, common);
  auto* etas_opt = sweep_cmd->add_option("--etas", etas, "Barrier weights, e.g. 1e-4:1e3:log25");
  auto* epss_opt = sweep_cmd->add_option("--epss", epss, "Smoothing magnitudes, e.g. 1e-4:20:log20");
  etas_opt->excludes(epss_opt);
  sweep_cmd->add_option("--grid", grid, "Points per state dimension")->check(CLI::PositiveNumber);
  sweep_cmd->add_option("--extent", extent, "Grid box as a fraction of the state set's bounding box");
  sweep_cmd->add_option("--directions", directions, "Random directions per state for L1")
      ->check(CLI::PositiveNumber);
  sweep_cmd->add_option("--relative-step", rel_step, "Finite-difference step / grid extent (0: half the grid spacing)");
  sweep_cmd->add_option("--dist", dist, "Randomized-smoothing distribution");
  sweep_cmd->add_option("--samples", samples, "Randomized-smoothing samples")->check(CLI::PositiveNumber);
  sweep_cmd->add_option("--out", out_path, "CSV file; a .json metadata sidecar is written next to it");

  auto* bounds_cmd = app.add_subcommand("bounds", "Bound constants (nu, res_lb, L, C, ...) at x0");
  add_common(bounds_cmd, common);
  bounds_cmd->add_option("--eta", eta, "Barrier weight")->check(CLI::PositiveNumber);
  bounds_cmd->add_option("--x0", x0_text, "Initial state (default: origin)");
  bounds_cmd->add_option("--grid", grid, "Grid for the sampled sigma set")->check(CLI::PositiveNumber);

  auto* verify_cmd = app.add_subcommand("verify", "Run the invariant suite; exit 3 on any violation");
  add_common(verify_cmd, common);
  int verify_grid = 12;
  verify_cmd->add_option("--grid", verify_grid, "Points per state dimension in grid checks")
      ->check(CLI::PositiveNumber);

  auto* export_cmd = app.add_subcommand("export-dataset", "Roll out N trajectories and write the dataset CSV");
  add_common(export_cmd, common);
  export_cmd->add_option("--policy", policy_name, "barrier | explicit | randomized");
  export_cmd->add_option("--eta", eta, "Barrier weight")->check(CLI::PositiveNumber);
  export_cmd->add_option("--eps", eps, "Randomized-smoothing noise")->check(CLI::PositiveNumber);
  export_cmd->add_option("--dist", dist, "Randomized-smoothing distribution");
  export_cmd->add_option("--samples", samples, "Randomized-smoothing samples")->check(CLI::PositiveNumber);
  export_cmd->add_option("--n-traj", n_traj, "Trajectories N")->check(CLI::PositiveNumber);
  export_cmd->add_option("--steps", steps, "Steps per trajectory K")->check(CLI::PositiveNumber);
  export_cmd->add_option("--out", out_path, "Dataset CSV path")->required();

  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    if (code != 0) err << app.help();
    return code == 0 ? kOk : kConfigError;
  }

  try {
    const Context ctx = load(common);
    const CondensedQp& qp = *ctx.qp;
    const auto dx = qp.state_dim;
    out << std::setprecision(17);

    auto make_policy = [&](std::shared_ptr<PieceCache> cache) -> Policy {
      if (policy_name == "barrier") return make_barrier_policy(ctx.qp, barrier_config(eta, newton_tol, max_iters));
      if (policy_name == "explicit") return make_explicit_policy(ctx.qp, cache);
      if (policy_name == "randomized") {
        SmoothingSpec s{parse_distribution(dist), eps, samples, ctx.seed};
        return make_randomized_policy(ctx.qp, s, cache, jac_step);
      }
      fail(ErrorCode::kInvalidArgument, "unknown policy '" + policy_name + "'");
    };

    if (*condense_cmd) {
      out << "m," << qp.m() << "\nn," << qp.n() << "\nstate_dim," << dx << "\ninput_dim," << qp.input_dim
          << "\nhorizon," << qp.horizon << '\n';
      const std::pair<const char*, Matrix> blocks[] = {
          {"H", qp.h}, {"F", qp.f}, {"G", qp.g}, {"P", qp.p}, {"w", qp.w}};
      for (const auto& [name, mat] : blocks) {
        if (common.output_dir.empty()) {
          out << "[" << name << "]\n";
          write_matrix(out, mat);
        } else {
          auto f = open_output(in_dir(common, std::string(name) + ".csv"));
          write_matrix(f, mat);
        }
      }
      return kOk;
    }

    if (*solve_cmd) {
      const Vector x0 = parse_vector(x0_text, dx, "--x0");
      const auto sol = solve_barrier(qp, barrier_config(eta, newton_tol, max_iters), x0);
      out << "u0," << row(sol.u_eta.head(qp.input_dim)) << "\nu," << row(sol.u_eta) << "\nmin_residual,"
          << csv::format(sol.phi.minCoeff()) << "\nnewton_iters," << sol.newton_iters << "\ndecrement,"
          << csv::format(sol.decrement) << "\nconverged," << (sol.converged ? 1 : 0) << '\n';
      for (Eigen::Index i = 0; i < sol.jacobian.rows(); ++i) {
        out << "jacobian_" << i << ',' << row(sol.jacobian.row(i).transpose()) << '\n';
      }
      if (!sol.converged) {
        err << "error: Newton iteration did not converge within " << max_iters << " iterations\n";
        return kSolverFailure;
      }
      return kOk;
    }

    if (*explicit_cmd) {
      const Vector x0 = parse_vector(x0_text, dx, "--x0");
      const auto sol = solve_qp(qp, x0);
      out << "u0," << row(sol.u_star.head(qp.input_dim)) << "\nu," << row(sol.u_star) << "\nsigma,"
          << sol.sigma.to_string() << "\nlambda," << row(sol.lambda) << "\niterations," << sol.iterations
          << "\nkkt_residual," << csv::format(kkt_residual(qp, x0, sol).max()) << '\n';
      return kOk;
    }

    if (*pieces_cmd) {
      const auto [lo, hi] = state_box(ctx.spec, extent);
      const auto census = enumerate_pieces(qp, StateGrid::uniform(lo, hi, grid), common.jobs);
      std::ofstream file;
      if (!out_path.empty()) file = open_output(out_path);
      std::ostream& sink = out_path.empty() ? out : file;
      sink << "sigma_bitmask,count,K_frobenius_norm\n";
      for (const auto& [sigma, count] : census.counts) {
        double knorm = std::nan("");
        try {
          knorm = piece_gains(qp, sigma).gain.norm();
        } catch (const Error& e) {
          if (e.code() != ErrorCode::kDegenerate) throw;
        }
        sink << sigma.to_string() << ',' << count << ',' << csv::format(knorm) << '\n';
      }
      err << "grid=" << grid << "x" << grid << " distinct=" << census.distinct() << " evaluated=" << census.evaluated
          << " infeasible=" << census.infeasible << " degenerate=" << census.degenerate << '\n';
      return kOk;
    }

    if (*rs_cmd) {
      const Vector x0 = parse_vector(x0_text, dx, "--x0");
      const SmoothingSpec s{parse_distribution(dist), eps, samples, ctx.seed};
      PieceCache cache;
      const auto res = randomized_policy(qp, s, x0, cache, common.jobs);
      const Matrix jac = smoothed_jacobian(qp, s, x0, jac_step, cache, common.jobs);
      out << "u0_mean," << row(res.mean) << "\nu0_stderr," << row(res.stderr_) << "\nsamples," << res.samples
          << "\nprojected," << res.projected << "\nprojection_rate," << csv::format(res.projection_rate())
          << "\noutside_state_fraction," << csv::format(res.outside_fraction()) << '\n';
      for (Eigen::Index i = 0; i < jac.rows(); ++i) {
        out << "jacobian_" << i << ',' << row(jac.row(i).transpose()) << '\n';
      }
      return kOk;
    }

    if (*rollout_cmd) {
      const Vector x0 = parse_vector(x0_text, dx, "--x0");
      auto cache = std::make_shared<PieceCache>();
      const auto traj = closed_loop(ctx.spec, make_policy(cache), x0, steps);
      std::ofstream file;
      if (!out_path.empty()) file = open_output(out_path);
      std::ostream& sink = out_path.empty() ? out : file;
      std::vector<std::string> header{"t"};
      for (Eigen::Index i = 0; i < dx; ++i) header.push_back("x_" + std::to_string(i));
      for (Eigen::Index i = 0; i < qp.input_dim; ++i) header.push_back("u_" + std::to_string(i));
      header.push_back("feasible");
      sink << csv::join(header) << '\n';
      for (std::size_t t = 0; t < traj.states.size(); ++t) {
        sink << t << ',' << row(traj.states[t]) << ',';
        if (t < traj.steps()) {
          sink << row(traj.inputs[t]) << ',' << (traj.feasible[t] ? 1 : 0) << '\n';
        } else {
          sink << std::string(static_cast<std::size_t>(qp.input_dim), ',') << '\n';
        }
      }
      if (traj.halted) err << "warning: state left X at step " << traj.steps() << '\n';
      return kOk;
    }

    if (*sweep_cmd) {
      if (etas.empty() && epss.empty()) fail(ErrorCode::kInvalidArgument, "sweep needs --etas or --epss");
      const bool barrier = !etas.empty();
      const auto params = parse_sweep(barrier ? etas : epss);
      const auto [lo, hi] = state_box(ctx.spec, extent);
      const StateGrid sgrid = StateGrid::uniform(lo, hi, grid);
      SmoothnessOptions opt;
      opt.directions = directions;
      opt.relative_step = rel_step;
      opt.seed = ctx.seed;
      opt.jobs = common.jobs;
      const double h = smoothness_step(sgrid, opt);
      auto cache = std::make_shared<PieceCache>();
      const auto noise = parse_distribution(dist);
      std::function<JacobianProbe(double)> family;
      if (barrier) {
        family = [&](double p) { return barrier_jacobian_probe(ctx.qp, barrier_config(p, newton_tol, max_iters)); };
      } else {
        family = [&](double p) {
          return randomized_jacobian_probe(ctx.qp, SmoothingSpec{noise, p, samples, ctx.seed}, cache, h);
        };
      }
      const auto rows = smoothness_sweep(family, params, sgrid, opt);
      if (out_path.empty()) {
        write_sweep_csv(out, rows);
      } else {
        auto f = open_output(out_path);
        write_sweep_csv(f, rows);
        json meta = {{"command", "sweep"},
                     {"policy", barrier ? "barrier" : "randomized"},
                     {"parameters", params},
                     {"grid", grid},
                     {"grid_lower", vector_json(lo)},
                     {"grid_upper", vector_json(hi)},
                     {"directions", directions},
                     {"relative_step", rel_step},
                     {"seed", ctx.seed},
                     {"problem", common.problem.empty() ? "builtin:double_integrator" : common.problem}};
        if (!barrier) {
          meta["distribution"] = to_string(noise);
          meta["samples"] = samples;
        }
        auto side = open_output(std::filesystem::path(out_path).replace_extension(".json"));
        side << meta.dump(2) << '\n';
      }
      return kOk;
    }

    if (*bounds_cmd) {
      const Vector x0 = x0_text.empty() ? Vector(Vector::Zero(dx)) : parse_vector(x0_text, dx, "--x0");
      const auto [lo, hi] = state_box(ctx.spec, 1.0);
      const auto census = enumerate_pieces(qp, StateGrid::uniform(lo, hi, grid), common.jobs);
      std::vector<ActiveSet> seeds;
      for (const auto& kv : census.counts) seeds.push_back(kv.first);
      const auto sigmas = sampled_sigma_set(qp, seeds);
      const auto rep = bounds_report(qp, eta, x0, sigmas);
      out << "eta=" << csv::format(rep.eta) << "\nm=" << qp.m() << "\nr=" << csv::format(rep.geometry.inner_radius)
          << "\nR=" << csv::format(rep.geometry.outer_radius) << "\nL_V=" << csv::format(rep.geometry.lipschitz)
          << "\nalpha=" << csv::format(rep.geometry.strong_convexity) << "\nnu=" << csv::format(rep.nu)
          << "\nres_lb=" << csv::format(rep.res_lb) << "\nsubopt_ub=" << csv::format(rep.subopt_ub)
          << "\nL=" << csv::format(rep.lipschitz_jacobian) << "\nC=" << csv::format(rep.hessian_constant)
          << "\nhess_ub=" << csv::format(rep.hess_ub) << "\nsigma_count=" << rep.sigma_count << '\n';
      return kOk;
    }

    if (*verify_cmd) {
      VerifyOptions opt;
      opt.seed = ctx.seed;
      opt.jobs = common.jobs;
      opt.grid = verify_grid;
      const auto results = run_verify_suite(ctx.spec, opt);
      std::size_t failed = 0;
      std::size_t width = 5;
      for (const auto& r : results) width = std::max(width, r.name.size());
      out << std::left << std::setw(static_cast<int>(width)) << "check" << "  status  detail\n";
      for (const auto& r : results) {
        const char* status = r.skipped ? "SKIP" : (r.passed ? "PASS" : "FAIL");
        if (!r.skipped && !r.passed) ++failed;
        out << std::left << std::setw(static_cast<int>(width)) << r.name << "  " << std::setw(6) << status << "  "
            << r.detail << '\n';
      }
      out << failed << " of " << results.size() << " checks failed\n";
      return failed == 0 ? kOk : kVerificationFailure;
    }

    if (*export_cmd) {
      auto cache = std::make_shared<PieceCache>();
      const Policy policy = make_policy(cache);
      const auto starts = sample_initial_states(qp, ctx.spec.state_set, static_cast<std::size_t>(n_traj), ctx.seed);
      std::vector<Trajectory> trajs(starts.size());
      parallel_for(starts.size(), common.jobs,
                   [&](std::size_t i) { trajs[i] = closed_loop(ctx.spec, policy, starts[i], steps); });
      export_dataset(trajs, out_path);
      std::size_t rows = 0;
      for (const auto& t : trajs) rows += t.steps();
      json meta = {{"command", "export-dataset"},
                   {"policy", policy_name},
                   {"n_traj", n_traj},
                   {"steps", steps},
                   {"rows", rows},
                   {"seed", ctx.seed},
                   {"initial_state_distribution", "uniform on the bounding box of 0.8 X, rejecting infeasible"},
                   {"problem", common.problem.empty() ? "builtin:double_integrator" : common.problem}};
      if (policy_name == "barrier") meta["eta"] = eta;
      if (policy_name == "randomized") {
        meta["epsilon"] = eps;
        meta["distribution"] = dist;
        meta["samples"] = samples;
      }
      auto side = open_output(std::filesystem::path(out_path).replace_extension(".json"));
      side << meta.dump(2) << '\n';
      out << "rows," << rows << '\n';
      return kOk;
    }
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return e.is_config_error() ? kConfigError : kSolverFailure;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kSolverFailure;
  }
  return kConfigError;
}

}  // namespace bmpc::cli
