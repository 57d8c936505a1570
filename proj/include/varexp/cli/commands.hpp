#pragma once

// Subcommand runners. Each writes its artifacts into the output directory together with a
// manifest.json and returns the process exit code:
//   0  every check holds, 1  a check failed, 2  a solver failed, 3  configuration error.

#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <iostream>
#include <random>
#include <string>
#include <vector>

#include "varexp/cli/config.hpp"
#include "varexp/io.hpp"
#include "varexp/sampling.hpp"
#include "varexp/version.hpp"

namespace varexp::cli {

enum ExitCode : int { kOk = 0, kCheckFailed = 1, kSolverFailed = 2, kConfigError = 3 };

class Output {
 public:
  Output(std::filesystem::path dir, std::string command) : dir_(std::move(dir)), command_(std::move(command)) {
    std::filesystem::create_directories(dir_);
  }

  std::string path(const std::string& name) {
    const std::filesystem::path p = dir_ / name;
    std::filesystem::create_directories(p.parent_path());
    artifacts_.push_back(name);
    return p.string();
  }

  void json(const std::string& name, const io::Json& j) { io::write_json(path(name), j); }
  void nodal_csv(const std::string& name, const GridFunction& u) { write_csv(path(name), u); }
  void cell_csv(const std::string& name, const Grid& g, const std::vector<double>& v) {
    io::write_cell_csv(path(name), g, v);
  }

  /// Writes manifest.json; the only artifact carrying a timestamp.
  void manifest(const std::vector<const RunConfig*>& configs) {
    io::Json j;
    j["command"] = command_;
    io::Json paths = io::Json::array();
    io::Json hashes = io::Json::array();
    for (const RunConfig* c : configs) {
      paths.push_back(c->path);
      hashes.push_back(hex(c->hash));
    }
    j["config_path"] = configs.size() == 1 ? paths[0] : paths;
    j["config_hash"] = configs.size() == 1 ? hashes[0] : hashes;
    j["library_version"] = kVersion;
    j["timestamp"] = utc_now();
    j["artifacts"] = artifacts_;
    io::write_json((dir_ / "manifest.json").string(), j);
  }

  static std::string hex(std::uint64_t h) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
  }

 private:
  static std::string utc_now() {
    const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
  }

  std::filesystem::path dir_;
  std::string command_;
  std::vector<std::string> artifacts_;
};

namespace detail {

inline std::filesystem::path out_dir(const RunConfig& rc, const std::string& override_dir) {
  return override_dir.empty() ? std::filesystem::path(rc.output_dir) : std::filesystem::path(override_dir);
}

inline int verdict_code(bool holds) { return holds ? kOk : kCheckFailed; }

}  // namespace detail

// -- check-picone -----------------------------------------------------------------------

inline int run_check_picone(const RunConfig& rc, Output& out) {
  const PiconeRun& run = *rc.picone;
  const OperatorKernel& k = *rc.kernel->kernel;
  const Grid& g = rc.grid;
  auto one = [&](const GridFunction& v, const GridFunction& v0, const std::optional<GridFunction>& v2,
                 const std::optional<GridFunction>& v02) {
    if (run.form == "pair") return picone_plap_pair_gap(v, v0, run.r, *rc.p, run.opts);
    if (run.form == "aniso") {
      const AnisoKernel ak{{k, plap(*run.p_2_expr)}};
      return aniso_picone_gap(ak, {v, *v2}, {v0, *v02}, run.r, run.opts);
    }
    return picone_gap(k, v, v0, run.r, run.opts);
  };
  const PiconeReport rep = one(*run.v, *run.v0, run.v_2, run.v0_2);
  out.cell_csv("gaps.csv", g, rep.gaps);

  std::mt19937_64 rng(rc.seed);
  bool trials_ok = true;
  double trial_min = std::numeric_limits<double>::infinity();
  int trial_violations = 0;
  for (int t = 0; t < run.trials; ++t) {
    GridFunction a = random_sine_series(g, rng);
    GridFunction b = random_sine_series(g, rng);
    std::optional<GridFunction> a2, b2;
    if (run.form == "aniso") {
      a2 = random_sine_series(g, rng);
      b2 = random_sine_series(g, rng);
    }
    const PiconeReport r = one(a, b, a2, b2);
    trials_ok = trials_ok && r.verified;
    trial_violations += r.verified ? 0 : 1;
    trial_min = std::min(trial_min, r.min_gap);
  }
  const bool holds = rep.verified && trials_ok;
  io::Json j;
  j["form"] = run.form;
  j["r"] = run.r;
  j["report"] = io::to_json(rep);
  j["trials"] = {{"count", run.trials}, {"failures", trial_violations}, {"min_gap", io::number(trial_min)}};
  j["holds"] = holds;
  out.json("report.json", j);
  return detail::verdict_code(holds);
}

// -- check-diaz-saa ---------------------------------------------------------------------

inline int run_check_diaz_saa(const RunConfig& rc, Output& out) {
  const DiazSaaRun& run = *rc.diaz_saa;
  const OperatorKernel& k = *rc.kernel->kernel;
  const DiazSaaReport rep = diaz_saa_check(k, *run.w1, *run.w2, run.r, run.floor);
  const DiazSaaReport swapped = diaz_saa_check(k, *run.w2, *run.w1, run.r, run.floor);
  out.nodal_csv("w1.csv", *run.w1);
  out.nodal_csv("w2.csv", *run.w2);

  std::mt19937_64 rng(rc.seed);
  int failures = 0;
  double worst = std::numeric_limits<double>::infinity();
  for (int t = 0; t < run.trials; ++t) {
    const GridFunction a = random_sine_series(rc.grid, rng);
    const GridFunction b = random_sine_series(rc.grid, rng);
    const DiazSaaReport r = diaz_saa_check(k, a, b, run.r, run.floor);
    failures += r.holds ? 0 : 1;
    worst = std::min(worst, r.integral / r.scale);
  }
  const bool symmetric = rep.integral == swapped.integral;
  const bool holds = rep.holds && symmetric && failures == 0;
  io::Json j;
  j["r"] = run.r;
  j["report"] = io::to_json(rep);
  j["swapped_integral"] = io::number(swapped.integral);
  j["symmetric"] = symmetric;
  j["trials"] = {{"count", run.trials}, {"failures", failures}, {"min_scaled_integral", io::number(worst)}};
  j["holds"] = holds;
  out.json("report.json", j);
  return detail::verdict_code(holds);
}

// -- check-norms ------------------------------------------------------------------------

inline int run_check_norms(const RunConfig& rc, Output& out) {
  const NormsRun& run = *rc.norms;
  const ExponentField& p = *rc.p;
  const NormModularReport nm = check_norm_modular_bounds(*run.u, p);
  const InequalityReport hold = holder_check(*run.u, *run.g, p);
  out.cell_csv("u.csv", rc.grid, run.u->vector());

  std::mt19937_64 rng(rc.seed);
  std::uniform_real_distribution<double> scale(-3.0, 3.0);
  int failures = 0;
  for (int t = 0; t < run.trials; ++t) {
    const double s = std::pow(10.0, scale(rng));
    const CellField u = random_cells(rc.grid, rng, -s, s);
    const CellField g = random_cells(rc.grid, rng, -1.0, 1.0);
    const bool ok = check_norm_modular_bounds(u, p).holds && holder_check(u, g, p).holds;
    failures += ok ? 0 : 1;
  }
  const bool holds = nm.holds && hold.holds && failures == 0;
  io::Json j;
  j["p_minus"] = p.p_minus();
  j["p_plus"] = p.p_plus();
  j["norm_modular"] = io::to_json(nm);
  j["holder"] = io::to_json(hold);
  j["trials"] = {{"count", run.trials}, {"failures", failures}};
  j["holds"] = holds;
  out.json("report.json", j);
  return detail::verdict_code(holds);
}

// -- solve-elliptic ---------------------------------------------------------------------

inline int run_solve_elliptic(const RunConfig& rc, Output& out) {
  const EllipticRun& run = *rc.elliptic;
  const EllipticProblem& prob = *run.problem;
  const SolveReport rep = minimize(prob, *run.init, run.solver);
  out.nodal_csv("solution.csv", rep.solution);
  const std::string family = family_name(prob.family);
  const bool expects_positive = family == "torsion" || family == "reaction_pq";
  bool holds = rep.linf_bound_ok.value_or(true);
  if (expects_positive) holds = holds && rep.positivity && rep.hopf_ok;
  io::Json j;
  j["family"] = family;
  j["n_cells"] = rc.grid.n_cells();
  j["p_minus"] = prob.p.p_minus();
  j["p_plus"] = prob.p.p_plus();
  j["solver"] = io::to_json(rep, run.solver.record_trace);
  j["positivity"] = io::to_json(positivity_and_hopf_check(rep.solution));
  j["checks_hold"] = holds;
  out.json("report.json", j);
  if (!rep.converged) return kSolverFailed;
  return detail::verdict_code(holds);
}

// -- solve-fde --------------------------------------------------------------------------

inline io::Json trajectory_json(const FdeTrajectory& traj) {
  io::Json steps = io::Json::array();
  for (std::size_t n = 0; n < traj.reports.size(); ++n) {
    io::Json s = {{"n", n + 1},
                  {"t", io::number(traj.dt * static_cast<double>(n + 1))},
                  {"iterations", traj.reports[n].iterations},
                  {"residual_sup", io::number(traj.reports[n].residual_sup)},
                  {"converged", traj.reports[n].converged}};
    if (n < traj.bracket_defect.size()) s["bracket_defect"] = io::number(traj.bracket_defect[n]);
    if (n < traj.increments.size()) s["increment"] = io::number(traj.increments[n]);
    steps.push_back(std::move(s));
  }
  return {{"dt", traj.dt}, {"q", traj.q}, {"steps", steps}};
}

inline io::Json fde_summary(const FdeTrajectory& traj) {
  return {{"completed", traj.completed},
          {"failure", traj.failure},
          {"n_steps", traj.h_avg.size()},
          {"dt", traj.dt},
          {"sub_mu", traj.sub_mu},
          {"sup_K", traj.sup_K},
          {"bracketing_ok", traj.bracketing_ok},
          {"positivity_ok", traj.positivity_ok},
          {"increment_sum", io::number(traj.increment_sum)},
          {"jensen", io::to_json(traj.jensen)}};
}

inline void write_trajectory(const FdeTrajectory& traj, Output& out, const std::string& prefix = "") {
  char name[64];
  for (std::size_t n = 0; n < traj.steps.size(); ++n) {
    std::snprintf(name, sizeof name, "%ssteps/v_%04zu.csv", prefix.c_str(), n);
    out.nodal_csv(name, traj.steps[n]);
  }
  out.nodal_csv(prefix + "subsolution.csv", traj.sub);
  out.nodal_csv(prefix + "supersolution.csv", traj.sup);
  out.json(prefix + "trajectory.json", trajectory_json(traj));
}

inline int fde_code(const FdeTrajectory& traj) {
  if (!traj.completed) return kSolverFailed;
  return detail::verdict_code(traj.bracketing_ok && traj.positivity_ok && traj.jensen.holds);
}

inline int run_solve_fde(const RunConfig& rc, Output& out) {
  const FdeTrajectory traj = run_fde(*rc.fde);
  write_trajectory(traj, out);
  io::Json j = fde_summary(traj);
  j["holds"] = traj.completed && traj.bracketing_ok && traj.positivity_ok && traj.jensen.holds;
  out.json("report.json", j);
  return fde_code(traj);
}

inline int run_verify_contraction(const RunConfig& a, const RunConfig& b, Output& out) {
  const FdeConfig& ca = *a.fde;
  const FdeConfig& cb = *b.fde;
  std::vector<std::string> mismatch;
  if (!(ca.grid == cb.grid)) mismatch.push_back("configs must share the domain and n_cells");
  if (ca.p.cells().vector() != cb.p.cells().vector()) mismatch.push_back("configs must share exponent.p");
  if (ca.q != cb.q) mismatch.push_back("configs must share fde.q");
  if (ca.T != cb.T || ca.n_steps != cb.n_steps) mismatch.push_back("configs must share fde.T and fde.n_steps");
  if (!mismatch.empty()) throw ConfigError(std::move(mismatch));

  const FdeTrajectory ta = run_fde(ca);
  const FdeTrajectory tb = run_fde(cb);
  write_trajectory(ta, out, "a/");
  write_trajectory(tb, out, "b/");
  if (!ta.completed || !tb.completed) {
    out.json("report.json", {{"a", fde_summary(ta)}, {"b", fde_summary(tb)}, {"holds", false}});
    return kSolverFailed;
  }
  const ContractionReport cr = contraction_check(ta, tb);
  const Verdict cmp = comparison_check(ta, tb);
  const bool holds = cr.holds && cmp != Verdict::kViolated;
  out.json("report.json", {{"a", fde_summary(ta)},
                           {"b", fde_summary(tb)},
                           {"contraction", io::to_json(cr)},
                           {"comparison", verdict_name(cmp)},
                           {"holds", holds}});
  return detail::verdict_code(holds);
}

// -- probe-kernel -----------------------------------------------------------------------

inline int run_probe_kernel(const RunConfig& rc, Output& out) {
  const KernelRun& run = *rc.kernel;
  const OperatorKernel& k = *run.kernel;
  const std::uint64_t seed = rc.seed;
  const std::vector<ProbeReport> judged = {
      homogeneity_probe(k, run.samples, seed, run.domain),   convexity_probe(k, run.samples, seed, run.domain),
      symmetry_probe(k, run.samples, seed, run.domain),      euler_identity_probe(k, run.samples, seed, run.domain),
      grad_consistency(k, run.samples, seed, run.domain),
  };
  const ProbeReport lambda = lambda_probe(k, run.samples, seed, run.domain);

  const double xm = 0.5 * (run.domain.x_lo + run.domain.x_hi);
  const Grid xi_grid(-run.domain.xi_max, run.domain.xi_max, 256);
  std::vector<double> profile(xi_grid.n_nodes());
  for (int i = 0; i < xi_grid.n_nodes(); ++i) profile[i] = k.A(xm, xi_grid.node(i));
  out.nodal_csv("profile.csv", GridFunction(xi_grid, std::move(profile)));

  bool holds = true;
  io::Json probes = io::Json::array();
  for (const ProbeReport& r : judged) {
    holds = holds && r.holds;
    probes.push_back(io::to_json(r));
  }
  io::Json j;
  j["kernel"] = k.name();
  j["probes"] = probes;
  j["lambda"] = io::to_json(lambda);
  j["holds"] = holds;
  out.json("report.json", j);
  return detail::verdict_code(holds);
}

// -- dispatch ---------------------------------------------------------------------------

/// Runs `body`, translating library exceptions into exit codes and messages on stderr.
template <class Body>
int guarded(Body&& body) {
  try {
    return body();
  } catch (const ConfigError& e) {
    std::cerr << "configuration error:\n";
    for (const auto& v : e.violations()) std::cerr << "  " << v << '\n';
    return kConfigError;
  } catch (const BracketError& e) {
    std::cerr << "configuration error: " << e.what() << '\n';
    return kConfigError;
  } catch (const PreconditionError& e) {
    std::cerr << "configuration error: " << e.what() << '\n';
    return kConfigError;
  } catch (const Error& e) {
    std::cerr << "solver failure: " << e.what() << '\n';
    return kSolverFailed;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "i/o error: " << e.what() << '\n';
    return kSolverFailed;
  }
}

inline int run_command(Command command, const std::string& config_path, const std::string& out_override = "") {
  return guarded([&] {
    const RunConfig rc = load_config(config_path, command);
    Output out(detail::out_dir(rc, out_override), command_name(command));
    int code = kOk;
    switch (command) {
      case Command::kCheckPicone: code = run_check_picone(rc, out); break;
      case Command::kCheckDiazSaa: code = run_check_diaz_saa(rc, out); break;
      case Command::kCheckNorms: code = run_check_norms(rc, out); break;
      case Command::kSolveElliptic: code = run_solve_elliptic(rc, out); break;
      case Command::kSolveFde: code = run_solve_fde(rc, out); break;
      case Command::kProbeKernel: code = run_probe_kernel(rc, out); break;
    }
    out.manifest({&rc});
    return code;
  });
}

inline int run_contraction_command(const std::string& path_a, const std::string& path_b,
                                   const std::string& out_override = "") {
  return guarded([&] {
    const RunConfig a = load_config(path_a, Command::kSolveFde);
    const RunConfig b = load_config(path_b, Command::kSolveFde);
    Output out(detail::out_dir(a, out_override), "verify-contraction");
    const int code = run_verify_contraction(a, b, out);
    out.manifest({&a, &b});
    return code;
  });
}

}  // namespace varexp::cli
