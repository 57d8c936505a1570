#pragma once

// Implicit Euler scheme for the doubly nonlinear fast diffusion problem
//   d_t(v^q) - Delta_p v = h(t, x) v^{q-1} + f(x, v),   v = 0 on the boundary.
// Every step is one FdeStep elliptic solve with lambda = dt and
// h0 = dt h^n + v_{n-1}^q, where h^n is the time average of h over the step.

#include <algorithm>
#include <array>
#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "varexp/elliptic.hpp"
#include "varexp/error.hpp"
#include "varexp/expr.hpp"
#include "varexp/grid.hpp"
#include "varexp/vxspace.hpp"

namespace varexp {

struct FdeConfig {
  Grid grid;
  ExponentField p;
  double T = 1.0;
  int n_steps = 1;
  double q = 1.5;
  SourceF f;
  expr::Expression h;  ///< forcing h(t, x)
  GridFunction v0;
  bool relaxed_q = false;        ///< allow q up to p_- when f vanishes fast enough at 0
  bool h_bounded_below = false;  ///< replace the blow-up condition on f by min h > 0
  SolveOptions solver;
  std::vector<double> mu_grid = default_mu_grid();
  std::vector<double> k_grid = default_k_grid();

  double dt() const { return T / n_steps; }
};

// -- forcing -------------------------------------------------------------------

namespace detail {

inline double pairwise_sum(const double* v, std::size_t n) {
  if (n == 1) return v[0];
  if (n == 2) return v[0] + v[1];
  const std::size_t half = n / 2;
  return pairwise_sum(v, half) + pairwise_sum(v + half, n - half);
}

}  // namespace detail

/// h^n at cell centres: (1/dt) int_{t_{n-1}}^{t_n} h(s, x) ds by a composite midpoint rule in s
/// with `points` nodes, summed pairwise. A t-independent h is reproduced bit for bit.
inline std::vector<CellField> average_forcing(const expr::Expression& h, double dt, int n_steps, const Grid& grid,
                                              int points = 16) {
  if (!(dt > 0.0) || n_steps < 1 || points < 1) throw PreconditionError("averaging needs dt > 0, n_steps >= 1");
  std::vector<CellField> out;
  out.reserve(n_steps);
  std::vector<double> samples(points);
  for (int n = 1; n <= n_steps; ++n) {
    const double t0 = (n - 1) * dt;
    std::vector<double> cells(grid.n_cells());
    for (int i = 0; i < grid.n_cells(); ++i) {
      for (int k = 0; k < points; ++k) samples[k] = h(t0 + (k + 0.5) * dt / points, grid.center(i));
      cells[i] = detail::pairwise_sum(samples.data(), samples.size()) / points;
    }
    out.emplace_back(grid, std::move(cells));
  }
  return out;
}

struct JensenReport {
  double lhs = 0.0;  ///< sum_n dt ||h^n||^2
  double rhs = 0.0;  ///< ||h||^2 over the space-time cylinder, same quadrature
  bool holds = false;
};

inline JensenReport jensen_check(const expr::Expression& h, double dt, const std::vector<CellField>& averaged,
                                 int points = 16) {
  JensenReport r;
  if (averaged.empty()) throw PreconditionError("no averaged forcing");
  const Grid& g = averaged.front().grid();
  for (std::size_t n = 0; n < averaged.size(); ++n) {
    const double l2 = l2_cells(averaged[n]);
    r.lhs += dt * l2 * l2;
    const double t0 = static_cast<double>(n) * dt;
    for (int k = 0; k < points; ++k) {
      const double t = t0 + (k + 0.5) * dt / points;
      double s = 0.0;
      for (int i = 0; i < g.n_cells(); ++i) {
        const double v = h(t, g.center(i));
        s += v * v * g.h();
      }
      r.rhs += s * dt / points;
    }
  }
  r.holds = r.lhs <= r.rhs + 1e-12 * (1.0 + r.rhs);
  return r;
}

// -- validation ------------------------------------------------------------------

/// Every violated hypothesis of the scheme; empty when the configuration is admissible.
inline std::vector<std::string> validate(const FdeConfig& cfg) {
  std::vector<std::string> out;
  const double p_minus = cfg.p.p_minus();
  if (!(cfg.T > 0.0)) out.push_back("T > 0 violated");
  if (cfg.n_steps < 1) out.push_back("n_steps >= 1 violated");
  if (!(cfg.q > 1.0 && cfg.q <= p_minus)) out.push_back("q in (1, p_-] violated");
  if (!cfg.relaxed_q && cfg.q > 1.5) out.push_back("q <= min{N/2+1, p_-} violated");

  const SourceF& f = cfg.f;
  if (f.kind != SourceF::Kind::kZero && static_cast<int>(f.c.size()) != cfg.grid.n_cells()) {
    out.push_back("f needs one coefficient per cell");
  }
  if (std::any_of(f.c.begin(), f.c.end(), [](double v) { return !(v >= 0.0); })) out.push_back("f >= 0 violated");
  if (f.kind == SourceF::Kind::kConstant || (f.kind == SourceF::Kind::kPower && !(f.gamma > 1.0))) {
    out.push_back("f(x,0) = 0 violated");
  }
  if (f.is_zero() && !cfg.h_bounded_below) out.push_back("f not identically 0 violated");
  if (f.kind == SourceF::Kind::kPower && !f.is_zero()) {
    if (f.gamma > cfg.q) out.push_back("f(x,s)/s^(q-1) nonincreasing violated");
    if (!cfg.h_bounded_below && !(f.gamma < 2.0 * cfg.q)) out.push_back("f(x,s)/s^(2q-1) -> infinity as s -> 0 violated");
    if (cfg.relaxed_q && cfg.q > 1.5 && !(f.gamma > cfg.q - 0.5)) {
      out.push_back("f(x,s)/s^alpha -> 0 with alpha > q - 3/2 violated");
    }
  }

  if (!(cfg.v0.grid() == cfg.grid)) {
    out.push_back("v0 lives on a different grid");
  } else {
    bool positive = cfg.v0[0] == 0.0 && cfg.v0[cfg.v0.size() - 1] == 0.0;
    for (int i = 1; i + 1 < cfg.v0.size(); ++i) positive = positive && cfg.v0[i] > 0.0;
    if (!positive) out.push_back("v0 > 0 inside with zero trace violated");
  }

  if (cfg.T > 0.0 && cfg.n_steps >= 1) {
    try {
      const auto avg = average_forcing(cfg.h, cfg.dt(), cfg.n_steps, cfg.grid);
      double lo = INFINITY;
      double floor_max = 0.0;
      for (int i = 0; i < cfg.grid.n_cells(); ++i) {
        double cell_min = INFINITY;
        for (const CellField& c : avg) cell_min = std::min(cell_min, c[i]);
        lo = std::min(lo, cell_min);
        floor_max = std::max(floor_max, cell_min);
      }
      if (!(lo >= 0.0)) out.push_back("h >= h0 >= 0 violated");
      if (!(floor_max > 0.0)) out.push_back("h0 not identically 0 violated");
      if (cfg.h_bounded_below && !(lo > 0.0)) out.push_back("h >= c > 0 violated");
    } catch (const Error& e) {
      out.push_back(std::string("forcing h: ") + e.what());
    }
  }
  return out;
}

// -- stepping --------------------------------------------------------------------

/// FdeStep problem of one Euler step.
inline EllipticProblem euler_step_problem(const GridFunction& v_prev, const CellField& h_n, const FdeConfig& cfg) {
  require_same_grid(v_prev.grid(), cfg.grid);
  require_same_grid(h_n.grid(), cfg.grid);
  const double dt = cfg.dt();
  std::vector<double> h0 = cells_to_nodes(h_n);
  for (int i = 0; i < cfg.grid.n_nodes(); ++i) {
    h0[i] = dt * h0[i] + (v_prev[i] > 0.0 ? std::pow(v_prev[i], cfg.q) : 0.0);
  }
  return EllipticProblem{cfg.grid, cfg.p, FdeStep{dt, cfg.q, std::move(h0), cfg.f}};
}

/// Stationary problem -Delta_p v = h v^{q-1} + f(v) for a time-independent forcing.
inline EllipticProblem stationary_problem(const CellField& h, const FdeConfig& cfg) {
  return EllipticProblem{cfg.grid, cfg.p, Barrier{1.0, cells_to_nodes(h), cfg.q, cfg.f, 0.0}};
}

/// One implicit Euler step, warm-started from v_prev.
inline SolveReport euler_step(const GridFunction& v_prev, const CellField& h_n, const FdeConfig& cfg) {
  return minimize(euler_step_problem(v_prev, h_n, cfg), v_prev, cfg.solver);
}

struct FdeTrajectory {
  Grid grid;
  std::vector<double> p_cells;
  double dt = 0.0;
  double q = 1.0;
  std::vector<GridFunction> steps;  ///< v_0 ... v_n
  std::vector<CellField> h_avg;     ///< h^1 ... h^n
  GridFunction sub;
  GridFunction sup;
  double sub_mu = 0.0;
  double sup_K = 0.0;
  std::vector<SolveReport> reports;
  std::vector<double> increments;  ///< ||(v_n^q - v_{n-1}^q) / dt||^2, nodal
  double increment_sum = 0.0;      ///< sum_n dt * increments[n]
  std::vector<double> bracket_defect;  ///< per step: max(sub - v_n, v_n - sup, 0)
  bool bracketing_ok = true;
  bool positivity_ok = true;
  JensenReport jensen;
  bool completed = false;
  std::string failure;

  double T() const { return dt * static_cast<double>(h_avg.size()); }
};

namespace detail {

inline std::vector<double> q_power(const GridFunction& v, double q) {
  std::vector<double> out(v.size());
  for (int i = 0; i < v.size(); ++i) out[i] = v[i] > 0.0 ? std::pow(v[i], q) : 0.0;
  return out;
}

}  // namespace detail

/// Builds the barriers, then takes n_steps Euler steps. Barrier construction failure throws
/// `BracketError`; a failed step stops the run with `completed = false` and keeps the partial result.
inline FdeTrajectory run_fde(const FdeConfig& cfg) {
  {
    auto violations = validate(cfg);
    if (!violations.empty()) throw ConfigError(std::move(violations));
  }
  const Grid& g = cfg.grid;
  FdeTrajectory traj{.grid = g, .sub = GridFunction::zero(g), .sup = GridFunction::zero(g)};
  traj.p_cells = cfg.p.cells().vector();
  traj.dt = cfg.dt();
  traj.q = cfg.q;
  traj.h_avg = average_forcing(cfg.h, traj.dt, cfg.n_steps, g);
  traj.jensen = jensen_check(cfg.h, traj.dt, traj.h_avg);

  std::vector<double> floor(g.n_cells(), INFINITY);
  double h_sup = 0.0;
  for (const CellField& c : traj.h_avg) {
    for (int i = 0; i < g.n_cells(); ++i) {
      floor[i] = std::min(floor[i], c[i]);
      h_sup = std::max(h_sup, c[i]);
    }
  }
  const BarrierContext ctx{g, cfg.p, cfg.q, cfg.f};
  BarrierResult sub = build_subsolution(ctx, CellField(g, floor), cfg.mu_grid, cfg.v0, cfg.solver);
  BarrierResult sup = build_supersolution(ctx, h_sup, cfg.k_grid, cfg.v0, cfg.solver);
  traj.sub = sub.w;
  traj.sup = sup.w;
  traj.sub_mu = sub.parameter;
  traj.sup_K = sup.parameter;

  traj.steps.push_back(cfg.v0);
  for (int n = 0; n < cfg.n_steps; ++n) {
    const GridFunction& prev = traj.steps.back();
    SolveReport rep = euler_step(prev, traj.h_avg[n], cfg);
    if (!rep.converged) {
      traj.failure = "step " + std::to_string(n + 1) + " did not converge: " + rep.diagnostic;
      traj.reports.push_back(std::move(rep));
      return traj;
    }
    const GridFunction& v = rep.solution;
    double defect = 0.0;
    bool positive = true;
    for (int i = 0; i < v.size(); ++i) {
      defect = std::max({defect, traj.sub[i] - v[i], v[i] - traj.sup[i]});
      if (i > 0 && i + 1 < v.size()) positive = positive && v[i] > 0.0;
    }
    traj.bracket_defect.push_back(defect);
    traj.bracketing_ok = traj.bracketing_ok && defect <= 1e-10;
    traj.positivity_ok = traj.positivity_ok && positive;

    const std::vector<double> a = detail::q_power(v, cfg.q);
    const std::vector<double> b = detail::q_power(prev, cfg.q);
    std::vector<double> rate(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) rate[i] = (a[i] - b[i]) / traj.dt;
    const double l2 = l2_nodal(g, rate);
    traj.increments.push_back(l2 * l2);
    traj.increment_sum += traj.dt * l2 * l2;

    traj.steps.push_back(v);
    traj.reports.push_back(std::move(rep));
  }
  traj.completed = true;
  return traj;
}

// -- interpolants and verification ---------------------------------------------------

struct Interpolants {
  GridFunction v_step;   ///< v_n for t in [t_{n-1}, t_n)
  GridFunction v_tilde;  ///< q-power linear interpolant: frac (v_n^q - v_{n-1}^q) + v_{n-1}^q
};

inline Interpolants interpolants(const FdeTrajectory& traj, double t) {
  const int n_steps = static_cast<int>(traj.steps.size()) - 1;
  if (n_steps < 1) throw PreconditionError("trajectory has no steps");
  const double T = traj.dt * n_steps;
  if (!(t >= 0.0 && t <= T)) throw PreconditionError("t outside [0, T]");
  int n = static_cast<int>(std::floor(t / traj.dt)) + 1;  // t in [t_{n-1}, t_n)
  n = std::min(n, n_steps);
  const double frac = (t - (n - 1) * traj.dt) / traj.dt;
  const std::vector<double> a = detail::q_power(traj.steps[n], traj.q);
  const std::vector<double> b = detail::q_power(traj.steps[n - 1], traj.q);
  std::vector<double> tilde(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) tilde[i] = frac == 0.0 ? b[i] : frac * (a[i] - b[i]) + b[i];
  return {traj.steps[n], GridFunction(traj.grid, std::move(tilde), true)};
}

struct ContractionReport {
  std::vector<double> lhs;  ///< ||(v1_n^q - v2_n^q)^+|| at t_n, n = 0..N
  std::vector<double> rhs;  ///< ||(v1_0^q - v2_0^q)^+|| + sum_{k<=n} dt ||(h1^k - h2^k)^+||
  double max_violation = 0.0;
  double scale = 1.0;
  double tol = 1e-6;
  bool holds = false;
};

namespace detail {

inline void require_compatible(const FdeTrajectory& a, const FdeTrajectory& b) {
  if (!(a.grid == b.grid) || a.dt != b.dt || a.q != b.q || a.p_cells != b.p_cells ||
      a.steps.size() != b.steps.size()) {
    throw PreconditionError("trajectories come from mismatched configurations");
  }
  if (!a.completed || !b.completed) throw PreconditionError("trajectory is incomplete");
}

inline double positive_part_l2(const Grid& g, const std::vector<double>& a, const std::vector<double>& b) {
  std::vector<double> d(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) d[i] = std::max(a[i] - b[i], 0.0);
  return l2_nodal(g, d);
}

}  // namespace detail

/// Step-time check of ||(v1^q - v2^q)^+(t_n)|| <= ||(v1_0^q - v2_0^q)^+|| + int_0^{t_n} ||(h1 - h2)^+||.
inline ContractionReport contraction_check(const FdeTrajectory& a, const FdeTrajectory& b) {
  detail::require_compatible(a, b);
  ContractionReport r;
  const Grid& g = a.grid;
  const double initial =
      detail::positive_part_l2(g, detail::q_power(a.steps[0], a.q), detail::q_power(b.steps[0], b.q));
  double forcing = 0.0;
  double rmax = 0.0;
  for (std::size_t n = 0; n < a.steps.size(); ++n) {
    if (n > 0) {
      std::vector<double> d(g.n_cells());
      for (int i = 0; i < g.n_cells(); ++i) d[i] = std::max(a.h_avg[n - 1][i] - b.h_avg[n - 1][i], 0.0);
      forcing += a.dt * l2_cells(CellField(g, std::move(d)));
    }
    r.lhs.push_back(detail::positive_part_l2(g, detail::q_power(a.steps[n], a.q), detail::q_power(b.steps[n], b.q)));
    r.rhs.push_back(initial + forcing);
    rmax = std::max(rmax, r.rhs.back());
    r.max_violation = std::max(r.max_violation, r.lhs.back() - r.rhs.back());
  }
  r.scale = 1.0 + rmax;
  r.holds = r.max_violation <= r.tol * r.scale;
  return r;
}

/// Ordered data give ordered solutions: inconclusive unless u0 <= v0 and h1^n <= h2^n, then
/// holds iff v1_n <= v2_n + 1e-8 at every node and step.
inline Verdict comparison_check(const FdeTrajectory& a, const FdeTrajectory& b) {
  detail::require_compatible(a, b);
  if (!ordering_check(b.steps[0], a.steps[0])) return Verdict::kInconclusive;
  for (std::size_t n = 0; n < a.h_avg.size(); ++n) {
    for (int i = 0; i < a.grid.n_cells(); ++i) {
      if (a.h_avg[n][i] > b.h_avg[n][i]) return Verdict::kInconclusive;
    }
  }
  for (std::size_t n = 0; n < a.steps.size(); ++n) {
    if (!ordering_check(b.steps[n], a.steps[n], 1e-8)) return Verdict::kViolated;
  }
  return Verdict::kHolds;
}

}  // namespace varexp
