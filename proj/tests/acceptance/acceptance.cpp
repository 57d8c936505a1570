// Acceptance runner: every criterion prints one PASS/FAIL line with its measured figures, and the
// process exits with the number of failed criteria.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "support/oracles.hpp"
#include "varexp/varexp.hpp"

using namespace varexp;
using varexp::testing::gradient_fd_mismatch;
using varexp::testing::torsion_closed_form;

namespace {

struct Outcome {
  bool pass = true;
  std::ostringstream detail;
  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << " [failed: " << what << "]";
    }
  }
};

using Uniform = std::uniform_real_distribution<double>;

/// lo + (hi - lo) (1 + sin(k x + phi)) / 2 with random lo < hi inside [a, b].
std::function<double(double)> random_exponent(std::mt19937_64& rng, double a, double b) {
  double lo = Uniform(a, b)(rng), hi = Uniform(a, b)(rng);
  if (lo > hi) std::swap(lo, hi);
  const double k = Uniform(0.5, 6.0)(rng), phi = Uniform(0.0, 6.3)(rng);
  return [=](double x) { return lo + (hi - lo) * 0.5 * (1.0 + std::sin(k * x + phi)); };
}

// 1 ------------------------------------------------------------------------------------
Outcome luxemburg_self_consistency() {
  Outcome o;
  std::mt19937_64 rng(101);
  const Grid g(0.0, 1.0, 128);
  double worst = 0.0;
  for (int t = 0; t < 500; ++t) {
    const ExponentField p = ExponentField::sample(g, random_exponent(rng, 1.2, 4.0));
    const double scale = std::pow(10.0, Uniform(-2.0, 2.0)(rng));
    const CellField u0 = random_cells(g, rng, -1.0, 1.0);
    std::vector<double> u(u0.vector());
    for (double& v : u) v *= scale;
    const CellField uf(g, u);
    const double norm = luxemburg_norm(uf, p);
    std::vector<double> w(u);
    for (double& v : w) v /= norm;
    worst = std::max(worst, std::fabs(modular(CellField(g, w), p) - 1.0));
  }
  o.detail << "500 draws, max |rho(u/||u||) - 1| = " << worst;
  o.require(worst <= 1e-10, "tolerance 1e-10");
  return o;
}

// 2 ------------------------------------------------------------------------------------
Outcome norm_modular_chains() {
  Outcome o;
  std::mt19937_64 rng(102);
  const Grid g(0.0, 1.0, 128);
  int above = 0, below = 0, failures = 0;
  for (int t = 0; t < 500; ++t) {
    const ExponentField p = ExponentField::sample(g, random_exponent(rng, 1.2, 4.0));
    const double scale = t % 2 ? Uniform(1.5, 100.0)(rng) : Uniform(0.001, 0.5)(rng);
    std::vector<double> u = random_cells(g, rng, 0.1, 1.0).vector();
    for (double& v : u) v *= scale;
    const NormModularReport r = check_norm_modular_bounds(CellField(g, u), p);
    (r.norm_at_least_one ? above : below)++;
    const double slack = 1e-9 * (1.0 + r.modular);
    if (!(r.lower <= r.modular + slack && r.modular <= r.upper + slack)) ++failures;
  }
  o.detail << "500 draws (" << above << " with norm >= 1, " << below << " with norm < 1), failures = " << failures;
  o.require(failures == 0, "all chains hold");
  o.require(above > 0 && below > 0, "both branches covered");
  return o;
}

// 3 ------------------------------------------------------------------------------------
Outcome picone_nonnegativity() {
  Outcome o;
  std::mt19937_64 rng(103);
  const Grid g(0.0, 1.0, 512);
  const double h = g.h();
  int violations = 0;
  double worst = 0.0;  // most negative gap / (1 + |RHS|)
  for (int t = 0; t < 1000; ++t) {
    const auto pf = random_exponent(rng, 1.3, 4.0);
    const OperatorKernel k = plap(pf);
    const double p_minus = ExponentField::sample(g, pf).p_minus();
    const double r = 1.0 + (p_minus - 1.0) * Uniform(0.0, 1.0)(rng);
    const GridFunction v = random_sine_series(g, rng, 4, Uniform(0.1, 3.0)(rng), t % 3 == 0 ? Uniform(0.0, 0.5)(rng) : 0.0);
    const GridFunction v0 = random_sine_series(g, rng, 4, Uniform(0.1, 3.0)(rng), t % 3 == 0 ? Uniform(0.01, 0.5)(rng) : 0.0);
    if (v0[0] == 0.0 && v[0] != 0.0) continue;  // inadmissible pairing; resample-free skip keeps seeds fixed
    PiconeOptions opts;
    opts.c_h = 0.0;
    const PiconeReport rep = picone_gap(k, v, v0, r, opts);
    for (int i = 0; i < g.n_cells(); ++i) {
      const double scaled = rep.gaps[i] / (1.0 + std::fabs(rep.rhs[i]));
      worst = std::min(worst, scaled);
      if (rep.gaps[i] < -std::max(1e-9 * (1.0 + std::fabs(rep.rhs[i])), opts.c_h * h * h)) ++violations;
    }
  }
  o.detail << "per-cell gaps over 1000 draws: violating cells = " << violations << ", min gap/(1+|RHS|) = " << worst;
  o.require(violations == 0, "gap >= -max(1e-9 scale, c_h h^2)");

  const OperatorKernel k = plap([](double x) { return 2.0 + x; });
  double ray = 0.0;
  for (double c : {0.5, 3.0, 10.0}) {
    const GridFunction v0 = GridFunction::sample(g, [](double x) { return x * (1 - x) + 0.1; });
    const GridFunction v = v0.map([c](double s) { return c * s; });
    const PiconeReport rep = picone_gap(k, v, v0, 1.0);
    double scale = 1.0;
    for (double x : rep.rhs) scale = std::max(scale, 1.0 + std::fabs(x));
    for (double gp : rep.gaps) ray = std::max(ray, std::fabs(gp) / scale);
  }
  o.detail << "; ray case max |gap|/scale = " << ray;
  o.require(ray <= 1e-10, "ray equality within 1e-10");

  const PiconeReport strict = picone_gap(plap([](double x) { return 2.5 + 0.3 * std::sin(2 * x); }),
                                         GridFunction::sample(g, [](double x) { return x * (1 - x); }, true),
                                         GridFunction::sample(g, [](double x) { return x * (1 - x) + 0.1; }), 2.0);
  o.detail << "; r = 2 strict gap = " << strict.strict_min_gap << " on " << strict.strict_cells << " cells";
  o.require(strict.strict_cells > 0 && strict.strict_min_gap > 0.0, "strict gap positive");
  return o;
}

// 4 ------------------------------------------------------------------------------------
Outcome pair_reduction() {
  Outcome o;
  std::mt19937_64 rng(104);
  const Grid g(0.0, 1.0, 256);
  const ExponentField p = ExponentField::constant(g, 2.0);
  double worst = 0.0;
  for (int t = 0; t < 100; ++t) {
    const GridFunction u = random_sine_series(g, rng, 4, Uniform(0.2, 2.0)(rng), Uniform(0.05, 1.0)(rng));
    const GridFunction v = random_sine_series(g, rng, 4, Uniform(0.2, 2.0)(rng), Uniform(0.05, 1.0)(rng));
    const PiconeReport rep = picone_plap_pair_gap(u, v, 1.0, p);
    for (int i = 0; i < g.n_cells(); ++i) {
      const double d = ((u[i + 1] - u[i]) - (v[i + 1] - v[i])) / g.h();
      worst = std::max(worst, std::fabs(rep.gaps[i] - d * d));
    }
  }
  o.detail << "100 pairs, max |gap - (Du - Dv)^2| = " << worst;
  o.require(worst <= 1e-12, "within 1e-12");
  return o;
}

// 5 ------------------------------------------------------------------------------------
Outcome diaz_saa() {
  Outcome o;
  std::mt19937_64 rng(105);
  const Grid g(0.0, 1.0, 256);
  double worst = 0.0;
  int failures = 0;
  for (int t = 0; t < 500; ++t) {
    const auto pf = random_exponent(rng, 1.3, 4.0);
    const double p_minus = ExponentField::sample(g, pf).p_minus();
    const double r = 1.0 + (p_minus - 1.0) * Uniform(0.0, 1.0)(rng);
    const DiazSaaReport rep = diaz_saa_check(plap(pf), random_sine_series(g, rng, 4, Uniform(0.1, 3.0)(rng)),
                                             random_sine_series(g, rng, 4, Uniform(0.1, 3.0)(rng)), r);
    worst = std::min(worst, rep.integral / rep.scale);
    if (rep.integral < -1e-9 * rep.scale) ++failures;
  }
  double prop = 0.0;
  for (double p : {1.5, 2.0, 3.0}) {
    const GridFunction w2 = GridFunction::sample(g, [](double x) { return std::sin(std::numbers::pi * x); }, true);
    const DiazSaaReport rep = diaz_saa_check(plap([p](double) { return p; }), w2.map([](double s) { return 2.0 * s; }), w2, p);
    prop = std::max(prop, std::fabs(rep.integral) / rep.scale);
  }
  o.detail << "500 pairs, failures = " << failures << ", min I/scale = " << worst << "; w1 = 2 w2 with p = r: max |I|/scale = " << prop;
  o.require(failures == 0, "I >= -1e-9 scale");
  o.require(prop <= 1e-10, "proportional case within 1e-10");
  return o;
}

// 6 ------------------------------------------------------------------------------------
/// Sup error of the piecewise-linear reconstruction at nodes and cell midpoints.
double torsion_error(const SolveReport& r, double p, double K) {
  const Grid& g = r.solution.grid();
  double err = 0.0;
  for (int i = 0; i < g.n_nodes(); ++i) err = std::max(err, std::fabs(r.solution[i] - torsion_closed_form(p, K, g.node(i))));
  for (int i = 0; i < g.n_cells(); ++i) {
    const double mid = 0.5 * (r.solution[i] + r.solution[i + 1]);
    err = std::max(err, std::fabs(mid - torsion_closed_form(p, K, g.center(i))));
  }
  return err;
}

Outcome torsion_oracle() {
  Outcome o;
  SolveOptions tight;
  tight.tol = 1e-12;
  {
    const Grid g(0.0, 1.0, 256);
    const SolveReport r = solve_torsion(1.0, ExponentField::constant(g, 2.0), g);
    double nodal = 0.0;
    for (int i = 0; i < g.n_nodes(); ++i) nodal = std::max(nodal, std::fabs(r.solution[i] - torsion_closed_form(2.0, 1.0, g.node(i))));
    o.detail << "p = 2 at 256 cells: nodal sup error " << nodal;
    o.require(r.converged && nodal <= 1e-4, "p = 2 error <= 1e-4");
  }
  std::vector<double> errs;
  for (int n : {64, 128, 256, 512}) {
    const Grid g(0.0, 1.0, n);
    const SolveReport r = solve_torsion(1.0, ExponentField::constant(g, 2.0), g, tight);
    o.require(r.converged, "refinement solve converged");
    errs.push_back(torsion_error(r, 2.0, 1.0));
  }
  o.detail << "; reconstruction errors";
  for (double e : errs) o.detail << ' ' << e;
  for (std::size_t i = 1; i < errs.size(); ++i) {
    const double ratio = errs[i - 1] / errs[i];
    o.require(errs[i] <= 1e-11 || (ratio > 3.5 && ratio < 4.5), "O(h^2) decay");
  }
  {
    const Grid g(0.0, 1.0, 1024);
    const SolveReport r = solve_torsion(1.0, ExponentField::constant(g, 3.0), g);
    double err = 0.0;
    for (int i = 0; i < g.n_nodes(); ++i) err = std::max(err, std::fabs(r.solution[i] - torsion_closed_form(3.0, 1.0, g.node(i))));
    o.detail << "; p = 3 at 1024 cells: " << err;
    o.require(r.converged && err <= 1e-3, "p = 3 error <= 1e-3");
  }
  for (const auto& pf : std::vector<std::function<double(double)>>{[](double) { return 3.0; }, [](double x) { return 1.8 + 0.8 * x; }}) {
    const Grid g(0.0, 1.0, 256);
    const ExponentField p = ExponentField::sample(g, pf);
    GridFunction prev = GridFunction::zero(g);
    for (double K : {1.0, 2.0, 4.0, 8.0}) {
      const SolveReport r = solve_torsion(K, p, g);
      o.require(r.converged, "torsion K solve converged");
      o.require(ordering_check(r.solution, prev), "w_K nodewise monotone in K");
      prev = r.solution;
    }
  }
  o.detail << "; w_K monotone over K in {1, 2, 4, 8}";
  return o;
}

// 7 ------------------------------------------------------------------------------------
Outcome gradient_consistency() {
  Outcome o;
  std::mt19937_64 rng(107);
  const Grid g(0.0, 1.0, 64);
  double worst[5] = {0, 0, 0, 0, 0};
  const char* names[5] = {"reaction", "fde_step", "eps", "torsion", "barrier"};
  for (int t = 0; t < 20; ++t) {
    const ExponentField p = ExponentField::sample(g, random_exponent(rng, 1.4, 3.5));
    const GridFunction u = random_sine_series(g, rng, 4, Uniform(0.2, 2.0)(rng));
    const double pm = p.p_minus();
    const double m = 1.0 + (pm - 1.0) * Uniform(0.5, 1.0)(rng);
    const double q = 1.0 + (pm - 1.0) * Uniform(0.1, 1.0)(rng);
    const std::vector<EllipticProblem> probs = {
        {g, p, ReactionPQ{random_cells(g, rng, 0.5, 2), random_cells(g, rng, 0.5, 2),
                          ExponentField::constant(g, 1.0 + 0.9 * (pm - 1.0) * Uniform(0, 1)(rng), ExponentBound::kAtLeastOne),
                          ExponentField::constant(g, p.p_plus() + Uniform(0.1, 1.0)(rng))}},
        {g, p, FdeStep{Uniform(0.01, 1.0)(rng), q, cells_to_nodes(random_cells(g, rng, 0, 2)),
                       SourceF::power(random_cells(g, rng, 0, 1), 1.0 + (q - 1.0) * Uniform(0.1, 1.0)(rng))}},
        {g, p, EpsPerturbed{Uniform(0.01, 1.0)(rng), m, SourceF::power(random_cells(g, rng, 0, 1), 1.0 + (m - 1.0) * Uniform(0.1, 0.9)(rng))}},
        {g, p, Torsion{Uniform(0.5, 5.0)(rng)}},
        {g, p, Barrier{Uniform(0.1, 1.0)(rng), cells_to_nodes(random_cells(g, rng, 0, 2)), 1.3, SourceF::power(random_cells(g, rng, 0, 1), 1.2), Uniform(0.0, 3.0)(rng)}}};
    for (int k = 0; k < 5; ++k) {
      if (!validate(probs[k]).empty()) {
        o.require(false, std::string("admissible draw for ") + names[k]);
        continue;
      }
      worst[k] = std::max(worst[k], gradient_fd_mismatch(probs[k], u));
    }
  }
  o.detail << "20 states per family, max relative mismatch:";
  for (int k = 0; k < 5; ++k) {
    o.detail << ' ' << names[k] << '=' << worst[k];
    o.require(worst[k] <= 1e-6, std::string(names[k]) + " within 1e-6");
  }
  return o;
}

// 8 ------------------------------------------------------------------------------------
Outcome reaction_bounds() {
  Outcome o;
  const Grid g(0.0, 1.0, 256);
  const EllipticProblem prob{g, ExponentField::constant(g, 2.0),
                             ReactionPQ{CellField::constant(g, 1.0), CellField::constant(g, 1.0),
                                        ExponentField::constant(g, 1.5, ExponentBound::kAtLeastOne), ExponentField::constant(g, 3.0)}};
  const SolveReport r = minimize(prob, bump(g, 0.5));
  double lo = 0.0, hi = 0.0;
  for (int i = 0; i < g.n_nodes(); ++i) {
    lo = std::min(lo, r.solution[i]);
    hi = std::max(hi, r.solution[i]);
  }
  o.require(r.converged, "converged");
  o.require(lo >= 0.0 && hi <= 1.0, "0 <= u <= 1");
  o.require(r.positivity && r.hopf_ok, "positivity and Hopf");
  std::mt19937_64 rng(108);
  std::vector<GridFunction> inits;
  for (int k = 0; k < 5; ++k) inits.push_back(random_sine_series(g, rng, 4, 0.2 + 0.5 * k));
  const UniquenessReport u = uniqueness_probe(prob, inits);
  o.detail << "min u = " << lo << ", max u = " << hi << ", Hopf slopes " << positivity_and_hopf_check(r.solution).slope_a
           << "; uniqueness distance over 5 starts = " << u.max_distance;
  o.require(u.verdict == Verdict::kHolds && u.max_distance <= 1e-6, "uniqueness within 1e-6");
  return o;
}

// 9 ------------------------------------------------------------------------------------
Outcome elliptic_contraction() {
  Outcome o;
  std::mt19937_64 rng(109);
  const Grid g(0.0, 1.0, 128);
  double worst = -1e300;
  int failures = 0, nonconverged = 0;
  for (int t = 0; t < 50; ++t) {
    const ExponentField p = ExponentField::sample(g, random_exponent(rng, 1.6, 3.0));
    const double q = 1.0 + (p.p_minus() - 1.0) * Uniform(0.1, 1.0)(rng);
    const double lambda = Uniform(0.01, 1.0)(rng);
    const SourceF f = t % 2 ? SourceF::zero() : SourceF::power(random_cells(g, rng, 0, 1), 1.0 + (q - 1.0) * Uniform(0.01, 1.0)(rng));
    const std::vector<double> h1 = cells_to_nodes(random_cells(g, rng, 0.2, 2.0));
    std::vector<double> h2 = h1;
    const double amp = std::pow(10.0, Uniform(-3.0, 0.0)(rng));
    const double freq = Uniform(1.0, 20.0)(rng);
    for (int i = 0; i < g.n_nodes(); ++i) h2[i] = std::max(0.0, h1[i] + amp * std::sin(freq * g.node(i) * 6.3));
    const SolveReport a = minimize(EllipticProblem{g, p, FdeStep{lambda, q, h1, f}}, bump(g));
    const SolveReport b = minimize(EllipticProblem{g, p, FdeStep{lambda, q, h2, f}}, bump(g));
    if (!a.converged || !b.converged) {
      ++nonconverged;
      continue;
    }
    std::vector<double> dh(g.n_nodes());
    for (int i = 0; i < g.n_nodes(); ++i) dh[i] = std::max(0.0, h1[i] - h2[i]);
    const double lhs = l2_nodal(g, varexp::testing::power_gap_plus(a.solution, b.solution, q));
    const double rhs = l2_nodal(g, dh);
    worst = std::max(worst, (lhs - rhs) / (1.0 + rhs));
    if (lhs > rhs + 1e-6 * (1.0 + rhs)) ++failures;
  }
  o.detail << "50 pairs, failures = " << failures << ", non-converged = " << nonconverged << ", max (lhs - rhs)/(1 + rhs) = " << worst;
  o.require(failures == 0 && nonconverged == 0, "contraction in every pair");
  return o;
}

// 10 -----------------------------------------------------------------------------------
FdeConfig fde_config(const Grid& g, const ExponentField& p, int n_steps, const std::string& h, double amp, double T = 1.0) {
  return FdeConfig{g, p, T, n_steps, 1.4, SourceF::power(CellField::constant(g, 1.0), 1.2), expr::parse(h),
                   GridFunction::sample(g, [amp](double x) { return amp * std::sin(std::numbers::pi * x); }, true)};
}

Outcome fde_scheme() {
  Outcome o;
  const Grid g(0.0, 1.0, 64);
  const ExponentField p = ExponentField::sample(g, [](double x) { return 2.2 + 0.3 * x; });
  {
    FdeConfig cfg = fde_config(g, p, 8, "1 + 0.5 * x", 0.3);
    const CellField h = average_forcing(cfg.h, cfg.dt(), 1, g).front();
    SolveOptions tight;
    tight.tol = 1e-11;
    const SolveReport st = minimize(stationary_problem(h, cfg), bump(g), tight);
    const SolveReport step = euler_step(st.solution, h, cfg);
    const double d = sup_distance(step.solution, st.solution);
    o.detail << "fixed point drift " << d << " (tol " << step.tol << ")";
    o.require(st.converged && step.converged && d <= 2.0 * step.tol, "fixed point within 2 tol");
  }
  {
    const FdeConfig cfg = fde_config(g, p, 32, "1 + 0.5 * sin(3 * t) * x", 0.3);
    const FdeTrajectory traj = run_fde(cfg);
    double defect = 0.0;
    for (double d : traj.bracket_defect) defect = std::max(defect, d);
    o.detail << "; 32-step bracket defect " << defect << ", Jensen " << traj.jensen.lhs << " <= " << traj.jensen.rhs;
    o.require(traj.completed && traj.steps.size() == 33, "32 steps completed");
    o.require(traj.bracketing_ok && traj.positivity_ok, "bracketing and positivity");
    o.require(traj.jensen.holds, "Jensen bound");
  }
  std::mt19937_64 rng(110);
  int ntk_fail = 0, cmp_fail = 0;
  double ntk_worst = -1e300;
  for (int t = 0; t < 10; ++t) {
    const double base = Uniform(0.5, 1.5)(rng);
    const std::string ha = std::to_string(base) + " + " + std::to_string(Uniform(0.0, 0.9)(rng) * base) + " * sin(" +
                           std::to_string(Uniform(1.0, 6.0)(rng)) + " * t) * x";
    const std::string hb = std::to_string(Uniform(0.5, 1.5)(rng)) + " + " + std::to_string(Uniform(0.0, 0.5)(rng)) + " * x * (1 - x)";
    const FdeTrajectory a = run_fde(fde_config(g, p, 16, ha, Uniform(0.15, 0.4)(rng)));
    const FdeTrajectory b = run_fde(fde_config(g, p, 16, hb, Uniform(0.15, 0.4)(rng)));
    if (!a.completed || !b.completed) {
      ++ntk_fail;
      continue;
    }
    for (const ContractionReport& r : {contraction_check(a, b), contraction_check(b, a)}) {
      ntk_worst = std::max(ntk_worst, r.max_violation / r.scale);
      if (!r.holds) ++ntk_fail;
    }
  }
  for (int t = 0; t < 10; ++t) {
    const double base = Uniform(0.5, 1.5)(rng), bump_h = Uniform(0.0, 0.8)(rng);
    const double amp = Uniform(0.2, 0.4)(rng), shrink = Uniform(0.3, 1.0)(rng);
    const std::string h1 = std::to_string(base) + " + 0.3 * sin(2 * t) * x";
    const std::string h2 = std::to_string(base) + " + " + std::to_string(bump_h) + " + 0.3 * sin(2 * t) * x";
    const FdeTrajectory lo = run_fde(fde_config(g, p, 16, h1, shrink * amp));
    const FdeTrajectory hi = run_fde(fde_config(g, p, 16, h2, amp));
    if (!lo.completed || !hi.completed || comparison_check(lo, hi) != Verdict::kHolds) ++cmp_fail;
  }
  o.detail << "; contraction pairs failing " << ntk_fail << " (max violation/scale " << ntk_worst << "), comparison pairs failing " << cmp_fail;
  o.require(ntk_fail == 0, "contraction at all step times");
  o.require(cmp_fail == 0, "ordered pairs stay ordered");
  return o;
}

// 11 -----------------------------------------------------------------------------------
Outcome hidden_convexity() {
  Outcome o;
  std::mt19937_64 rng(111);
  const Grid g(0.0, 1.0, 128);
  double worst = 1e300;
  int failures = 0;
  for (int t = 0; t < 50; ++t) {
    const double a = Uniform(1.5, 3.0)(rng), b = Uniform(0.0, 0.6)(rng);
    const ExponentField p = ExponentField::sample(g, [a, b](double x) { return a + b * x; });
    const double m = Uniform(1.0, p.p_minus())(rng);
    const double eps = std::pow(10.0, Uniform(-2.0, 0.0)(rng));
    const SourceF src = t % 3 == 0 ? SourceF::zero() : SourceF::power(random_cells(g, rng, 0.0, 2.0), Uniform(0.3, 1.0)(rng) * m);
    if (src.kind == SourceF::Kind::kPower && !(src.gamma < m)) continue;
    const EllipticProblem prob{g, p, EpsPerturbed{eps, m, src}};
    const ConvexityScanReport r = hidden_convexity_scan(prob, random_sine_series(g, rng), random_sine_series(g, rng, 4, 3.0), m, 64);
    worst = std::min(worst, r.min_second_difference / r.scale);
    if (!r.holds) ++failures;
  }
  double ray = 0.0;
  for (double m : {1.5, 2.0, 3.0}) {
    const EllipticProblem prob{g, ExponentField::constant(g, m), EpsPerturbed{0.1, m, SourceF::zero()}};
    const GridFunction v0 = random_sine_series(g, rng);
    const ConvexityScanReport r = hidden_convexity_scan(prob, v0, v0.map([](double s) { return 2.5 * s; }), m, 64);
    for (double d : r.second_differences) ray = std::max(ray, std::fabs(d) / r.scale);
  }
  o.detail << "50 draws, failures = " << failures << ", min second difference/scale = " << worst << "; ray cases max |d2|/scale = " << ray;
  o.require(failures == 0, "second differences >= -1e-9 scale");
  o.require(ray <= 1e-9, "ray cases affine");
  return o;
}

// 12 -----------------------------------------------------------------------------------
Outcome kernel_probes() {
  Outcome o;
  int plap_fail = 0;
  for (const auto& pf : std::vector<std::function<double(double)>>{
           [](double) { return 2.0; }, [](double x) { return 2.3 + 0.4 * std::sin(x); }, [](double x) { return 1.5 + x; }}) {
    const OperatorKernel k = plap(pf);
    for (const ProbeReport& r : {homogeneity_probe(k, 2000, 1), convexity_probe(k, 2000, 2), symmetry_probe(k, 2000, 3),
                                 euler_identity_probe(k, 2000, 4), grad_consistency(k, 2000, 5)}) {
      if (!r.holds) {
        ++plap_fail;
        o.detail << " plap " << r.name << " violation " << r.max_violation << ';';
      }
    }
  }
  const OperatorKernel shifted("shifted", [](double, double xi) { return xi * xi + 1.0; },
                               [](double, double xi) { return 2.0 * xi; }, [](double) { return 2.0; });
  const OperatorKernel concave(
      "concave", [](double, double xi) { return std::sqrt(std::fabs(xi)); },
      [](double, double xi) { return xi == 0.0 ? 0.0 : 0.5 * std::copysign(1.0, xi) / std::sqrt(std::fabs(xi)); },
      [](double) { return 0.5; });
  const OperatorKernel lopsided(
      "lopsided", [](double, double xi) { return xi > 0 ? 2.0 * xi * xi : xi * xi; },
      [](double, double xi) { return xi > 0 ? 4.0 * xi : 2.0 * xi; }, [](double) { return 2.0; });
  const OperatorKernel doubled(
      "doubled", [](double x, double xi) { return std::pow(std::fabs(xi), 2.0 + x); },
      [](double x, double xi) { return 2.0 * (2.0 + x) * std::pow(std::fabs(xi), 1.0 + x) * std::copysign(1.0, xi); },
      [](double x) { return 2.0 + x; });
  const bool caught = !homogeneity_probe(shifted, 500, 6).holds && !convexity_probe(concave, 500, 7).holds &&
                      !symmetry_probe(lopsided, 500, 8).holds && !euler_identity_probe(doubled, 500, 9).holds &&
                      !grad_consistency(doubled, 500, 10).holds;
  o.detail << "p-Laplacian probe failures = " << plap_fail << "; broken kernels " << (caught ? "all rejected" : "NOT all rejected");
  o.require(plap_fail == 0, "p-Laplacian passes every probe");
  o.require(caught, "each broken kernel fails its probe");
  return o;
}

}  // namespace

int main() {
  struct Criterion {
    const char* name;
    Outcome (*run)();
  };
  const Criterion criteria[] = {
      {"Luxemburg self-consistency", luxemburg_self_consistency},
      {"norm-modular chains", norm_modular_chains},
      {"Picone nonnegativity, ray equality, strictness", picone_nonnegativity},
      {"pair form quadratic reduction", pair_reduction},
      {"Diaz-Saa integral", diaz_saa},
      {"torsion closed forms and monotonicity", torsion_oracle},
      {"residual versus finite differences", gradient_consistency},
      {"reaction bounds and uniqueness", reaction_bounds},
      {"elliptic contraction", elliptic_contraction},
      {"implicit Euler scheme", fde_scheme},
      {"hidden convexity", hidden_convexity},
      {"kernel probes", kernel_probes},
  };
  int failed = 0;
  int id = 0;
  for (const Criterion& c : criteria) {
    ++id;
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail << "exception: " << e.what();
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::printf("[%s] %2d %s: %s (%.2f s)\n", o.pass ? "PASS" : "FAIL", id, c.name, o.detail.str().c_str(), secs);
    std::fflush(stdout);
    failed += o.pass ? 0 : 1;
  }
  std::printf("%d of %d acceptance criteria passed\n", id - failed, id);
  return failed;
}
