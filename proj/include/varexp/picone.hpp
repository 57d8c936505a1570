#pragma once

// Cellwise verification of the generalised Picone inequality, its
// p(x)-Laplacian pair form, the anisotropic sum form, and the integrated
// Diaz-Saa quantity. Composite functions are formed at nodes and then
// differentiated with the forward difference of `grid.hpp`.

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "varexp/grid.hpp"
#include "varexp/opkernel.hpp"
#include "varexp/vxspace.hpp"

namespace varexp {

struct PiconeOptions {
  double floor = 1e-8;       ///< lower bound required of the positive inputs on interior nodes
  double rel_tol = 1e-9;     ///< per-cell slack rel_tol * (1 + |RHS|)
  double c_h = 0.0;          ///< optional c_h * h^2 slack for the h-scaled verdict
  double strict_threshold = 0.1;  ///< cells with |D(v / v0)| above this count for the strict gap
};

struct PiconeReport {
  std::vector<double> lhs;
  std::vector<double> rhs;
  std::vector<double> gaps;  ///< rhs - lhs for the Picone forms, lhs - rhs for the pair form
  double min_gap = 0.0;
  std::vector<int> violating_cells;  ///< gap below -max(rel_tol (1 + |RHS|), c_h h^2)
  std::vector<int> equality_cells;   ///< |gap| within the same tolerance
  double tol = 0.0;
  double c_h = 0.0;
  double h = 0.0;
  bool verified_raw = false;  ///< every gap >= -rel_tol (1 + |RHS|)
  bool verified = false;      ///< every gap >= -max(rel_tol (1 + |RHS|), c_h h^2)
  /// Smallest gap over cells where |D(v / v0)| exceeds the threshold; +inf if there is none.
  double strict_min_gap = std::numeric_limits<double>::infinity();
  int strict_cells = 0;
};

/// Exponent of a kernel sampled at the cell centres of `grid`.
inline ExponentField kernel_exponent(const OperatorKernel& k, const Grid& grid) {
  return ExponentField::sample(grid, [&k](double x) { return k.exponent(x); });
}

namespace detail {

inline void require_r_range(double r, double p_minus) {
  if (!(r >= 1.0 && r <= p_minus)) throw PreconditionError("r must lie in [1, p_-]");
}

/// Interior nodes must be >= floor; boundary nodes must be >= floor or exactly 0.
inline void require_floor(const GridFunction& u, double floor, const char* what) {
  if (!(floor > 0.0)) throw PreconditionError("floor must be positive");
  for (int i = 0; i < u.size(); ++i) {
    const bool boundary = i == 0 || i == u.size() - 1;
    const bool ok = u[i] >= floor || (boundary && u[i] == 0.0);
    if (!ok) throw PreconditionError(std::string(what) + " falls below the floor");
  }
}

inline void require_nonnegative(const GridFunction& u, const char* what) {
  for (double v : u.values()) {
    if (v < 0.0) throw PreconditionError(std::string(what) + " must be nonnegative");
  }
}

inline double cell_diff(const std::vector<double>& nodal, int i, double h) { return (nodal[i + 1] - nodal[i]) / h; }

/// Classifies the gaps and fills the summary fields.
inline void finish_report(PiconeReport& r, const PiconeOptions& opts, const Grid& g) {
  r.tol = opts.rel_tol;
  r.c_h = opts.c_h;
  r.h = g.h();
  r.min_gap = std::numeric_limits<double>::infinity();
  r.verified_raw = true;
  r.verified = true;
  for (int i = 0; i < static_cast<int>(r.gaps.size()); ++i) {
    const double raw_tol = opts.rel_tol * (1.0 + std::fabs(r.rhs[i]));
    const double scaled_tol = std::max(raw_tol, opts.c_h * g.h() * g.h());
    r.min_gap = std::min(r.min_gap, r.gaps[i]);
    if (r.gaps[i] < -raw_tol) r.verified_raw = false;
    if (r.gaps[i] < -scaled_tol) {
      r.verified = false;
      r.violating_cells.push_back(i);
    }
    if (std::fabs(r.gaps[i]) <= scaled_tol) r.equality_cells.push_back(i);
  }
}

/// Per-cell Picone members for one kernel. Composites at zero boundary nodes are 0.
inline void picone_members(const OperatorKernel& k, const GridFunction& v, const GridFunction& v0, double r,
                           std::vector<double>& lhs, std::vector<double>& rhs) {
  const Grid& g = v.grid();
  const int nn = g.n_nodes();
  std::vector<double> root0(nn), ratio(nn), root(nn);
  for (int i = 0; i < nn; ++i) {
    root0[i] = std::pow(v0[i], 1.0 / r);
    root[i] = std::pow(v[i], 1.0 / r);
    ratio[i] = v0[i] == 0.0 ? 0.0 : v[i] / std::pow(v0[i], (r - 1.0) / r);
  }
  lhs.assign(g.n_cells(), 0.0);
  rhs.assign(g.n_cells(), 0.0);
  for (int i = 0; i < g.n_cells(); ++i) {
    const double x = g.center(i);
    const double p = k.exponent(x);
    const double xi0 = cell_diff(root0, i, g.h());
    const double eta = cell_diff(ratio, i, g.h());
    const double zeta = cell_diff(root, i, g.h());
    lhs[i] = k.dA(x, xi0) / p * eta;
    rhs[i] = std::pow(k.A(x, zeta), r / p) * std::pow(k.A(x, xi0), (p - r) / p);
  }
}

inline void strict_witness(PiconeReport& rep, const GridFunction& v, const GridFunction& v0, double threshold) {
  const Grid& g = v.grid();
  for (int i = 0; i < g.n_cells(); ++i) {
    if (v0[i] == 0.0 || v0[i + 1] == 0.0) continue;
    const double d = (v[i + 1] / v0[i + 1] - v[i] / v0[i]) / g.h();
    if (std::fabs(d) > threshold) {
      rep.strict_min_gap = std::min(rep.strict_min_gap, rep.gaps[i]);
      ++rep.strict_cells;
    }
  }
}

}  // namespace detail

/// Generalised Picone inequality per cell:
///   (1/p) dA(x, D v0^{1/r}) D(v / v0^{(r-1)/r}) <= A(x, D v^{1/r})^{r/p} A(x, D v0^{1/r})^{(p-r)/p}.
inline PiconeReport picone_gap(const OperatorKernel& k, const GridFunction& v, const GridFunction& v0, double r,
                               PiconeOptions opts = {}) {
  require_same_grid(v.grid(), v0.grid());
  detail::require_r_range(r, kernel_exponent(k, v.grid()).p_minus());
  detail::require_nonnegative(v, "v");
  detail::require_floor(v0, opts.floor, "v0");
  for (int i : {0, v.size() - 1}) {
    if (v0[i] == 0.0 && v[i] != 0.0) throw PreconditionError("v must vanish where v0 vanishes");
  }
  PiconeReport rep;
  detail::picone_members(k, v, v0, r, rep.lhs, rep.rhs);
  rep.gaps.resize(rep.lhs.size());
  for (std::size_t i = 0; i < rep.gaps.size(); ++i) rep.gaps[i] = rep.rhs[i] - rep.lhs[i];
  detail::finish_report(rep, opts, v.grid());
  detail::strict_witness(rep, v, v0, opts.strict_threshold);
  return rep;
}

/// Pair form for A = |xi|^p:
///   |Du|^p + |Dv|^p >= |Dv|^{p-2} Dv D(u^r / v^{r-1}) + |Du|^{p-2} Du D(v^r / u^{r-1}).
/// `lhs` holds the left member, `rhs` the right one, gap = lhs - rhs.
inline PiconeReport picone_plap_pair_gap(const GridFunction& u, const GridFunction& v, double r, const ExponentField& p,
                                         PiconeOptions opts = {}) {
  require_same_grid(u.grid(), v.grid());
  require_same_grid(u.grid(), p.grid());
  detail::require_r_range(r, p.p_minus());
  detail::require_floor(u, opts.floor, "u");
  detail::require_floor(v, opts.floor, "v");
  const Grid& g = u.grid();
  const int nn = g.n_nodes();
  for (int i : {0, nn - 1}) {
    if ((u[i] == 0.0) != (v[i] == 0.0)) throw PreconditionError("u and v must vanish on the same boundary nodes");
  }
  std::vector<double> uu(u.vector()), vv(v.vector()), u_over(nn), v_over(nn);
  for (int i = 0; i < nn; ++i) {
    u_over[i] = v[i] == 0.0 ? 0.0 : std::pow(u[i], r) / std::pow(v[i], r - 1.0);
    v_over[i] = u[i] == 0.0 ? 0.0 : std::pow(v[i], r) / std::pow(u[i], r - 1.0);
  }
  PiconeReport rep;
  rep.lhs.resize(g.n_cells());
  rep.rhs.resize(g.n_cells());
  rep.gaps.resize(g.n_cells());
  for (int i = 0; i < g.n_cells(); ++i) {
    const double du = detail::cell_diff(uu, i, g.h());
    const double dv = detail::cell_diff(vv, i, g.h());
    const double pi = p[i];
    const double flux_u = du == 0.0 ? 0.0 : std::pow(std::fabs(du), pi - 2.0) * du;
    const double flux_v = dv == 0.0 ? 0.0 : std::pow(std::fabs(dv), pi - 2.0) * dv;
    rep.lhs[i] = std::pow(std::fabs(du), pi) + std::pow(std::fabs(dv), pi);
    rep.rhs[i] = flux_v * detail::cell_diff(u_over, i, g.h()) + flux_u * detail::cell_diff(v_over, i, g.h());
    rep.gaps[i] = rep.lhs[i] - rep.rhs[i];
  }
  detail::finish_report(rep, opts, g);
  return rep;
}

/// Anisotropic sum form: each component i pairs kernel B_i with its own (v_i, v0_i).
inline PiconeReport aniso_picone_gap(const AnisoKernel& ak, const std::vector<GridFunction>& v,
                                     const std::vector<GridFunction>& v0, double r, PiconeOptions opts = {}) {
  if (ak.components.empty()) throw PreconditionError("anisotropic kernel has no components");
  if (v.size() != ak.components.size() || v0.size() != ak.components.size()) {
    throw PreconditionError("component count mismatch");
  }
  const Grid& g = v.front().grid();
  PiconeReport rep;
  rep.lhs.assign(g.n_cells(), 0.0);
  rep.rhs.assign(g.n_cells(), 0.0);
  for (std::size_t c = 0; c < v.size(); ++c) {
    require_same_grid(g, v[c].grid());
    require_same_grid(g, v0[c].grid());
    const OperatorKernel& k = ak.components[c];
    detail::require_r_range(r, kernel_exponent(k, g).p_minus());
    detail::require_nonnegative(v[c], "v");
    detail::require_floor(v0[c], opts.floor, "v0");
    std::vector<double> lhs, rhs;
    detail::picone_members(k, v[c], v0[c], r, lhs, rhs);
    for (int i = 0; i < g.n_cells(); ++i) {
      rep.lhs[i] += lhs[i];
      rep.rhs[i] += rhs[i];
    }
  }
  rep.gaps.resize(g.n_cells());
  for (int i = 0; i < g.n_cells(); ++i) rep.gaps[i] = rep.rhs[i] - rep.lhs[i];
  detail::finish_report(rep, opts, g);
  return rep;
}

struct DiazSaaReport {
  double integral = 0.0;
  double scale = 1.0;  ///< 1 + int A(x, Dw1) + A(x, Dw2)
  double tol = 1e-9;
  bool holds = false;  ///< integral >= -tol * scale
};

/// I = int a(x, Dw1) D((w1^r - w2^r) / w1^{r-1}) + a(x, Dw2) D((w2^r - w1^r) / w2^{r-1}).
/// Swapping w1 and w2 swaps the two summands of every cell, so I is symmetric bit for bit.
inline DiazSaaReport diaz_saa_check(const OperatorKernel& k, const GridFunction& w1, const GridFunction& w2, double r,
                                    double floor = 1e-8) {
  require_same_grid(w1.grid(), w2.grid());
  const Grid& g = w1.grid();
  detail::require_r_range(r, kernel_exponent(k, g).p_minus());
  if (!w1.dirichlet_zero() || !w2.dirichlet_zero()) throw PreconditionError("Diaz-Saa inputs need a zero trace");
  detail::require_floor(w1, floor, "w1");
  detail::require_floor(w2, floor, "w2");
  const int nn = g.n_nodes();
  std::vector<double> phi1(nn, 0.0), phi2(nn, 0.0);
  for (int i = 1; i + 1 < nn; ++i) {
    const double a = std::pow(w1[i], r);
    const double b = std::pow(w2[i], r);
    phi1[i] = (a - b) / std::pow(w1[i], r - 1.0);
    phi2[i] = (b - a) / std::pow(w2[i], r - 1.0);
  }
  std::vector<double> n1(w1.vector()), n2(w2.vector());
  DiazSaaReport rep;
  double sum = 0.0;
  double mag = 0.0;
  for (int i = 0; i < g.n_cells(); ++i) {
    const double x = g.center(i);
    const double xi1 = detail::cell_diff(n1, i, g.h());
    const double xi2 = detail::cell_diff(n2, i, g.h());
    const double t1 = k.a(x, xi1) * detail::cell_diff(phi1, i, g.h());
    const double t2 = k.a(x, xi2) * detail::cell_diff(phi2, i, g.h());
    sum += (t1 + t2) * g.h();
    mag += (k.A(x, xi1) + k.A(x, xi2)) * g.h();
  }
  rep.integral = sum;
  rep.scale = 1.0 + mag;
  rep.holds = rep.integral >= -rep.tol * rep.scale;
  return rep;
}

inline double diaz_saa_integral(const OperatorKernel& k, const GridFunction& w1, const GridFunction& w2, double r,
                                double floor = 1e-8) {
  return diaz_saa_check(k, w1, w2, r, floor).integral;
}

}  // namespace varexp
