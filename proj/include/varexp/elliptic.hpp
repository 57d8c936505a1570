#pragma once

// Discrete energies of the quasilinear elliptic families, their exact
// gradients, a monotone descent solver, and the numerical conclusion checks
// (ordering, positivity, Hopf sign, uniqueness, hidden convexity).
//
// Discretisation. For nodal u on a uniform grid,
//   E(u) = sum_cells h Psi_i(D u_i, ubar_i) + sum_{interior nodes j} h Phi_j(u_j),
// where D is the forward difference, ubar the node-to-cell average, Psi the
// gradient density (coefficients at cell centres) and Phi_j a nodal potential.
// Reaction coefficients given per cell are lumped to nodes: node j receives
// half the potential of each adjacent cell. With nodal reaction terms the
// discrete comparison and Picone arguments hold node by node.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <type_traits>
#include <utility>
#include <variant>
#include <vector>

#include "varexp/error.hpp"
#include "varexp/grid.hpp"
#include "varexp/vxspace.hpp"

namespace varexp {

/// Nonlinearity f(x, s) (or g of the perturbed problem) with potential F(x, t) = int_0^t f, F = 0 for t < 0.
struct SourceF {
  enum class Kind { kZero, kConstant, kPower };
  Kind kind = Kind::kZero;
  std::vector<double> c;  ///< per cell; empty for kZero
  double gamma = 2.0;     ///< kPower: f = c s^{gamma - 1}

  static SourceF zero() { return {}; }
  static SourceF constant(const CellField& c) { return {Kind::kConstant, c.vector(), 1.0}; }
  static SourceF power(const CellField& c, double gamma) { return {Kind::kPower, c.vector(), gamma}; }

  bool is_zero() const {
    return kind == Kind::kZero || std::all_of(c.begin(), c.end(), [](double v) { return v == 0.0; });
  }
  double c_max() const { return c.empty() ? 0.0 : *std::max_element(c.begin(), c.end()); }
};

inline const char* source_kind_name(SourceF::Kind k) {
  switch (k) {
    case SourceF::Kind::kZero: return "zero";
    case SourceF::Kind::kConstant: return "constant";
    case SourceF::Kind::kPower: return "power";
  }
  return "?";
}

/// -Delta_p u = h u^{q-1} - l u^{s-1}; energy int |Du|^p/p + int l u^s/s - int h u^q/q.
struct ReactionPQ {
  CellField h;
  CellField l;
  ExponentField q;
  ExponentField s;
};

/// v^{2q-1} - lambda Delta_p v = h0 v^{q-1} + lambda f(v); h0 is nodal.
struct FdeStep {
  double lambda = 1.0;
  double q = 1.5;
  std::vector<double> h0_nodes;
  SourceF f;
};

/// Energy int (|Du|^2 + eps u^2)^{p/2} / p - int G(u).
struct EpsPerturbed {
  double eps = 0.1;
  double m = 1.0;
  SourceF g;
};

/// -Delta_p w = K.
struct Torsion {
  double K = 1.0;
};

/// -Delta_p w = mu (h w^{q-1} + f(w)) + K with nodal h: the sub- and supersolution problems.
struct Barrier {
  double mu = 1.0;
  std::vector<double> h_nodes;
  double q = 1.5;
  SourceF f;
  double K = 0.0;
};

using Family = std::variant<ReactionPQ, FdeStep, EpsPerturbed, Torsion, Barrier>;

struct EllipticProblem {
  Grid grid;
  ExponentField p;
  Family family;
};

inline const char* family_name(const Family& f) {
  switch (f.index()) {
    case 0: return "reaction_pq";
    case 1: return "fde_step";
    case 2: return "eps_perturbed";
    case 3: return "torsion";
    case 4: return "barrier";
  }
  return "?";
}

/// Lists every violated hypothesis of the problem family; empty when admissible.
inline std::vector<std::string> validate(const EllipticProblem& prob) {
  std::vector<std::string> out;
  const double p_minus = prob.p.p_minus();
  auto check_source = [&](const SourceF& f, const char* name) {
    if (f.kind != SourceF::Kind::kZero) {
      if (static_cast<int>(f.c.size()) != prob.grid.n_cells()) out.push_back(std::string(name) + " needs one coefficient per cell");
      if (std::any_of(f.c.begin(), f.c.end(), [](double v) { return !(v >= 0.0); })) {
        out.push_back(std::string(name) + " >= 0 violated");
      }
    }
    if (f.kind == SourceF::Kind::kPower && !(f.gamma > 1.0)) out.push_back(std::string(name) + "(x,0) = 0 (gamma > 1) violated");
  };
  auto check_nodes = [&](const std::vector<double>& v, const char* what) {
    if (static_cast<int>(v.size()) != prob.grid.n_nodes()) {
      out.push_back(std::string(what) + " needs one value per node");
    } else if (std::any_of(v.begin(), v.end(), [](double x) { return !(x >= 0.0) || !std::isfinite(x); })) {
      out.push_back(std::string(what) + " >= 0 violated");
    }
  };
  if (!(prob.p.grid() == prob.grid)) out.push_back("p lives on a different grid");

  if (const auto* r = std::get_if<ReactionPQ>(&prob.family)) {
    if (!(r->q.p_plus() < p_minus)) out.push_back("q_+ < p_- violated");
    if (!(p_minus < r->s.p_minus())) out.push_back("p_- < s_- violated");
    if (!(r->q.p_minus() >= 1.0)) out.push_back("q_- >= 1 violated");
    if (std::any_of(r->h.values().begin(), r->h.values().end(), [](double v) { return !(v > 0.0); })) {
      out.push_back("h > 0 violated");
    }
    if (std::any_of(r->l.values().begin(), r->l.values().end(), [](double v) { return !(v > 0.0); })) {
      out.push_back("l > 0 violated");
    }
  } else if (const auto* s = std::get_if<FdeStep>(&prob.family)) {
    if (!(s->lambda > 0.0)) out.push_back("lambda > 0 violated");
    if (!(s->q > 1.0 && s->q <= p_minus)) out.push_back("q in (1, p_-] violated");
    check_nodes(s->h0_nodes, "h0");
    check_source(s->f, "f");
    if (s->f.kind == SourceF::Kind::kPower && s->f.gamma > s->q) out.push_back("f(x,s)/s^(q-1) nonincreasing (gamma <= q) violated");
  } else if (const auto* e = std::get_if<EpsPerturbed>(&prob.family)) {
    if (!(e->eps > 0.0)) out.push_back("eps > 0 violated");
    if (!(e->m >= 1.0 && e->m <= p_minus)) out.push_back("m in [1, p_-] violated");
    check_source(e->g, "g");
    if (e->g.kind == SourceF::Kind::kConstant) out.push_back("g(x,s)/s^(m-1) decreasing violated");
    if (e->g.kind == SourceF::Kind::kPower && !(e->g.gamma < e->m)) out.push_back("g(x,s)/s^(m-1) decreasing violated");
  } else if (const auto* t = std::get_if<Torsion>(&prob.family)) {
    if (!(t->K > 0.0)) out.push_back("K > 0 violated");
  } else if (const auto* b = std::get_if<Barrier>(&prob.family)) {
    if (!(b->mu > 0.0)) out.push_back("mu > 0 violated");
    if (!(b->K >= 0.0)) out.push_back("K >= 0 violated");
    if (!(b->q >= 1.0)) out.push_back("q >= 1 violated");
    check_nodes(b->h_nodes, "h");
    check_source(b->f, "f");
  }
  return out;
}

inline void require_valid(const EllipticProblem& prob) {
  auto v = validate(prob);
  if (!v.empty()) throw ConfigError(std::move(v));
}

namespace detail {

/// Nodal potential term. kPos: coef t_+^e / e, kAbs: coef |t|^e / e, kLinear: coef t.
struct NodeTerm {
  enum class Kind { kPos, kAbs, kLinear };
  Kind kind;
  double coef;
  double e;
};

struct EnergyValue {
  double value = 0.0;
  double magnitude = 0.0;  ///< sum of |contributions|, used as the roundoff scale
};

class EnergyModel {
 public:
  static constexpr double kDelta = 1e-6;       ///< regularisation of the preconditioner weight
  static constexpr double kWeightFloor = 1e-6;  ///< relative floor of the preconditioner weight
  static constexpr double kCurvatureCap = 1e8;

  explicit EnergyModel(const EllipticProblem& prob) : grid_(prob.grid) {
    const int n = grid_.n_cells();
    p_.resize(n);
    for (int i = 0; i < n; ++i) p_[i] = prob.p[i];
    terms_.resize(grid_.n_nodes());

    if (const auto* r = std::get_if<ReactionPQ>(&prob.family)) {
      for_interior_cells([&](int j, int c) {
        add(j, NodeTerm::Kind::kPos, 0.5 * r->l[c], r->s[c]);
        add(j, NodeTerm::Kind::kPos, -0.5 * r->h[c], r->q[c]);
      });
    } else if (const auto* s = std::get_if<FdeStep>(&prob.family)) {
      lambda_ = s->lambda;
      for (int j = 1; j < n; ++j) {
        add(j, NodeTerm::Kind::kAbs, 1.0, 2.0 * s->q);
        add(j, NodeTerm::Kind::kPos, -s->h0_nodes[j], s->q);
      }
      add_source(s->f, -s->lambda);
    } else if (const auto* e = std::get_if<EpsPerturbed>(&prob.family)) {
      eps_ = e->eps;
      add_source(e->g, -1.0);
    } else if (const auto* t = std::get_if<Torsion>(&prob.family)) {
      for (int j = 1; j < n; ++j) add(j, NodeTerm::Kind::kLinear, -t->K, 1.0);
    } else if (const auto* b = std::get_if<Barrier>(&prob.family)) {
      for (int j = 1; j < n; ++j) {
        add(j, NodeTerm::Kind::kPos, -b->mu * b->h_nodes[j], b->q);
        if (b->K != 0.0) add(j, NodeTerm::Kind::kLinear, -b->K, 1.0);
      }
      add_source(b->f, -b->mu);
    }
  }

  const Grid& grid() const noexcept { return grid_; }

  EnergyValue energy(const std::vector<double>& u) const {
    const double h = grid_.h();
    EnergyValue e;
    for (int i = 0; i < grid_.n_cells(); ++i) {
      const double v = h * density(i, (u[i + 1] - u[i]) / h, 0.5 * (u[i] + u[i + 1]));
      e.value += v;
      e.magnitude += std::fabs(v);
    }
    for (int j = 1; j < grid_.n_cells(); ++j) {
      for (const NodeTerm& t : terms_[j]) {
        const double v = h * term_value(t, u[j]);
        e.value += v;
        e.magnitude += std::fabs(v);
      }
    }
    return e;
  }

  /// E(v) - E(u) summed from local differences. Each local difference is formed from the exact
  /// increment v - u through expm1/log1p, so the result stays accurate when the change is far
  /// below the roundoff of E itself. `magnitude` is the sum of the local |differences|.
  EnergyValue energy_change(const std::vector<double>& u, const std::vector<double>& v) const {
    const double h = grid_.h();
    EnergyValue d;
    auto add = [&](double x) {
      d.value += x;
      d.magnitude += std::fabs(x);
    };
    for (int i = 0; i < grid_.n_cells(); ++i) {
      const double xi = (u[i + 1] - u[i]) / h;
      const double dxi = ((v[i + 1] - u[i + 1]) - (v[i] - u[i])) / h;
      const double p = p_[i];
      if (eps_ == 0.0) {
        add(h * lambda_ / p * power_change(std::fabs(xi), std::fabs(xi + dxi), xi * (xi + dxi) > 0.0 ? (xi > 0.0 ? dxi : -dxi) : 0.0, p));
      } else {
        const double bar = 0.5 * (u[i] + u[i + 1]);
        const double dbar = 0.5 * ((v[i] - u[i]) + (v[i + 1] - u[i + 1]));
        const double s0 = xi * xi + eps_ * bar * bar;
        const double ds = dxi * (2.0 * xi + dxi) + eps_ * dbar * (2.0 * bar + dbar);
        add(h * lambda_ / p * power_change(s0, s0 + ds, ds, 0.5 * p));
      }
    }
    for (int j = 1; j < grid_.n_cells(); ++j) {
      const double du = v[j] - u[j];
      for (const NodeTerm& t : terms_[j]) {
        double x = 0.0;
        switch (t.kind) {
          case NodeTerm::Kind::kPos:
            x = u[j] > 0.0 && v[j] > 0.0 ? t.coef / t.e * power_change(u[j], v[j], du, t.e)
                                         : term_value(t, v[j]) - term_value(t, u[j]);
            break;
          case NodeTerm::Kind::kAbs:
            x = u[j] * v[j] > 0.0 ? t.coef / t.e * power_change(std::fabs(u[j]), std::fabs(v[j]), u[j] > 0.0 ? du : -du, t.e)
                                  : term_value(t, v[j]) - term_value(t, u[j]);
            break;
          case NodeTerm::Kind::kLinear: x = t.coef * du; break;
        }
        add(h * x);
      }
    }
    return d;
  }

  /// R_j = dE/du_j on interior nodes, 0 on the boundary.
  std::vector<double> gradient(const std::vector<double>& u) const {
    const double h = grid_.h();
    const int n = grid_.n_cells();
    std::vector<double> dxi(n), dbar(n);
    for (int i = 0; i < n; ++i) density_derivatives(i, (u[i + 1] - u[i]) / h, 0.5 * (u[i] + u[i + 1]), dxi[i], dbar[i]);
    std::vector<double> r(n + 1, 0.0);
    for (int j = 1; j < n; ++j) {
      double react = 0.0;
      for (const NodeTerm& t : terms_[j]) react += term_derivative(t, u[j]);
      r[j] = dxi[j - 1] - dxi[j] + 0.5 * h * (dbar[j - 1] + dbar[j]) + h * react;
    }
    return r;
  }

  /// SPD tridiagonal approximation of the Hessian on the interior nodes 1..n-1.
  void preconditioner(const std::vector<double>& u, std::vector<double>& diag, std::vector<double>& off) const {
    const double h = grid_.h();
    const int n = grid_.n_cells();
    std::vector<double> w(n), wbar(n);
    for (int i = 0; i < n; ++i) {
      const double xi = (u[i + 1] - u[i]) / h;
      const double bar = 0.5 * (u[i] + u[i + 1]);
      const double s = xi * xi + eps_ * bar * bar + kDelta * kDelta;
      const double base = (p_[i] - 1.0) * std::pow(s, 0.5 * (p_[i] - 2.0));
      w[i] = lambda_ * std::max(base, kWeightFloor);
      wbar[i] = eps_ > 0.0 ? lambda_ * eps_ * std::min(base, kCurvatureCap) : 0.0;
    }
    diag.assign(n - 1, 0.0);
    off.assign(n - 2 > 0 ? n - 2 : 0, 0.0);
    for (int j = 1; j < n; ++j) {
      double curv = 0.0;
      for (const NodeTerm& t : terms_[j]) curv += term_curvature(t, u[j]);
      curv = std::min(std::max(curv, 0.0), kCurvatureCap);
      diag[j - 1] = (w[j - 1] + w[j]) / h + 0.25 * h * (wbar[j - 1] + wbar[j]) + h * curv;
      if (j < n - 1) off[j - 1] = -w[j] / h + 0.25 * h * wbar[j];
    }
  }

 private:
  template <class Fn>
  void for_interior_cells(Fn&& fn) {
    for (int j = 1; j < grid_.n_cells(); ++j) {
      fn(j, j - 1);
      fn(j, j);
    }
  }

  void add(int j, NodeTerm::Kind kind, double coef, double e) {
    if (coef == 0.0) return;
    for (NodeTerm& t : terms_[j]) {
      if (t.kind == kind && t.e == e) {
        t.coef += coef;
        return;
      }
    }
    terms_[j].push_back({kind, coef, e});
  }

  /// Adds sign * F with cell coefficients lumped to nodes.
  void add_source(const SourceF& f, double sign) {
    if (f.kind == SourceF::Kind::kZero) return;
    const double e = f.kind == SourceF::Kind::kPower ? f.gamma : 1.0;
    for_interior_cells([&](int j, int c) { add(j, NodeTerm::Kind::kPos, 0.5 * sign * f.c[c], e); });
  }

  double density(int i, double xi, double bar) const {
    const double p = p_[i];
    if (eps_ == 0.0) return lambda_ * std::pow(std::fabs(xi), p) / p;
    return lambda_ * std::pow(xi * xi + eps_ * bar * bar, 0.5 * p) / p;
  }

  void density_derivatives(int i, double xi, double bar, double& dxi, double& dbar) const {
    const double p = p_[i];
    if (eps_ == 0.0) {
      dxi = xi == 0.0 ? 0.0 : lambda_ * std::pow(std::fabs(xi), p - 1.0) * (xi > 0.0 ? 1.0 : -1.0);
      dbar = 0.0;
      return;
    }
    const double s = xi * xi + eps_ * bar * bar;
    if (s == 0.0) {
      dxi = dbar = 0.0;
      return;
    }
    const double k = lambda_ * std::pow(s, 0.5 * p - 1.0);
    dxi = k * xi;
    dbar = k * eps_ * bar;
  }

  /// b^e - a^e for a, b >= 0 given the accurate increment `delta` = b - a (0 when unavailable).
  static double power_change(double a, double b, double delta, double e) {
    if (a > 0.0 && b > 0.0 && delta != 0.0) return std::pow(a, e) * std::expm1(e * std::log1p(delta / a));
    return std::pow(b, e) - std::pow(a, e);
  }

  static double term_value(const NodeTerm& t, double u) {
    switch (t.kind) {
      case NodeTerm::Kind::kPos: return u > 0.0 ? t.coef * std::pow(u, t.e) / t.e : 0.0;
      case NodeTerm::Kind::kAbs: return t.coef * std::pow(std::fabs(u), t.e) / t.e;
      case NodeTerm::Kind::kLinear: return t.coef * u;
    }
    return 0.0;
  }

  /// Right derivative at u = 0 for the kinked potentials.
  static double term_derivative(const NodeTerm& t, double u) {
    switch (t.kind) {
      case NodeTerm::Kind::kPos:
        if (u > 0.0) return t.coef * std::pow(u, t.e - 1.0);
        return (u == 0.0 && t.e == 1.0) ? t.coef : 0.0;
      case NodeTerm::Kind::kAbs:
        if (u == 0.0) return t.e == 1.0 ? t.coef : 0.0;
        return t.coef * std::pow(std::fabs(u), t.e - 1.0) * (u > 0.0 ? 1.0 : -1.0);
      case NodeTerm::Kind::kLinear: return t.coef;
    }
    return 0.0;
  }

  static double term_curvature(const NodeTerm& t, double u) {
    if (t.kind == NodeTerm::Kind::kLinear || t.e == 1.0) return 0.0;
    const double a = t.kind == NodeTerm::Kind::kPos ? u : std::fabs(u);
    if (a < 0.0) return 0.0;
    if (a == 0.0) return t.e < 2.0 ? (t.coef > 0.0 ? kCurvatureCap : -kCurvatureCap) : (t.e == 2.0 ? t.coef : 0.0);
    return t.coef * (t.e - 1.0) * std::pow(a, t.e - 2.0);
  }

  Grid grid_;
  std::vector<double> p_;
  double lambda_ = 1.0;
  double eps_ = 0.0;
  std::vector<std::vector<NodeTerm>> terms_;
};

/// Solves the tridiagonal system (Thomas algorithm); `diag` is overwritten.
inline std::vector<double> thomas_solve(std::vector<double> diag, const std::vector<double>& off,
                                        const std::vector<double>& rhs) {
  const std::size_t n = diag.size();
  std::vector<double> x(rhs);
  for (std::size_t i = 1; i < n; ++i) {
    const double m = off[i - 1] / diag[i - 1];
    diag[i] -= m * off[i - 1];
    x[i] -= m * x[i - 1];
  }
  x[n - 1] /= diag[n - 1];
  for (std::size_t i = n - 1; i-- > 0;) x[i] = (x[i] - off[i] * x[i + 1]) / diag[i];
  return x;
}

inline GridFunction zero_trace(const Grid& g, std::vector<double> v) {
  v.front() = 0.0;
  v.back() = 0.0;
  return GridFunction(g, std::move(v), true);
}

}  // namespace detail

// -- energies and residual ----------------------------------------------------

inline double energy(const GridFunction& u, const EllipticProblem& prob) {
  require_same_grid(u.grid(), prob.grid);
  if (!u.dirichlet_zero()) throw PreconditionError("energy needs a zero-trace function");
  return detail::EnergyModel(prob).energy(u.vector()).value;
}

inline double energy_reaction(const GridFunction& u, const EllipticProblem& prob) {
  if (!std::holds_alternative<ReactionPQ>(prob.family)) throw PreconditionError("not a reaction problem");
  return energy(u, prob);
}

inline double energy_fde_step(const GridFunction& v, const EllipticProblem& prob) {
  if (!std::holds_alternative<FdeStep>(prob.family)) throw PreconditionError("not an FDE step problem");
  return energy(v, prob);
}

inline double energy_eps(const GridFunction& u, const EllipticProblem& prob) {
  if (!std::holds_alternative<EpsPerturbed>(prob.family)) throw PreconditionError("not a perturbed problem");
  return energy(u, prob);
}

/// Exact gradient of the discrete energy with respect to the interior nodal values.
inline GridFunction residual(const GridFunction& u, const EllipticProblem& prob) {
  require_same_grid(u.grid(), prob.grid);
  if (!u.dirichlet_zero()) throw PreconditionError("residual needs a zero-trace function");
  return GridFunction(prob.grid, detail::EnergyModel(prob).gradient(u.vector()), true);
}

// -- conclusion checks ---------------------------------------------------------

/// u_i >= v_i - 1e-12 at every node.
inline bool ordering_check(const GridFunction& u, const GridFunction& v, double slack = 1e-12) {
  require_same_grid(u.grid(), v.grid());
  for (int i = 0; i < u.size(); ++i) {
    if (u[i] < v[i] - slack) return false;
  }
  return true;
}

struct PositivityReport {
  double min_interior = 0.0;  ///< min over interior nodes at distance >= delta from the boundary
  bool positive = false;
  double flux_a = 0.0;  ///< outward-normal difference quotients
  double flux_b = 0.0;
  double slope_a = 0.0;  ///< second-order inward slope estimates 2 q1 - q2
  double slope_b = 0.0;
  bool hopf = false;
};

/// Positivity on interior nodes and the Hopf sign at both ends. A boundary slope counts as
/// nonvanishing when its second-order estimate exceeds (h / L) * ||u||_inf / L, which an O(h)
/// quotient of a function with vanishing derivative does not reach.
inline PositivityReport positivity_and_hopf_check(const GridFunction& u, double delta_interior = 0.0) {
  if (!u.dirichlet_zero()) throw PreconditionError("positivity check needs a zero-trace function");
  const Grid& g = u.grid();
  const int n = g.n_cells();
  PositivityReport r;
  r.min_interior = std::numeric_limits<double>::infinity();
  double sup = 0.0;
  for (int i = 1; i < n; ++i) {
    sup = std::max(sup, std::fabs(u[i]));
    const double x = g.node(i);
    if (std::min(x - g.a(), g.b() - x) >= delta_interior) r.min_interior = std::min(r.min_interior, u[i]);
  }
  r.positive = r.min_interior > 0.0;
  const BoundaryFlux f = boundary_flux(u);
  r.flux_a = f.at_a;
  r.flux_b = f.at_b;
  const double h = g.h();
  if (n >= 4) {
    r.slope_a = 2.0 * (u[1] - u[0]) / h - (u[2] - u[0]) / (2.0 * h);
    r.slope_b = 2.0 * (u[n - 1] - u[n]) / h - (u[n - 2] - u[n]) / (2.0 * h);
  } else {
    r.slope_a = -r.flux_a;
    r.slope_b = -r.flux_b;
  }
  const double len = g.b() - g.a();
  const double threshold = (h / len) * sup / len;
  r.hopf = r.flux_a < 0.0 && r.flux_b < 0.0 && r.slope_a > threshold && r.slope_b > threshold;
  return r;
}

// -- solver ---------------------------------------------------------------------

enum class DescentMethod {
  kPreconditioned,  ///< d = -M^{-1} R with a tridiagonal curvature model M
  kCellScaled,      ///< d = -R / h
};

struct SolveOptions {
  std::optional<double> tol;  ///< default 1e-10 * n_cells on sup |R|
  int max_iter = 200000;
  double step0 = 1.0;
  DescentMethod method = DescentMethod::kPreconditioned;
  double armijo_c = 1e-4;
  int max_halvings = 60;
  bool record_trace = true;
};

struct SolveReport {
  GridFunction solution;
  int iterations = 0;
  double final_energy = 0.0;
  double residual_sup = 0.0;
  double tol = 0.0;
  bool converged = false;
  bool positivity = false;
  bool hopf_ok = false;
  std::optional<bool> linf_bound_ok;  ///< set for families with a known L-infinity bound
  std::optional<double> linf_bound;
  std::vector<double> energy_trace;
  std::string diagnostic;
};

namespace detail {

inline double sup_abs(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s = std::max(s, std::fabs(x));
  return s;
}

}  // namespace detail

/// Monotone descent with Armijo backtracking. Energies never increase between iterates.
inline SolveReport minimize(const EllipticProblem& prob, const GridFunction& u_init, const SolveOptions& opts = {}) {
  require_valid(prob);
  require_same_grid(u_init.grid(), prob.grid);
  if (!(opts.max_iter > 0) || !(opts.step0 > 0.0)) throw PreconditionError("solver options must be positive");
  const Grid& g = prob.grid;
  const int n = g.n_cells();
  const double tol = opts.tol.value_or(1e-10 * n);
  if (!(tol > 0.0)) throw PreconditionError("solver tolerance must be positive");

  const detail::EnergyModel model(prob);
  std::vector<double> u(u_init.vector());
  u.front() = u.back() = 0.0;

  SolveReport rep{.solution = GridFunction::zero(g)};
  rep.tol = tol;
  detail::EnergyValue e = model.energy(u);
  if (!std::isfinite(e.value)) {
    rep.diagnostic = "non-finite energy at the initial state";
    rep.solution = detail::zero_trace(g, u);
    return rep;
  }
  if (opts.record_trace) rep.energy_trace.push_back(e.value);
  std::vector<double> r = model.gradient(u);
  rep.residual_sup = detail::sup_abs(r);

  std::vector<double> trial(u.size());
  std::vector<double> trial_r;
  std::vector<double> diag, off, rhs(n - 1);
  bool r_current = false;  // set when the line search already evaluated the residual at the new state
  // Armijo on the accurately summed energy change; the energy never increases, and the recorded
  // energy is accumulated from those changes. Once the predicted decrease drops below the
  // resolution of the change itself, Armijo cannot discriminate, and a step is accepted instead
  // when it strictly reduces sup |R| (still without increasing the energy).
  auto line_search = [&](const std::vector<double>& d, double slope) -> bool {
    double alpha = opts.step0;
    for (int k = 0; k <= opts.max_halvings; ++k, alpha *= 0.5) {
      for (std::size_t i = 0; i < u.size(); ++i) trial[i] = u[i] + alpha * d[i];
      const detail::EnergyValue de = model.energy_change(u, trial);
      if (!std::isfinite(de.value) || de.value > 0.0) continue;
      bool ok = de.value <= opts.armijo_c * alpha * slope;
      if (!ok && -alpha * slope <= 1e-12 * de.magnitude) {
        trial_r = model.gradient(trial);
        ok = detail::sup_abs(trial_r) < rep.residual_sup;
        r_current = ok;
      }
      if (ok) {
        u.swap(trial);
        e.value += de.value;
        return true;
      }
    }
    return false;
  };

  int it = 0;
  double best_residual = rep.residual_sup;
  int since_best = 0;
  constexpr int kStallWindow = 50;
  while (rep.residual_sup > tol && it < opts.max_iter) {
    std::vector<double> d(u.size(), 0.0);
    bool accepted = false;
    if (opts.method == DescentMethod::kPreconditioned) {
      model.preconditioner(u, diag, off);
      for (int j = 1; j < n; ++j) rhs[j - 1] = -r[j];
      const std::vector<double> step = detail::thomas_solve(diag, off, rhs);
      double slope = 0.0;
      for (int j = 1; j < n; ++j) {
        d[j] = step[j - 1];
        slope += r[j] * d[j];
      }
      if (slope < 0.0 && std::all_of(d.begin(), d.end(), [](double v) { return std::isfinite(v); })) {
        accepted = line_search(d, slope);
      }
    }
    if (!accepted) {
      double slope = 0.0;
      for (int j = 1; j < n; ++j) {
        d[j] = -r[j] / g.h();
        slope += r[j] * d[j];
      }
      accepted = slope < 0.0 && line_search(d, slope);
    }
    if (!accepted) {
      rep.diagnostic = "line search stalled at roundoff level";
      break;
    }
    ++it;
    if (opts.record_trace) rep.energy_trace.push_back(e.value);
    if (r_current) {
      r.swap(trial_r);
      r_current = false;
    } else {
      r = model.gradient(u);
    }
    rep.residual_sup = detail::sup_abs(r);
    if (!std::isfinite(rep.residual_sup)) {
      rep.diagnostic = "non-finite residual";
      break;
    }
    if (rep.residual_sup < 0.999 * best_residual) {
      best_residual = rep.residual_sup;
      since_best = 0;
    } else if (++since_best >= kStallWindow) {
      rep.diagnostic = "line search stalled at roundoff level";
      break;
    }
  }
  rep.iterations = it;
  rep.final_energy = e.value;
  rep.converged = rep.residual_sup <= tol;
  if (!rep.converged && rep.diagnostic.empty()) rep.diagnostic = "iteration limit reached";
  rep.solution = detail::zero_trace(g, u);
  const PositivityReport pos = positivity_and_hopf_check(rep.solution);
  rep.positivity = pos.positive;
  rep.hopf_ok = pos.hopf;
  if (const auto* rq = std::get_if<ReactionPQ>(&prob.family)) {
    double ratio = 0.0;
    for (int i = 0; i < n; ++i) ratio = std::max(ratio, rq->h[i] / rq->l[i]);
    const double bound = std::pow(std::max(ratio, 1.0), 1.0 / (rq->s.p_minus() - rq->q.p_plus()));
    rep.linf_bound = bound;
    const double slack = 1e-8 * bound;
    rep.linf_bound_ok = std::all_of(u.begin(), u.end(), [&](double v) { return v >= -slack && v <= bound + slack; });
  }
  return rep;
}

/// Positive bump x(1 - x) rescaled to (a, b), used as the default starting state.
inline GridFunction bump(const Grid& g, double amplitude = 1.0) {
  const double len = g.b() - g.a();
  return GridFunction::sample(
      g, [&](double x) { return amplitude * 4.0 * (x - g.a()) * (g.b() - x) / (len * len); }, true);
}

inline SolveReport solve_torsion(double K, const ExponentField& p, const Grid& grid, const SolveOptions& opts = {}) {
  if (!(K > 0.0)) throw PreconditionError("torsion needs K > 0");
  EllipticProblem prob{grid, p, Torsion{K}};
  return minimize(prob, GridFunction::zero(grid), opts);
}

// -- sub- and supersolutions ------------------------------------------------------

class BracketError : public Error {
 public:
  using Error::Error;
};

struct BarrierResult {
  GridFunction w;
  double parameter = 0.0;  ///< the selected mu or K
  SolveReport report;
};

/// Geometric grid {1, 1/2, ..., 2^-20} of mu values.
inline std::vector<double> default_mu_grid() {
  std::vector<double> out;
  for (int k = 0; k <= 20; ++k) out.push_back(std::ldexp(1.0, -k));
  return out;
}

/// Geometric grid {1, 2, ..., 2^20} of K values.
inline std::vector<double> default_k_grid() {
  std::vector<double> out;
  for (int k = 0; k <= 20; ++k) out.push_back(std::ldexp(1.0, k));
  return out;
}

struct BarrierContext {
  Grid grid;
  ExponentField p;
  double q = 1.5;
  SourceF f;
};

/// Solves -Delta_p w = mu (h0 w^{q-1} + f(w)) for mu in the decreasing grid and returns the
/// first (largest) solution with 0 < w <= v0.
inline BarrierResult build_subsolution(const BarrierContext& ctx, const CellField& h0_floor,
                                       const std::vector<double>& mu_grid, const GridFunction& v0,
                                       const SolveOptions& opts = {}) {
  if (mu_grid.empty()) throw PreconditionError("mu grid is empty");
  for (std::size_t i = 0; i < mu_grid.size(); ++i) {
    if (!(mu_grid[i] > 0.0) || (i > 0 && !(mu_grid[i] < mu_grid[i - 1]))) {
      throw PreconditionError("mu grid must be positive and decreasing");
    }
  }
  const std::vector<double> h_nodes = cells_to_nodes(h0_floor);
  GridFunction init = bump(ctx.grid);
  for (double mu : mu_grid) {
    EllipticProblem prob{ctx.grid, ctx.p, Barrier{mu, h_nodes, ctx.q, ctx.f, 0.0}};
    SolveReport rep = minimize(prob, init, opts);
    if (!rep.converged) continue;
    init = rep.solution;
    if (rep.positivity && ordering_check(v0, rep.solution)) return {rep.solution, mu, std::move(rep)};
  }
  throw BracketError("no mu in the grid gives a subsolution below v0");
}

/// Solves -Delta_p w = h_sup w^{q-1} + f(w) + K for K in the increasing grid and returns the
/// first (smallest) solution with w >= v0.
inline BarrierResult build_supersolution(const BarrierContext& ctx, double h_sup, const std::vector<double>& k_grid,
                                         const GridFunction& v0, const SolveOptions& opts = {}) {
  if (k_grid.empty()) throw PreconditionError("K grid is empty");
  for (std::size_t i = 0; i < k_grid.size(); ++i) {
    if (!(k_grid[i] > 0.0) || (i > 0 && !(k_grid[i] > k_grid[i - 1]))) {
      throw PreconditionError("K grid must be positive and increasing");
    }
  }
  const std::vector<double> h_nodes(ctx.grid.n_nodes(), h_sup);
  GridFunction init = bump(ctx.grid);
  for (double K : k_grid) {
    EllipticProblem prob{ctx.grid, ctx.p, Barrier{1.0, h_nodes, ctx.q, ctx.f, K}};
    SolveReport rep = minimize(prob, init, opts);
    if (!rep.converged) continue;
    init = rep.solution;
    if (rep.positivity && ordering_check(rep.solution, v0)) return {rep.solution, K, std::move(rep)};
  }
  throw BracketError("no K in the grid gives a supersolution above v0");
}

// -- empirical uniqueness and hidden convexity ----------------------------------

enum class Verdict { kHolds, kViolated, kInconclusive };

inline const char* verdict_name(Verdict v) {
  switch (v) {
    case Verdict::kHolds: return "holds";
    case Verdict::kViolated: return "violated";
    case Verdict::kInconclusive: return "inconclusive";
  }
  return "?";
}

struct UniquenessReport {
  double max_distance = 0.0;
  double tol = 1e-6;
  Verdict verdict = Verdict::kInconclusive;
  std::vector<SolveReport> runs;
};

/// Minimises from every start and compares the converged solutions pairwise in the sup norm.
inline UniquenessReport uniqueness_probe(const EllipticProblem& prob, const std::vector<GridFunction>& inits,
                                         const SolveOptions& opts = {}) {
  if (inits.size() < 2) throw PreconditionError("uniqueness probe needs at least two starts");
  UniquenessReport rep;
  bool all_converged = true;
  for (const GridFunction& init : inits) {
    rep.runs.push_back(minimize(prob, init, opts));
    all_converged = all_converged && rep.runs.back().converged;
  }
  for (std::size_t i = 0; i < rep.runs.size(); ++i) {
    for (std::size_t j = i + 1; j < rep.runs.size(); ++j) {
      rep.max_distance = std::max(rep.max_distance, sup_distance(rep.runs[i].solution, rep.runs[j].solution));
    }
  }
  if (!all_converged) {
    rep.verdict = Verdict::kInconclusive;
  } else {
    rep.verdict = rep.max_distance <= rep.tol ? Verdict::kHolds : Verdict::kViolated;
  }
  return rep;
}

struct ConvexityScanReport {
  std::vector<double> t;
  std::vector<double> values;
  std::vector<double> second_differences;
  double min_second_difference = 0.0;
  double scale = 1.0;  ///< 1 + max |xi(t)|
  double tol = 1e-9;
  bool holds = false;
};

/// Samples t -> J(((1 - t) v0 + t v1)^{1/m}) at n_t + 1 uniform t and reports second differences.
inline ConvexityScanReport hidden_convexity_scan(const EllipticProblem& prob, const GridFunction& v0,
                                                 const GridFunction& v1, double m, int n_t) {
  if (!std::holds_alternative<EpsPerturbed>(prob.family)) throw PreconditionError("hidden convexity needs the perturbed problem");
  require_same_grid(v0.grid(), prob.grid);
  require_same_grid(v1.grid(), prob.grid);
  if (!(m >= 1.0 && m <= prob.p.p_minus())) throw PreconditionError("m must lie in [1, p_-]");
  if (n_t < 2) throw PreconditionError("scan needs n_t >= 2");
  if (!v0.dirichlet_zero() || !v1.dirichlet_zero()) throw PreconditionError("scan inputs need a zero trace");
  for (int i = 1; i + 1 < v0.size(); ++i) {
    if (!(v0[i] > 0.0) || !(v1[i] > 0.0)) throw PreconditionError("scan inputs must be positive inside");
  }
  const detail::EnergyModel model(prob);
  ConvexityScanReport rep;
  std::vector<double> w(v0.size());
  for (int k = 0; k <= n_t; ++k) {
    const double t = static_cast<double>(k) / n_t;
    for (int i = 0; i < v0.size(); ++i) w[i] = std::pow((1.0 - t) * v0[i] + t * v1[i], 1.0 / m);
    rep.t.push_back(t);
    rep.values.push_back(model.energy(w).value);
  }
  double vmax = 0.0;
  for (double v : rep.values) vmax = std::max(vmax, std::fabs(v));
  rep.scale = 1.0 + vmax;
  rep.min_second_difference = std::numeric_limits<double>::infinity();
  for (int k = 1; k < n_t; ++k) {
    const double d2 = rep.values[k - 1] - 2.0 * rep.values[k] + rep.values[k + 1];
    rep.second_differences.push_back(d2);
    rep.min_second_difference = std::min(rep.min_second_difference, d2);
  }
  rep.holds = rep.min_second_difference >= -rep.tol * rep.scale;
  return rep;
}

}  // namespace varexp
