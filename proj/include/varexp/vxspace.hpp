#pragma once

// Variable-exponent Lebesgue machinery on cell samples: modular, Luxemburg
// norm, the norm/modular power chains and a generalised Hoelder check.

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "varexp/grid.hpp"

namespace varexp {

/// Which lower bound an exponent field must respect.
enum class ExponentBound {
  kAboveOne,    ///< 1 < p_-   (operator exponents)
  kAtLeastOne,  ///< 1 <= p_-  (reaction exponents such as q(x))
};

/// Exponent sampled at cell centres together with its extrema.
class ExponentField {
 public:
  ExponentField(Grid grid, std::vector<double> p, ExponentBound bound = ExponentBound::kAboveOne)
      : values_(std::move(grid), std::move(p)) {
    const auto [lo, hi] = std::minmax_element(values_.values().begin(), values_.values().end());
    p_minus_ = *lo;
    p_plus_ = *hi;
    const bool low_ok = bound == ExponentBound::kAboveOne ? p_minus_ > 1.0 : p_minus_ >= 1.0;
    if (!low_ok) {
      throw PreconditionError(bound == ExponentBound::kAboveOne ? "exponent needs 1 < p_-"
                                                                : "exponent needs 1 <= p_-");
    }
  }

  static ExponentField sample(const Grid& grid, const std::function<double(double)>& p,
                              ExponentBound bound = ExponentBound::kAboveOne) {
    return ExponentField(grid, CellField::sample(grid, p).vector(), bound);
  }

  static ExponentField constant(const Grid& grid, double p,
                                ExponentBound bound = ExponentBound::kAboveOne) {
    return ExponentField(grid, std::vector<double>(grid.n_cells(), p), bound);
  }

  const Grid& grid() const noexcept { return values_.grid(); }
  const CellField& cells() const noexcept { return values_; }
  double operator[](int i) const { return values_[i]; }
  double p_minus() const noexcept { return p_minus_; }
  double p_plus() const noexcept { return p_plus_; }

 private:
  CellField values_;
  double p_minus_ = 0.0;
  double p_plus_ = 0.0;
};

/// rho_p(u) = sum_i |u_i|^{p_i} h.
inline double modular(const CellField& u, const ExponentField& p) {
  require_same_grid(u.grid(), p.grid());
  double sum = 0.0;
  for (int i = 0; i < u.size(); ++i) sum += std::pow(std::fabs(u[i]), p[i]) * u.grid().h();
  return sum;
}

struct LuxemburgOptions {
  double tol = 1e-12;
  int max_iter = 200;
};

/// inf{ sigma > 0 : rho_p(u / sigma) <= 1 } by bisection on the decreasing map sigma -> rho_p(u / sigma).
inline double luxemburg_norm(const CellField& u, const ExponentField& p, LuxemburgOptions opts = {}) {
  require_same_grid(u.grid(), p.grid());
  if (!(opts.tol > 0.0)) throw PreconditionError("Luxemburg tolerance must be positive");
  const bool all_zero = std::all_of(u.values().begin(), u.values().end(), [](double v) { return v == 0.0; });
  if (all_zero) return 0.0;

  const double h = u.grid().h();
  auto rho = [&](double sigma) {
    double sum = 0.0;
    for (int i = 0; i < u.size(); ++i) sum += std::pow(std::fabs(u[i]) / sigma, p[i]) * h;
    return sum;
  };

  double lo = 1.0;
  double hi = 1.0;
  if (rho(1.0) > 1.0) {
    while (rho(hi) > 1.0) hi *= 2.0;
    lo = hi / 2.0;
  } else {
    while (rho(lo) < 1.0) lo /= 2.0;
    hi = lo * 2.0;
  }
  // rho(lo) >= 1 >= rho(hi)
  double best = hi;
  double best_res = std::fabs(rho(hi) - 1.0);
  for (int it = 0; it < opts.max_iter; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid == lo || mid == hi) break;  // bracket is two adjacent doubles
    const double r = rho(mid);
    if (std::fabs(r - 1.0) < best_res) {
      best = mid;
      best_res = std::fabs(r - 1.0);
    }
    if (best_res <= opts.tol) break;
    if (r > 1.0) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return best;
}

/// Result of one inequality check: lhs <= rhs within a slack.
struct InequalityReport {
  std::string name;
  double lhs = 0.0;
  double rhs = 0.0;
  double constant = 1.0;
  bool holds = false;
};

/// Report for the norm/modular power chains.
struct NormModularReport {
  double norm = 0.0;
  double modular = 0.0;
  double lower = 0.0;  ///< ||u||^{p_-} (norm >= 1) or ||u||^{p_+} (norm <= 1)
  double upper = 0.0;
  bool norm_at_least_one = false;
  bool holds = false;
};

/// ||u||^{p_-} <= rho <= ||u||^{p_+} when ||u|| >= 1, exponents swapped when ||u|| <= 1.
inline NormModularReport check_norm_modular_bounds(const CellField& u, const ExponentField& p) {
  NormModularReport r;
  r.norm = luxemburg_norm(u, p);
  r.modular = modular(u, p);
  r.norm_at_least_one = r.norm >= 1.0;
  if (r.norm_at_least_one) {
    r.lower = std::pow(r.norm, p.p_minus());
    r.upper = std::pow(r.norm, p.p_plus());
  } else {
    r.lower = std::pow(r.norm, p.p_plus());
    r.upper = std::pow(r.norm, p.p_minus());
  }
  const double slack = 1e-9 * (1.0 + r.modular);
  r.holds = r.lower <= r.modular + slack && r.modular <= r.upper + slack;
  return r;
}

/// p_c = p / (p - 1), cellwise.
inline ExponentField conjugate(const ExponentField& p) {
  std::vector<double> pc(p.grid().n_cells());
  for (int i = 0; i < p.grid().n_cells(); ++i) pc[i] = p[i] / (p[i] - 1.0);
  return ExponentField(p.grid(), std::move(pc));
}

/// 1/p_- + 1/(p_c)_-, the constant used by `holder_check`.
inline double holder_constant(const ExponentField& p) {
  const double pc_minus = p.p_plus() / (p.p_plus() - 1.0);
  return 1.0 / p.p_minus() + 1.0 / pc_minus;
}

/// int |f g| <= C ||f||_{p} ||g||_{p_c}.
inline InequalityReport holder_check(const CellField& f, const CellField& g, const ExponentField& p) {
  require_same_grid(f.grid(), g.grid());
  require_same_grid(f.grid(), p.grid());
  InequalityReport r;
  r.name = "holder";
  double sum = 0.0;
  for (int i = 0; i < f.size(); ++i) sum += std::fabs(f[i] * g[i]) * f.grid().h();
  r.lhs = sum;
  r.constant = holder_constant(p);
  r.rhs = r.constant * luxemburg_norm(f, p) * luxemburg_norm(g, conjugate(p));
  r.holds = r.lhs <= r.rhs + 1e-9 * (1.0 + r.rhs);
  return r;
}

}  // namespace varexp
