#pragma once

// Uniform 1D mesh on (a, b), nodal functions, cell-centred samples and the
// midpoint quadrature every modular and energy in the library is built on.

#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "varexp/error.hpp"

namespace varexp {

class Grid {
 public:
  Grid(double a, double b, int n_cells) : a_(a), b_(b), n_cells_(n_cells) {
    if (!(std::isfinite(a) && std::isfinite(b)) || !(b > a)) {
      throw PreconditionError("grid bounds must satisfy a < b");
    }
    if (n_cells < 2) throw PreconditionError("grid needs at least two cells");
  }

  double a() const noexcept { return a_; }
  double b() const noexcept { return b_; }
  int n_cells() const noexcept { return n_cells_; }
  int n_nodes() const noexcept { return n_cells_ + 1; }
  double h() const noexcept { return (b_ - a_) / n_cells_; }

  double node(int i) const noexcept { return i == n_cells_ ? b_ : a_ + i * h(); }
  double center(int i) const noexcept { return a_ + (i + 0.5) * h(); }

  std::vector<double> nodes() const {
    std::vector<double> out(n_nodes());
    for (int i = 0; i < n_nodes(); ++i) out[i] = node(i);
    return out;
  }

  std::vector<double> centers() const {
    std::vector<double> out(n_cells_);
    for (int i = 0; i < n_cells_; ++i) out[i] = center(i);
    return out;
  }

  friend bool operator==(const Grid&, const Grid&) = default;

 private:
  double a_;
  double b_;
  int n_cells_;
};

inline Grid build_uniform(double a, double b, int n_cells) { return Grid(a, b, n_cells); }

inline void require_same_grid(const Grid& lhs, const Grid& rhs) {
  if (!(lhs == rhs)) throw GridMismatch();
}

namespace detail {

inline void require_finite(std::span<const double> values, const char* what) {
  for (double v : values) {
    if (!std::isfinite(v)) throw PreconditionError(std::string(what) + " holds a non-finite value");
  }
}

}  // namespace detail

/// Nodal field, one value per node. With `dirichlet_zero` both boundary values are exactly 0.
class GridFunction {
 public:
  GridFunction(Grid grid, std::vector<double> values, bool dirichlet_zero = false)
      : grid_(std::move(grid)), values_(std::move(values)), dirichlet_zero_(dirichlet_zero) {
    if (static_cast<int>(values_.size()) != grid_.n_nodes()) {
      throw PreconditionError("grid function needs one value per node");
    }
    detail::require_finite(values_, "grid function");
    if (dirichlet_zero_ && (values_.front() != 0.0 || values_.back() != 0.0)) {
      throw PreconditionError("zero-trace grid function has nonzero boundary values");
    }
  }

  /// Samples `fn` at the nodes; with `dirichlet_zero` the boundary entries are set to 0.
  static GridFunction sample(const Grid& grid, const std::function<double(double)>& fn,
                             bool dirichlet_zero = false) {
    std::vector<double> v(grid.n_nodes());
    for (int i = 0; i < grid.n_nodes(); ++i) v[i] = fn(grid.node(i));
    if (dirichlet_zero) v.front() = v.back() = 0.0;
    return GridFunction(grid, std::move(v), dirichlet_zero);
  }

  static GridFunction zero(const Grid& grid) {
    return GridFunction(grid, std::vector<double>(grid.n_nodes(), 0.0), true);
  }

  const Grid& grid() const noexcept { return grid_; }
  std::span<const double> values() const noexcept { return values_; }
  const std::vector<double>& vector() const noexcept { return values_; }
  double operator[](int i) const { return values_[i]; }
  int size() const noexcept { return static_cast<int>(values_.size()); }
  bool dirichlet_zero() const noexcept { return dirichlet_zero_; }

  /// Pointwise map; the zero trace is kept when `fn(0) == 0`.
  GridFunction map(const std::function<double(double)>& fn) const {
    std::vector<double> v(values_.size());
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = fn(values_[i]);
    const bool keep = dirichlet_zero_ && v.front() == 0.0 && v.back() == 0.0;
    return GridFunction(grid_, std::move(v), keep);
  }

 private:
  Grid grid_;
  std::vector<double> values_;
  bool dirichlet_zero_;
};

/// One value per cell, associated with the cell centre.
class CellField {
 public:
  CellField(Grid grid, std::vector<double> values) : grid_(std::move(grid)), values_(std::move(values)) {
    if (static_cast<int>(values_.size()) != grid_.n_cells()) {
      throw PreconditionError("cell field needs one value per cell");
    }
    detail::require_finite(values_, "cell field");
  }

  static CellField sample(const Grid& grid, const std::function<double(double)>& fn) {
    std::vector<double> v(grid.n_cells());
    for (int i = 0; i < grid.n_cells(); ++i) v[i] = fn(grid.center(i));
    return CellField(grid, std::move(v));
  }

  static CellField constant(const Grid& grid, double value) {
    return CellField(grid, std::vector<double>(grid.n_cells(), value));
  }

  const Grid& grid() const noexcept { return grid_; }
  std::span<const double> values() const noexcept { return values_; }
  const std::vector<double>& vector() const noexcept { return values_; }
  double operator[](int i) const { return values_[i]; }
  int size() const noexcept { return static_cast<int>(values_.size()); }

 private:
  Grid grid_;
  std::vector<double> values_;
};

/// Forward difference (u_{i+1} - u_i) / h, read as the derivative at centre i.
inline CellField gradient(const GridFunction& u) {
  const Grid& g = u.grid();
  std::vector<double> d(g.n_cells());
  for (int i = 0; i < g.n_cells(); ++i) d[i] = (u[i + 1] - u[i]) / g.h();
  return CellField(g, std::move(d));
}

/// Midpoint rule, summed left to right.
inline double integrate(const CellField& c) {
  double sum = 0.0;
  for (double v : c.values()) sum += v * c.grid().h();
  return sum;
}

inline CellField nodes_to_cells(const GridFunction& u) {
  const Grid& g = u.grid();
  std::vector<double> c(g.n_cells());
  for (int i = 0; i < g.n_cells(); ++i) c[i] = 0.5 * (u[i] + u[i + 1]);
  return CellField(g, std::move(c));
}

/// Lumped nodal coefficient: interior node i receives the mean of its two cells.
/// Boundary nodes take their single neighbour cell.
inline std::vector<double> cells_to_nodes(const CellField& c) {
  const int n = c.grid().n_cells();
  std::vector<double> out(n + 1);
  out.front() = c[0];
  out.back() = c[n - 1];
  for (int i = 1; i < n; ++i) out[i] = 0.5 * (c[i - 1] + c[i]);
  return out;
}

struct BoundaryFlux {
  double at_a;  ///< outward normal derivative at x = a, i.e. -(u_1 - u_0) / h
  double at_b;  ///< outward normal derivative at x = b, i.e. (u_n - u_{n-1}) / h
};

inline BoundaryFlux boundary_flux(const GridFunction& u) {
  if (!u.dirichlet_zero()) throw PreconditionError("boundary flux needs a zero-trace function");
  const Grid& g = u.grid();
  const int n = g.n_cells();
  return {-(u[1] - u[0]) / g.h(), (u[n] - u[n - 1]) / g.h()};
}

/// Nodal L2 norm with trapezoid (lumped mass) weights.
inline double l2_nodal(const Grid& g, std::span<const double> v) {
  double sum = 0.0;
  const int last = static_cast<int>(v.size()) - 1;
  for (int i = 0; i <= last; ++i) {
    const double w = (i == 0 || i == last) ? 0.5 * g.h() : g.h();
    sum += w * v[i] * v[i];
  }
  return std::sqrt(sum);
}

inline double l2_cells(const CellField& c) {
  double sum = 0.0;
  for (double v : c.values()) sum += v * v * c.grid().h();
  return std::sqrt(sum);
}

inline double sup_distance(const GridFunction& u, const GridFunction& v) {
  require_same_grid(u.grid(), v.grid());
  double d = 0.0;
  for (int i = 0; i < u.size(); ++i) d = std::fmax(d, std::fabs(u[i] - v[i]));
  return d;
}

// -- CSV ---------------------------------------------------------------------

inline std::string format_g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

/// "x,value" header, one row per node, 17 significant digits.
inline std::string to_csv(const GridFunction& u) {
  std::string out = "x,value\n";
  for (int i = 0; i < u.size(); ++i) {
    out += format_g17(u.grid().node(i));
    out += ',';
    out += format_g17(u[i]);
    out += '\n';
  }
  return out;
}

inline void write_csv(const std::string& path, const GridFunction& u) {
  std::ofstream f(path);
  if (!f) throw Error("cannot open " + path + " for writing");
  f << to_csv(u);
}

/// Parses the CSV produced by `to_csv`; the grid is rebuilt from the first and last x.
inline GridFunction from_csv(const std::string& text, bool dirichlet_zero = false) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line.rfind("x,value", 0) != 0) {
    throw Error("CSV must start with the header x,value");
  }
  std::vector<double> xs;
  std::vector<double> vs;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos) throw Error("malformed CSV row: " + line);
    xs.push_back(std::stod(line.substr(0, comma)));
    vs.push_back(std::stod(line.substr(comma + 1)));
  }
  if (xs.size() < 3) throw Error("CSV needs at least three nodes");
  Grid g(xs.front(), xs.back(), static_cast<int>(xs.size()) - 1);
  return GridFunction(g, std::move(vs), dirichlet_zero);
}

}  // namespace varexp
