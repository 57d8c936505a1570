#pragma once

// Seeded random fields used by the randomized sweeps of the CLI and the tests.

#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include "varexp/grid.hpp"

namespace varexp {

/// sum_k c_k sin(k pi (x - a) / L) with c_1 in [0.5, 1.5] and |c_k| <= 0.5 / k^2 for k = 2..modes,
/// scaled by `amplitude`, plus `offset`. With offset = 0 the function is positive inside and
/// vanishes at the ends as long as the first mode dominates, which the coefficient bounds ensure.
inline GridFunction random_sine_series(const Grid& g, std::mt19937_64& rng, int modes = 4, double amplitude = 1.0,
                                       double offset = 0.0) {
  std::uniform_real_distribution<double> lead(0.5, 1.5);
  std::uniform_real_distribution<double> rest(-0.5, 0.5);
  std::vector<double> c(modes);
  c[0] = lead(rng);
  for (int k = 1; k < modes; ++k) c[k] = rest(rng) / ((k + 1.0) * (k + 1.0)) * c[0] * 0.5;
  const double len = g.b() - g.a();
  std::vector<double> v(g.n_nodes());
  for (int i = 0; i < g.n_nodes(); ++i) {
    const double s = (g.node(i) - g.a()) / len;
    double sum = 0.0;
    for (int k = 0; k < modes; ++k) sum += c[k] * std::sin((k + 1) * std::numbers::pi * s);
    v[i] = amplitude * sum + offset;
  }
  const bool zero_trace = offset == 0.0;
  if (zero_trace) v.front() = v.back() = 0.0;
  return GridFunction(g, std::move(v), zero_trace);
}

/// Cell field with values uniform in [lo, hi].
inline CellField random_cells(const Grid& g, std::mt19937_64& rng, double lo, double hi) {
  std::uniform_real_distribution<double> u(lo, hi);
  std::vector<double> v(g.n_cells());
  for (double& x : v) x = u(rng);
  return CellField(g, std::move(v));
}

}  // namespace varexp
