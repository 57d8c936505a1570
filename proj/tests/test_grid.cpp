#include <cmath>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "varexp/grid.hpp"

using namespace varexp;

TEST(GridBuild, UnitIntervalFourCells) {
  const Grid g = build_uniform(0.0, 1.0, 4);
  EXPECT_EQ(g.h(), 0.25);
  const std::vector<double> c = g.centers();
  ASSERT_EQ(c.size(), 4u);
  EXPECT_EQ(c[0], 0.125);
  EXPECT_EQ(c[1], 0.375);
  EXPECT_EQ(c[2], 0.625);
  EXPECT_EQ(c[3], 0.875);
}

TEST(GridBuild, SymmetricIntervalTwoCells) {
  const Grid g = build_uniform(-1.0, 1.0, 2);
  EXPECT_EQ(g.h(), 1.0);
  EXPECT_EQ(g.nodes(), (std::vector<double>{-1.0, 0.0, 1.0}));
}

TEST(GridBuild, RejectsInvalidInput) {
  EXPECT_THROW(build_uniform(0.0, 1.0, 1), PreconditionError);
  EXPECT_THROW(build_uniform(1.0, 1.0, 4), PreconditionError);
  EXPECT_THROW(build_uniform(2.0, 1.0, 4), PreconditionError);
}

TEST(GridBuild, CoordinatesReproducible) {
  const Grid a(0.3, 2.1, 37);
  const Grid b(0.3, 2.1, 37);
  EXPECT_EQ(a, b);
  EXPECT_EQ(a.nodes(), b.nodes());
  EXPECT_EQ(a.centers(), b.centers());
  EXPECT_EQ(a.node(37), 2.1);
}

TEST(GridFunctionTest, RejectsNonFiniteAndWrongSize) {
  const Grid g(0.0, 1.0, 2);
  EXPECT_THROW(GridFunction(g, {0.0, NAN, 0.0}), PreconditionError);
  EXPECT_THROW(GridFunction(g, {0.0, 1.0}), PreconditionError);
  EXPECT_THROW(GridFunction(g, {1.0, 1.0, 0.0}, true), PreconditionError);
  EXPECT_THROW(CellField(g, {1.0}), PreconditionError);
}

TEST(Gradient, IdentityHasUnitSlope) {
  const Grid g(0.0, 1.0, 8);
  const CellField d = gradient(GridFunction::sample(g, [](double x) { return x; }));
  for (int i = 0; i < 8; ++i) EXPECT_NEAR(d[i], 1.0, 1e-15);
}

TEST(Gradient, ConstantHasZeroSlope) {
  const Grid g(0.0, 1.0, 8);
  const CellField d = gradient(GridFunction::sample(g, [](double) { return 4.2; }));
  for (int i = 0; i < 8; ++i) EXPECT_EQ(d[i], 0.0);
}

TEST(Gradient, QuadraticExactAtCentres) {
  const Grid g(0.0, 1.0, 4);
  const CellField d = gradient(GridFunction::sample(g, [](double x) { return x * x; }));
  const double expected[] = {0.25, 0.75, 1.25, 1.75};
  for (int i = 0; i < 4; ++i) {
    EXPECT_DOUBLE_EQ(d[i], expected[i]);
    EXPECT_DOUBLE_EQ(d[i], 2.0 * g.center(i));
  }
}

TEST(Integrate, ConstantOne) { EXPECT_DOUBLE_EQ(integrate(CellField::constant(Grid(0.0, 1.0, 10), 1.0)), 1.0); }

TEST(Integrate, MidpointExactForLinear) {
  for (int n : {2, 3, 7, 64}) {
    const Grid g(0.0, 1.0, n);
    EXPECT_NEAR(integrate(CellField::sample(g, [](double x) { return x; })), 0.5, 1e-15) << n;
  }
}

TEST(Integrate, QuadraticFourCells) {
  const Grid g(0.0, 1.0, 4);
  // (0.125^2 + 0.375^2 + 0.625^2 + 0.875^2) / 4 = 1.3125 / 4
  EXPECT_DOUBLE_EQ(integrate(CellField::sample(g, [](double x) { return x * x; })), 0.328125);
}

TEST(NodesToCells, Averages) {
  const Grid g3(0.0, 1.0, 8);
  const CellField c = nodes_to_cells(GridFunction::sample(g3, [](double) { return 3.0; }));
  for (int i = 0; i < 8; ++i) EXPECT_EQ(c[i], 3.0);
  const CellField m = nodes_to_cells(GridFunction::sample(g3, [](double x) { return x; }));
  for (int i = 0; i < 8; ++i) EXPECT_NEAR(m[i], g3.center(i), 1e-16);
  const Grid g2(0.0, 1.0, 2);
  const CellField hat = nodes_to_cells(GridFunction(g2, {0.0, 1.0, 0.0}, true));
  EXPECT_EQ(hat[0], 0.5);
  EXPECT_EQ(hat[1], 0.5);
}

TEST(BoundaryFluxTest, ParabolaHasUnitOutwardSlope) {
  for (int n : {16, 64, 256}) {
    const Grid g(0.0, 1.0, n);
    const BoundaryFlux f = boundary_flux(GridFunction::sample(g, [](double x) { return x * (1.0 - x); }, true));
    EXPECT_NEAR(f.at_a, -1.0, 1.0 / n + 1e-12);
    EXPECT_NEAR(f.at_b, -1.0, 1.0 / n + 1e-12);
  }
}

TEST(BoundaryFluxTest, ZeroFunction) {
  const BoundaryFlux f = boundary_flux(GridFunction::zero(Grid(0.0, 1.0, 4)));
  EXPECT_EQ(f.at_a, 0.0);
  EXPECT_EQ(f.at_b, 0.0);
}

TEST(BoundaryFluxTest, SineHasSlopePi) {
  const Grid g(0.0, 1.0, 512);
  const BoundaryFlux f = boundary_flux(GridFunction::sample(g, [](double x) { return std::sin(M_PI * x); }, true));
  // one-sided quotient error is about pi^3 h^2 / 6
  EXPECT_NEAR(f.at_a, -M_PI, 1e-4);
  EXPECT_NEAR(f.at_b, -M_PI, 1e-4);
}

TEST(BoundaryFluxTest, RequiresZeroTrace) {
  const Grid g(0.0, 1.0, 4);
  EXPECT_THROW(boundary_flux(GridFunction::sample(g, [](double) { return 1.0; })), PreconditionError);
}

TEST(GridProperties, GradientTelescopes) {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> n01;
  for (int trial = 0; trial < 100; ++trial) {
    const Grid g(-0.5, 1.5, 10 + trial);
    std::vector<double> v(g.n_nodes());
    for (double& x : v) x = n01(rng);
    const GridFunction u(g, v);
    EXPECT_NEAR(integrate(gradient(u)), v.back() - v.front(), 1e-12);
  }
}

TEST(GridProperties, GradientIsLinear) {
  std::mt19937_64 rng(4);
  std::normal_distribution<double> n01;
  const Grid g(0.0, 1.0, 33);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> a(g.n_nodes()), b(g.n_nodes()), c(g.n_nodes());
    const double alpha = n01(rng);
    const double beta = n01(rng);
    for (int i = 0; i < g.n_nodes(); ++i) {
      a[i] = n01(rng);
      b[i] = n01(rng);
      c[i] = alpha * a[i] + beta * b[i];
    }
    const CellField da = gradient(GridFunction(g, a));
    const CellField db = gradient(GridFunction(g, b));
    const CellField dc = gradient(GridFunction(g, c));
    for (int i = 0; i < g.n_cells(); ++i) {
      EXPECT_NEAR(dc[i], alpha * da[i] + beta * db[i], 1e-12 * (1.0 + std::fabs(dc[i])));
    }
  }
}

TEST(GridCsv, RoundTripsWithSeventeenDigits) {
  const Grid g(0.0, 1.0, 16);
  const GridFunction u = GridFunction::sample(g, [](double x) { return std::sin(3.0 * x) / 7.0; });
  const std::string text = to_csv(u);
  EXPECT_EQ(text.rfind("x,value\n", 0), 0u);
  const GridFunction back = from_csv(text);
  EXPECT_EQ(back.grid(), g);
  EXPECT_EQ(back.vector(), u.vector());
}
