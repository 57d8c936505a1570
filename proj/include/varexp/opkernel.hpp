#pragma once

// Operators A(x, xi) that are positively p(x)-homogeneous and strictly convex
// in xi, their flux a = (1/p) dA/dxi, and sampling probes for each hypothesis.

#include <algorithm>
#include <cfloat>
#include <cmath>
#include <functional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "varexp/error.hpp"
#include "varexp/expr.hpp"

namespace varexp {

class OperatorKernel {
 public:
  using Fn = std::function<double(double x, double xi)>;
  using ExponentFn = std::function<double(double x)>;

  OperatorKernel(std::string name, Fn value, Fn gradient, ExponentFn exponent)
      : name_(std::move(name)), value_(std::move(value)), gradient_(std::move(gradient)),
        exponent_(std::move(exponent)) {}

  const std::string& name() const noexcept { return name_; }
  double A(double x, double xi) const { return value_(x, xi); }
  double dA(double x, double xi) const { return gradient_(x, xi); }
  double a(double x, double xi) const { return gradient_(x, xi) / exponent_(x); }
  double exponent(double x) const { return exponent_(x); }

 private:
  std::string name_;
  Fn value_;
  Fn gradient_;
  ExponentFn exponent_;
};

/// A(x, xi) = |xi|^{p(x)}, dA = p |xi|^{p-2} xi (0 at xi = 0).
inline OperatorKernel plap(OperatorKernel::ExponentFn p) {
  auto value = [p](double x, double xi) { return std::pow(std::fabs(xi), p(x)); };
  auto grad = [p](double x, double xi) {
    if (xi == 0.0) return 0.0;
    const double px = p(x);
    return px * std::pow(std::fabs(xi), px - 1.0) * (xi > 0.0 ? 1.0 : -1.0);
  };
  return OperatorKernel("plap", value, grad, std::move(p));
}

inline OperatorKernel plap(const expr::Expression& p) {
  return plap([p](double x) { return p(x); });
}

/// Kernel given by expressions in x and xi. Only used for probing.
inline OperatorKernel kernel_from_expressions(std::string name, const expr::Expression& value,
                                              const expr::Expression& gradient, const expr::Expression& p) {
  return OperatorKernel(
      std::move(name), [value](double x, double xi) { return value.eval(expr::Bindings{x, std::nullopt, xi}); },
      [gradient](double x, double xi) { return gradient.eval(expr::Bindings{x, std::nullopt, xi}); },
      [p](double x) { return p(x); });
}

/// Coordinate-wise kernels B_i with their own exponents p_i.
struct AnisoKernel {
  std::vector<OperatorKernel> components;
};

inline double eval_A(const OperatorKernel& k, double x, double xi) { return k.A(x, xi); }
inline double eval_a(const OperatorKernel& k, double x, double xi) { return k.a(x, xi); }

/// N_r(x, xi) = A(x, xi)^{r / p(x)}.
inline double eval_Nr(const OperatorKernel& k, double x, double xi, double r) {
  if (!(r >= 1.0)) throw PreconditionError("N_r needs r >= 1");
  return std::pow(k.A(x, xi), r / k.exponent(x));
}

/// theta F(xi1) + (1 - theta) F(xi2) - F(theta xi1 + (1 - theta) xi2) for F = A.
inline double midpoint_convexity_gap(const OperatorKernel& k, double x, double xi1, double xi2, double theta) {
  return theta * k.A(x, xi1) + (1.0 - theta) * k.A(x, xi2) - k.A(x, theta * xi1 + (1.0 - theta) * xi2);
}

/// Same gap for N_r.
inline double nr_midpoint_gap(const OperatorKernel& k, double x, double xi1, double xi2, double theta, double r) {
  return theta * eval_Nr(k, x, xi1, r) + (1.0 - theta) * eval_Nr(k, x, xi2, r) -
         eval_Nr(k, x, theta * xi1 + (1.0 - theta) * xi2, r);
}

struct ProbeDomain {
  double x_lo = 0.0;
  double x_hi = 1.0;
  double xi_max = 4.0;
};

struct ProbeReport {
  std::string name;
  int samples = 0;
  double max_violation = 0.0;  ///< largest normalised defect seen
  double tol = 0.0;
  bool holds = false;
  double strict_gap_min = 0.0;  ///< convexity probe only: smallest gap off common rays
  double estimate = 0.0;        ///< lambda probe only: empirical Lambda
};

namespace detail {

class ProbeSampler {
 public:
  ProbeSampler(unsigned long long seed, const ProbeDomain& d) : rng_(seed), d_(d) {}

  double x() { return std::uniform_real_distribution<double>(d_.x_lo, d_.x_hi)(rng_); }
  double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng_); }

  /// xi in [-xi_max, xi_max] with |xi| >= excluded.
  double xi(double excluded = 0.0) {
    for (;;) {
      const double v = uniform(-d_.xi_max, d_.xi_max);
      if (std::fabs(v) >= excluded && v != 0.0) return v;
    }
  }

 private:
  std::mt19937_64 rng_;
  ProbeDomain d_;
};

}  // namespace detail

/// Homogeneity: |A(x, t xi) - t^p A(x, xi)| / (1 + |A(x, t xi)|) over t in [0, 4]; t = 0 is always included.
inline ProbeReport homogeneity_probe(const OperatorKernel& k, int samples, unsigned long long seed,
                                     ProbeDomain domain = {}) {
  if (samples <= 0) throw PreconditionError("probe needs samples > 0");
  detail::ProbeSampler s(seed, domain);
  ProbeReport r{.name = "homogeneity", .samples = samples, .tol = 1e-9};
  for (int i = 0; i < samples; ++i) {
    const double x = s.x();
    const double xi = s.xi();
    const double t = i == 0 ? 0.0 : s.uniform(0.0, 4.0);
    const double scaled = k.A(x, t * xi);
    const double expect = std::pow(t, k.exponent(x)) * k.A(x, xi);
    r.max_violation = std::max(r.max_violation, std::fabs(scaled - expect) / (1.0 + std::fabs(scaled)));
  }
  r.holds = r.max_violation <= r.tol;
  return r;
}

/// Convexity: midpoint convexity and, for xi1, xi2 of opposite sign, the strict gap.
inline ProbeReport convexity_probe(const OperatorKernel& k, int samples, unsigned long long seed,
                                   ProbeDomain domain = {}) {
  if (samples <= 0) throw PreconditionError("probe needs samples > 0");
  detail::ProbeSampler s(seed, domain);
  ProbeReport r{.name = "convexity", .samples = samples, .tol = 1e-9};
  r.strict_gap_min = INFINITY;
  for (int i = 0; i < samples; ++i) {
    const double x = s.x();
    const double xi1 = s.xi();
    double xi2 = s.xi();
    if (xi2 == xi1) xi2 = -xi1;
    const double theta = s.uniform(0.01, 0.99);
    const double chord = theta * k.A(x, xi1) + (1.0 - theta) * k.A(x, xi2);
    const double gap = midpoint_convexity_gap(k, x, xi1, xi2, theta) / (1.0 + std::fabs(chord));
    r.max_violation = std::max(r.max_violation, -gap);
    if ((xi1 > 0.0) != (xi2 > 0.0)) r.strict_gap_min = std::min(r.strict_gap_min, gap);
  }
  r.holds = r.max_violation <= r.tol;
  return r;
}

/// A(x, xi) = A(x, -xi) and A(x, xi) > 0 for xi != 0.
inline ProbeReport symmetry_probe(const OperatorKernel& k, int samples, unsigned long long seed,
                                  ProbeDomain domain = {}) {
  detail::ProbeSampler s(seed, domain);
  ProbeReport r{.name = "symmetry", .samples = samples, .tol = 1e-12};
  bool positive = true;
  for (int i = 0; i < samples; ++i) {
    const double x = s.x();
    const double xi = s.xi(1e-4);
    const double plus = k.A(x, xi);
    const double minus = k.A(x, -xi);
    positive = positive && plus > 0.0;
    r.max_violation = std::max(r.max_violation, std::fabs(plus - minus) / (1.0 + std::fabs(plus)));
  }
  r.holds = positive && r.max_violation <= r.tol;
  return r;
}

/// a(x, xi) xi = A(x, xi), relative.
inline ProbeReport euler_identity_probe(const OperatorKernel& k, int samples, unsigned long long seed,
                                        ProbeDomain domain = {}) {
  detail::ProbeSampler s(seed, domain);
  ProbeReport r{.name = "euler_identity", .samples = samples, .tol = 1e-10};
  for (int i = 0; i < samples; ++i) {
    const double x = s.x();
    const double xi = s.xi(1e-4);
    const double value = k.A(x, xi);
    const double defect = std::fabs(k.a(x, xi) * xi - value) / std::max(std::fabs(value), DBL_MIN);
    r.max_violation = std::max(r.max_violation, defect);
  }
  r.holds = r.max_violation <= r.tol;
  return r;
}

/// Central difference of A in xi with step 1e-6 (1 + |xi|) against the supplied gradient.
inline ProbeReport grad_consistency(const OperatorKernel& k, int samples, unsigned long long seed,
                                    ProbeDomain domain = {}) {
  detail::ProbeSampler s(seed, domain);
  ProbeReport r{.name = "grad_consistency", .samples = samples, .tol = 1e-5};
  for (int i = 0; i < samples; ++i) {
    const double x = s.x();
    const double xi = s.xi(1e-4);
    const double step = 1e-6 * (1.0 + std::fabs(xi));
    const double fd = (k.A(x, xi + step) - k.A(x, xi - step)) / (2.0 * step);
    const double g = k.dA(x, xi);
    const double defect = std::fabs(fd - g) / std::max({std::fabs(g), std::fabs(fd), DBL_MIN});
    r.max_violation = std::max(r.max_violation, defect);
  }
  r.holds = r.max_violation <= r.tol;
  return r;
}

/// Empirical Lambda in |da/dxi| <= Lambda |xi|^{p-2}. Reported, never judged.
inline ProbeReport lambda_probe(const OperatorKernel& k, int samples, unsigned long long seed,
                                ProbeDomain domain = {}) {
  detail::ProbeSampler s(seed, domain);
  ProbeReport r{.name = "lambda", .samples = samples, .holds = true};
  for (int i = 0; i < samples; ++i) {
    const double x = s.x();
    const double xi = s.xi(1e-2);
    const double step = 1e-6 * (1.0 + std::fabs(xi));
    const double da = (k.a(x, xi + step) - k.a(x, xi - step)) / (2.0 * step);
    r.estimate = std::max(r.estimate, std::fabs(da) / std::pow(std::fabs(xi), k.exponent(x) - 2.0));
  }
  return r;
}

}  // namespace varexp
