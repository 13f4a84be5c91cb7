#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <functional>

#include "kite/errors.hpp"

namespace kite {

// Numerical quadrature plan for density and kernel integrals on [0,1].
struct IntegrationPlan {
  enum class Scheme { UniformGrid, GaussLegendre };

  Scheme scheme = Scheme::UniformGrid;
  int resolution = 2048;  // points per dimension

  IntegrationPlan() = default;
  IntegrationPlan(Scheme s, int res) : scheme(s), resolution(res) {
    if (resolution < 16) throw InvalidInput("IntegrationPlan: resolution must be >= 16");
  }
  static IntegrationPlan uniform(int res) { return {Scheme::UniformGrid, res}; }
  static IntegrationPlan gauss_legendre(int res) { return {Scheme::GaussLegendre, res}; }
};

// Nodes/weights on [0,1]. Uniform grid uses midpoints (exact for periodic
// trigonometric polynomials below the Nyquist frequency).
struct Quadrature {
  Eigen::VectorXd nodes;
  Eigen::VectorXd weights;
};

namespace detail {
inline Quadrature gauss_legendre_01(int n) {
  Quadrature q;
  q.nodes.resize(n);
  q.weights.resize(n);
  for (int i = 0; i < n; ++i) {
    // Newton iteration on P_n, Chebyshev initial guess.
    double x = std::cos(M_PI * (i + 0.75) / (n + 0.5));
    double pp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = 0.0;
      for (int j = 0; j < n; ++j) {
        double p2 = p1;
        p1 = p0;
        p0 = ((2.0 * j + 1.0) * x * p1 - j * p2) / (j + 1.0);
      }
      pp = n * (x * p0 - p1) / (x * x - 1.0);
      double dx = p0 / pp;
      x -= dx;
      if (std::abs(dx) < 1e-15) break;
    }
    q.nodes[n - 1 - i] = 0.5 * (1.0 + x);
    q.weights[n - 1 - i] = 1.0 / ((1.0 - x * x) * pp * pp);
  }
  return q;
}
}  // namespace detail

/// Uniform grid uses midpoints (exact for periodic trigonometric polynomials
/// under the Nyquist bound). Gauss-Legendre is composite over [0,1/2] and
/// [1/2,1] so densities with a kink at 1/2 (the triangle) integrate to
/// spectral accuracy.
inline Quadrature make_quadrature(const IntegrationPlan& plan) {
  if (plan.resolution < 16) throw InvalidInput("IntegrationPlan: resolution must be >= 16");
  if (plan.scheme == IntegrationPlan::Scheme::GaussLegendre) {
    int half = plan.resolution / 2;
    Quadrature panel = detail::gauss_legendre_01(half);
    Quadrature q;
    q.nodes.resize(2 * half);
    q.weights.resize(2 * half);
    for (int i = 0; i < half; ++i) {
      q.nodes[i] = 0.5 * panel.nodes[i];
      q.weights[i] = 0.5 * panel.weights[i];
      q.nodes[half + i] = 0.5 + 0.5 * panel.nodes[i];
      q.weights[half + i] = 0.5 * panel.weights[i];
    }
    return q;
  }
  Quadrature q;
  int n = plan.resolution;
  q.nodes.resize(n);
  q.weights = Eigen::VectorXd::Constant(n, 1.0 / n);
  for (int i = 0; i < n; ++i) q.nodes[i] = (i + 0.5) / n;
  return q;
}

namespace detail {
inline double adaptive_simpson_rec(const std::function<double(double)>& f, double a, double b,
                                   double fa, double fm, double fb, double whole, double tol,
                                   int depth) {
  double m = 0.5 * (a + b);
  double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  double flm = f(lm), frm = f(rm);
  double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  double delta = left + right - whole;
  if (depth <= 0 || std::abs(delta) <= 15.0 * tol) return left + right + delta / 15.0;
  return adaptive_simpson_rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
         adaptive_simpson_rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}
}  // namespace detail

inline double adaptive_simpson(const std::function<double(double)>& f, double a, double b,
                               double tol = 1e-10, int max_depth = 40) {
  double fa = f(a), fb = f(b), fm = f(0.5 * (a + b));
  double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  return detail::adaptive_simpson_rec(f, a, b, fa, fm, fb, whole, tol, max_depth);
}

}  // namespace kite
