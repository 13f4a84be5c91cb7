#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <string>
#include <variant>
#include <vector>

#include "kite/kernels.hpp"
#include "kite/rng.hpp"

namespace kite {

/// Sample points with optional probability weights (uniform 1/n by default).
struct SampleSet {
  std::vector<Point> points;
  Eigen::VectorXd weights;

  static SampleSet uniform(std::vector<Point> pts) {
    SampleSet s;
    const int n = static_cast<int>(pts.size());
    if (n < 1) throw InvalidInput("SampleSet: at least one point");
    s.points = std::move(pts);
    s.weights = Eigen::VectorXd::Constant(n, 1.0 / n);
    return s;
  }

  static SampleSet weighted(std::vector<Point> pts, Eigen::VectorXd w) {
    SampleSet s;
    if (pts.empty() || w.size() != static_cast<Eigen::Index>(pts.size()))
      throw ShapeError("SampleSet: weight length mismatch");
    if (w.minCoeff() < 0.0 || std::abs(w.sum() - 1.0) > 1e-12)
      throw InvalidInput("SampleSet: weights must be a probability vector");
    s.points = std::move(pts);
    s.weights = std::move(w);
    return s;
  }

  int size() const { return static_cast<int>(points.size()); }
};

/// Density on [0,1]: named closed form, tabulated on a uniform grid
/// (renormalized), or uniform.
class DensityOracle {
  struct Uniform {};
  struct Named {
    std::string name;  // "triangle": 4|x - 1/2|; "triangle_mix": 0.9 triangle + 0.1 uniform
  };
  struct Tabulated {
    Eigen::VectorXd grid;    // uniform ascending on [0,1]
    Eigen::VectorXd values;  // renormalized to unit integral
    Eigen::VectorXd cdf;     // at grid nodes
  };

 public:
  static DensityOracle uniform() { return DensityOracle(Uniform{}); }

  static DensityOracle named(const std::string& name) {
    if (name == "uniform") return uniform();
    if (name != "triangle" && name != "triangle_mix")
      throw InvalidInput("DensityOracle: unknown named density '" + name + "'");
    return DensityOracle(Named{name});
  }

  static DensityOracle tabulated(Eigen::VectorXd grid, Eigen::VectorXd values) {
    const int n = static_cast<int>(grid.size());
    if (n < 2 || values.size() != n) throw ShapeError("DensityOracle: grid/value size mismatch");
    if (std::abs(grid[0]) > 1e-9 || std::abs(grid[n - 1] - 1.0) > 1e-9)
      throw DomainError("DensityOracle: grid must span [0,1]");
    const double step = grid[1] - grid[0];
    for (int i = 1; i < n; ++i)
      if (std::abs(grid[i] - grid[i - 1] - step) > 1e-9 * std::max(1.0, step))
        throw DomainError("DensityOracle: grid must be uniform ascending");
    if (values.minCoeff() < 0.0) throw InvalidInput("DensityOracle: density must be nonnegative");
    // trapezoid normalization
    double mass = 0.0;
    for (int i = 0; i + 1 < n; ++i) mass += 0.5 * (values[i] + values[i + 1]) * step;
    if (mass <= 0.0) throw InvalidInput("DensityOracle: zero mass");
    values /= mass;
    Eigen::VectorXd cdf(n);
    cdf[0] = 0.0;
    for (int i = 1; i < n; ++i) cdf[i] = cdf[i - 1] + 0.5 * (values[i] + values[i - 1]) * step;
    cdf[n - 1] = 1.0;
    return DensityOracle(Tabulated{std::move(grid), std::move(values), std::move(cdf)});
  }

  double pdf(double x) const {
    if (x < -1e-12 || x > 1.0 + 1e-12) throw DomainError("DensityOracle: point outside [0,1]");
    x = std::clamp(x, 0.0, 1.0);
    if (std::holds_alternative<Uniform>(v_)) return 1.0;
    if (const auto* nd = std::get_if<Named>(&v_)) {
      double tri = 4.0 * std::abs(x - 0.5);
      return nd->name == "triangle" ? tri : 0.9 * tri + 0.1;
    }
    const auto& t = std::get<Tabulated>(v_);
    const int n = static_cast<int>(t.grid.size());
    double pos = x * (n - 1);
    int i = std::min(static_cast<int>(pos), n - 2);
    double frac = pos - i;
    return t.values[i] * (1.0 - frac) + t.values[i + 1] * frac;
  }

  /// Inverse-CDF sampling; the triangle CDF is piecewise quadratic and
  /// inverted analytically, tabulated densities interpolate the grid CDF.
  double sample(CounterRng& rng) const {
    double u = rng.uniform();
    if (std::holds_alternative<Uniform>(v_)) return u;
    if (const auto* nd = std::get_if<Named>(&v_)) {
      if (nd->name == "triangle_mix" && rng.uniform() < 0.1) return u;  // uniform component
      // triangle CDF F(x) = 2x - 2x^2 for x <= 1/2, 1/2 + 2(x-1/2)^2 beyond
      if (u <= 0.5) return 0.5 * (1.0 - std::sqrt(1.0 - 2.0 * u));
      return 0.5 + std::sqrt(0.5 * (u - 0.5));
    }
    const auto& t = std::get<Tabulated>(v_);
    const int n = static_cast<int>(t.grid.size());
    int lo = 0, hi = n - 1;
    while (hi - lo > 1) {
      int mid = (lo + hi) / 2;
      (t.cdf[mid] <= u ? lo : hi) = mid;
    }
    double span = t.cdf[hi] - t.cdf[lo];
    double frac = span > 0.0 ? (u - t.cdf[lo]) / span : 0.0;
    return t.grid[lo] + frac * (t.grid[hi] - t.grid[lo]);
  }

  bool is_uniform() const { return std::holds_alternative<Uniform>(v_); }

 private:
  using Variant = std::variant<Uniform, Named, Tabulated>;
  explicit DensityOracle(Variant v) : v_(std::move(v)) {}
  Variant v_;
};

inline std::vector<Point> draw_samples(const DensityOracle& density, int n, CounterRng& rng) {
  std::vector<Point> pts(n);
  for (int i = 0; i < n; ++i) {
    Point p(1);
    p[0] = density.sample(rng);
    pts[i] = std::move(p);
  }
  return pts;
}

/// tr[W^{1/2} K W^{1/2} log(W^{1/2} K W^{1/2})] for W = Diag(weights);
/// uniform weights reduce to tr[(1/n)K log((1/n)K)]. Nonpositive, equal to
/// minus the von Neumann entropy of the weighted Gram.
inline double empirical_entropy_gram(const SampleSet& samples, const KernelSpec& kernel) {
  Eigen::MatrixXd k = gram_matrix_real(kernel, samples.points);
  Eigen::VectorXd sw = samples.weights.cwiseSqrt();
  Eigen::MatrixXd wkw = sw.asDiagonal() * k * sw.asDiagonal();
  Eigen::VectorXd lam = eigh_real(wkw).eigenvalues;
  if (lam.minCoeff() < -1e-9 * samples.size())
    throw NotPSD("empirical_entropy_gram: weighted Gram not PSD after flooring");
  return xlogx_sum(lam);
}

/// Toeplitz moment matrix of a density: entries phat(j - i) for
/// |delta| <= band, computed on the plan's grid. phat(d) = int e^{-2 i pi d x} p(x) dx.
inline Eigen::VectorXcd fourier_moments(const DensityOracle& density, int band,
                                        const IntegrationPlan& plan) {
  Quadrature q = make_quadrature(plan);
  Eigen::VectorXd pvals(q.nodes.size());
  for (int g = 0; g < q.nodes.size(); ++g) pvals[g] = density.pdf(q.nodes[g]) * q.weights[g];
  Eigen::VectorXcd phat(band + 1);
  for (int d = 0; d <= band; ++d) {
    Complex acc = 0.0;
    for (int g = 0; g < q.nodes.size(); ++g) {
      double phase = -2.0 * M_PI * d * q.nodes[g];
      acc += pvals[g] * Complex(std::cos(phase), std::sin(phase));
    }
    phat[d] = acc;
  }
  return phat;  // phat(-d) = conj(phat(d))
}

inline HermitianMatrix toeplitz_from_moments(const Eigen::VectorXcd& phat, int m) {
  Eigen::MatrixXcd c(m, m);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j) {
      int d = j - i;
      c(i, j) = d >= 0 ? phat[d] : std::conj(phat[-d]);
    }
  return HermitianMatrix(std::move(c));
}

/// Covariance operator int psi(x) psi(x)* dp(x) of the truncated Fourier map:
/// Lambda^{1/2} C_p Lambda^{1/2} with C_p the Toeplitz moment matrix. Trace
/// equals sum khat(w) (or 1 for normalized maps) for unit-mass densities.
inline DensityOperator quadrature_covariance(const DensityOracle& density,
                                             const FourierFeatureMap& map,
                                             const IntegrationPlan& plan) {
  if (map.dims != 1) throw InvalidInput("quadrature_covariance: 1-D maps (use product forms for d=2)");
  if (plan.resolution < 8 * map.r)
    throw InvalidInput("quadrature_covariance: resolution below Nyquist check (need >= 8r)");
  Eigen::VectorXcd phat = fourier_moments(density, 2 * map.r, plan);
  HermitianMatrix cp = toeplitz_from_moments(phat, 2 * map.r + 1);
  Eigen::VectorXd sw = map.weights().cwiseSqrt();
  Eigen::MatrixXcd sigma = sw.asDiagonal() * cp.mat() * sw.asDiagonal();
  // quadrature noise can push tiny eigenvalues below zero; clip and restore
  // the trace
  HermitianMatrix h(0.5 * (sigma + sigma.adjoint().eval()));
  const double trace_target = h.trace();
  HermitianMatrix clipped = psd_clip(h);
  double tr = clipped.trace();
  if (tr > 0.0 && tr != trace_target) clipped = HermitianMatrix(clipped.mat() * (trace_target / tr));
  return DensityOperator::psd_clipped(std::move(clipped), "fourier", map.normalized);
}

struct ProjectionEstimate {
  double entropy_p;           // von Neumann entropy of the projected operator
  double negative_entropy_p;  // tr[M log M]
  double kl_pq;
};

/// Projection estimator of Eq. (14): with landmarks x_1..x_n, forms
/// (T_p)_{ij} = int k(x_i, x) k(x, x_j) dp(x) by quadrature and evaluates
/// entropy/KL of K^{-1/2} T K^{-1/2} (K regularized by the jitter).
/// A pointwise lower bound on the kernel relative entropy.
inline ProjectionEstimate projection_estimator(const DensityOracle& density_p,
                                               const DensityOracle& density_q,
                                               const SampleSet& landmarks,
                                               const KernelSpec& kernel,
                                               const IntegrationPlan& plan, double jitter) {
  const int n = landmarks.size();
  Quadrature q = make_quadrature(plan);
  const int ng = static_cast<int>(q.nodes.size());

  Eigen::MatrixXd e(n, ng);
  for (int i = 0; i < n; ++i) {
    Point g(1);
    for (int j = 0; j < ng; ++j) {
      g[0] = q.nodes[j];
      e(i, j) = kernel_eval(kernel, landmarks.points[i], g);
    }
  }
  Eigen::VectorXd wp(ng), wq(ng);
  for (int j = 0; j < ng; ++j) {
    wp[j] = density_p.pdf(q.nodes[j]) * q.weights[j];
    wq[j] = density_q.pdf(q.nodes[j]) * q.weights[j];
  }
  Eigen::MatrixXd tp = e * wp.asDiagonal() * e.transpose();
  Eigen::MatrixXd tq = e * wq.asDiagonal() * e.transpose();

  Eigen::MatrixXd k = gram_matrix_real(kernel, landmarks.points);
  k.diagonal().array() += jitter;
  RealSpectralDecomposition kd = eigh_real(k);
  if (kd.eigenvalues.maxCoeff() <= 0.0)
    throw IllConditioned("projection_estimator: kernel matrix singular even with jitter");
  // directions whose shifted eigenvalue is jitter-dominated carry only
  // round-off; restricting the span to the remainder is still a projection
  int first = 0;
  while (first < n && kd.eigenvalues[first] <= 2.0 * jitter) ++first;
  if (first == n) throw IllConditioned("projection_estimator: kernel matrix singular even with jitter");
  const int kept = n - first;
  Eigen::MatrixXd basis = kd.eigenvectors.rightCols(kept) *
                          kd.eigenvalues.tail(kept).cwiseSqrt().cwiseInverse().asDiagonal();

  auto project = [&](const Eigen::MatrixXd& t) {
    Eigen::MatrixXd m = basis.transpose() * t * basis;
    return DensityOperator::psd_clipped(HermitianMatrix::from_real(0.5 * (m + m.transpose())),
                                        "landmark-span", /*normalized=*/false);
  };
  DensityOperator mp = project(tp);
  DensityOperator mq = project(tq);
  double neg = xlogx_sum(mp.eig().eigenvalues);
  return {-neg, neg, relative_entropy(mp, mq)};
}

/// Degrees of freedom tr[Sigma (Sigma + lambda I)^{-1}] = sum_w khat/(khat+lambda)
/// for the torus kernel, summed over all of Z^d to convergence.
inline double degrees_of_freedom(const FourierFeatureMap& map, double lambda) {
  if (lambda <= 0.0) throw DomainError("degrees_of_freedom: lambda must be positive");
  const double khat0 = std::pow(std::tanh(0.5 * map.sigma), map.dims);
  const double nu = lambda / khat0;
  double acc = 0.0;
  for (long k = 0;; ++k) {
    double count = 1.0;
    if (map.dims == 1)
      count = (k == 0) ? 1.0 : 2.0;
    else
      count = (k == 0) ? 1.0 : 4.0 * static_cast<double>(k);
    double term = count / (1.0 + nu * std::exp(map.sigma * static_cast<double>(k)));
    acc += term;
    if (k > 8 && term < 1e-16 * std::max(acc, 1.0)) break;
    if (k > 20000000) throw IllConditioned("degrees_of_freedom: series did not converge");
  }
  return acc;
}

/// Small-bandwidth upper bound on the degrees of freedom:
/// e^{-sigma d/2} (d!/sinh^d(sigma/2)) [1 + log(tanh^d(sigma/2)/lambda)^d],
/// valid for lambda <= tanh^d(sigma/2) in the sigma -> 0 regime.
inline double degrees_of_freedom_bound(double sigma, int dims, double lambda) {
  const double khat0 = std::pow(std::tanh(0.5 * sigma), dims);
  if (lambda > khat0) throw DomainError("degrees_of_freedom_bound: requires lambda <= tanh^d(sigma/2)");
  double fact = 1.0;
  for (int i = 2; i <= dims; ++i) fact *= i;
  return std::exp(-0.5 * sigma * dims) * fact / std::pow(std::sinh(0.5 * sigma), dims) *
         (1.0 + std::pow(std::log(khat0 / lambda), dims));
}

struct SandwichResult {
  double d_smoothed;  // D(p~ || q~), Shannon KL of the h-smoothed densities
  double d_kernel;    // D(Sigma_p || Sigma_q)
  double d_shannon;   // D(p || q)
};

/// Evaluates the chain D(p~||q~) <= D(Sigma_p||Sigma_q) <= D(p||q) on the
/// torus and checks both inequalities within the given slack.
inline SandwichResult sandwich_check(const DensityOracle& density_p, const DensityOracle& density_q,
                                     double sigma, const IntegrationPlan& plan,
                                     double slack = 1e-6) {
  FourierFeatureMap map = FourierFeatureMap::truncated_for_divergence(sigma);
  IntegrationPlan eff = plan;
  if (eff.resolution < 8 * map.r) eff.resolution = 8 * map.r;
  Quadrature q = make_quadrature(IntegrationPlan::uniform(eff.resolution));
  const int ng = static_cast<int>(q.nodes.size());

  Eigen::VectorXd p(ng), qv(ng);
  for (int g = 0; g < ng; ++g) {
    p[g] = density_p.pdf(q.nodes[g]);
    qv[g] = density_q.pdf(q.nodes[g]);
  }
  if (p.minCoeff() < 1e-6 || qv.minCoeff() < 1e-6)
    throw DomainError("sandwich_check: densities must be strictly positive");

  // circular convolution with h on the uniform grid
  Eigen::VectorXd h(ng);
  for (int d = 0; d < ng; ++d) h[d] = smoothing_kernel_h(sigma, static_cast<double>(d) / ng);
  Eigen::VectorXd ps = Eigen::VectorXd::Zero(ng), qs = Eigen::VectorXd::Zero(ng);
  for (int y = 0; y < ng; ++y) {
    double accp = 0.0, accq = 0.0;
    for (int x = 0; x < ng; ++x) {
      int d = y - x;
      if (d < 0) d += ng;
      accp += h[d] * p[x];
      accq += h[d] * qv[x];
    }
    ps[y] = accp / ng;
    qs[y] = accq / ng;
  }

  auto kl_grid = [&](const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    double acc = 0.0;
    for (int g = 0; g < ng; ++g) acc += q.weights[g] * a[g] * std::log(a[g] / b[g]);
    return acc;
  };

  DensityOperator sp = quadrature_covariance(density_p, map, eff);
  DensityOperator sq = quadrature_covariance(density_q, map, eff);
  SandwichResult r{kl_grid(ps, qs), relative_entropy(sp, sq), kl_grid(p, qv)};
  if (r.d_smoothed > r.d_kernel + slack || r.d_kernel > r.d_shannon + slack)
    throw PropertyViolation("sandwich: D(p~||q~) <= D(Sigma_p||Sigma_q) <= D(p||q) violated");
  return r;
}

/// Prop. 1(d) on the sample span: the weighted Gram dominates the rank-one
/// mean-embedding term, i.e. lambda_min of R K R with R = (W - ww^T)^{1/2}
/// is above -1e-8.
inline bool mean_embedding_check(const SampleSet& samples, const KernelSpec& kernel) {
  Eigen::MatrixXd k = gram_matrix_real(kernel, samples.points);
  const Eigen::VectorXd& w = samples.weights;
  Eigen::MatrixXd wm = Eigen::MatrixXd(w.asDiagonal()) - w * w.transpose();
  RealSpectralDecomposition d = eigh_real(wm);
  Eigen::MatrixXd r = d.eigenvectors * d.eigenvalues.cwiseMax(0.0).cwiseSqrt().asDiagonal() *
                      d.eigenvectors.transpose();
  Eigen::VectorXd lam = eigh_real(r * k * r).eigenvalues;
  return lam.minCoeff() >= -1e-8;
}

}  // namespace kite
