#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <optional>
#include <variant>
#include <vector>

#include "kite/quantum.hpp"

namespace kite {

using Point = Eigen::VectorXd;

/// Translation-invariant kernel on the torus [0,1]^dims with Fourier series
/// khat(w) = tanh^dims(sigma/2) exp(-sigma*||w||_1). Satisfies k(x,x) = 1.
struct TorusExpKernel {
  double sigma = 1.0;
  int dims = 1;
};

/// Kernel on a finite set {0,...,m-1} given by its Gram matrix (PSD, unit
/// diagonal) and base-measure weights. Points are integer indices.
struct FiniteGramKernel {
  Eigen::MatrixXd gram;
  Eigen::VectorXd base_weights;
};

/// Gaussian kernel exp(-(x-y)^2/sigma^2) on [0,1]; sample-based Gram paths
/// only (no Fourier representation, excluded from varinf).
struct GaussianIntervalKernel {
  double sigma = 1.0;
};

class KernelSpec;

struct ProductKernel {
  std::vector<KernelSpec> factors;
};

class KernelSpec {
 public:
  using Variant =
      std::variant<TorusExpKernel, FiniteGramKernel, GaussianIntervalKernel, ProductKernel>;

  static KernelSpec torus_exp(double sigma, int dims = 1) {
    if (sigma <= 0.0) throw InvalidInput("TorusExp: sigma must be positive");
    if (dims < 1) throw InvalidInput("TorusExp: dims must be positive");
    return KernelSpec(TorusExpKernel{sigma, dims});
  }

  static KernelSpec finite_gram(Eigen::MatrixXd gram, std::optional<Eigen::VectorXd> weights = {}) {
    const int m = static_cast<int>(gram.rows());
    if (gram.cols() != m || m < 1) throw ShapeError("FiniteGram: square Gram required");
    for (int i = 0; i < m; ++i)
      if (std::abs(gram(i, i) - 1.0) > 1e-12) throw InvalidInput("FiniteGram: unit diagonal required");
    Eigen::VectorXd lam = eigh_real(gram).eigenvalues;
    if (lam.minCoeff() < -1e-9 * m) throw NotPSD("FiniteGram: Gram is not PSD");
    Eigen::VectorXd w = weights ? *weights : Eigen::VectorXd::Constant(m, 1.0 / m);
    if (w.size() != m || w.minCoeff() < 0.0 || std::abs(w.sum() - 1.0) > 1e-12)
      throw InvalidInput("FiniteGram: base_weights must be a probability vector");
    return KernelSpec(FiniteGramKernel{std::move(gram), std::move(w)});
  }

  static KernelSpec gaussian_interval(double sigma) {
    if (sigma <= 0.0) throw InvalidInput("GaussianOnInterval: sigma must be positive");
    return KernelSpec(GaussianIntervalKernel{sigma});
  }

  static KernelSpec product(std::vector<KernelSpec> factors) {
    if (factors.empty()) throw InvalidInput("Product: at least one factor");
    return KernelSpec(ProductKernel{std::move(factors)});
  }

  const Variant& variant() const { return v_; }

  int point_dim() const {
    return std::visit(
        [](const auto& k) -> int {
          using T = std::decay_t<decltype(k)>;
          if constexpr (std::is_same_v<T, TorusExpKernel>) return k.dims;
          if constexpr (std::is_same_v<T, ProductKernel>) {
            int d = 0;
            for (const auto& f : k.factors) d += f.point_dim();
            return d;
          }
          return 1;
        },
        v_);
  }

 private:
  explicit KernelSpec(Variant v) : v_(std::move(v)) {}
  Variant v_;
};

/// Torus kernel closed form 1/(1 + sin^2(pi d)/sinh^2(sigma/2)); equal to
/// (1-e^-s)^2 / (1 + e^-2s - 2 e^-s cos 2 pi d).
inline double torus_kernel_1d(double sigma, double delta) {
  double s = std::sin(M_PI * delta);
  double sh = std::sinh(0.5 * sigma);
  return 1.0 / (1.0 + s * s / (sh * sh));
}

/// khat(w) = tanh^d(sigma/2) e^{-sigma ||w||_1}
inline double torus_fourier_coefficient(double sigma, int dims, double l1_norm) {
  return std::pow(std::tanh(0.5 * sigma), dims) * std::exp(-sigma * l1_norm);
}

/// Closed form of sum_w khat(w) log khat(w) over all of Z (dims = 1):
/// log tanh(sigma/2) - sigma/sinh(sigma).
inline double torus_khat_log_khat_sum(double sigma) {
  return std::log(std::tanh(0.5 * sigma)) - sigma / std::sinh(sigma);
}

inline double kernel_eval(const KernelSpec& spec, const Point& x, const Point& y) {
  if (x.size() != spec.point_dim() || y.size() != spec.point_dim())
    throw DomainError("kernel_eval: point dimension mismatch");
  return std::visit(
      [&](const auto& k) -> double {
        using T = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<T, TorusExpKernel>) {
          double prod = 1.0;
          for (int j = 0; j < k.dims; ++j) {
            if (x[j] < -1e-12 || x[j] > 1.0 + 1e-12 || y[j] < -1e-12 || y[j] > 1.0 + 1e-12)
              throw DomainError("kernel_eval: torus points must lie in [0,1]^d");
            prod *= torus_kernel_1d(k.sigma, x[j] - y[j]);
          }
          return prod;
        } else if constexpr (std::is_same_v<T, FiniteGramKernel>) {
          const int m = static_cast<int>(k.gram.rows());
          int i = static_cast<int>(std::llround(x[0]));
          int j = static_cast<int>(std::llround(y[0]));
          if (std::abs(x[0] - i) > 1e-9 || std::abs(y[0] - j) > 1e-9 || i < 0 || j < 0 || i >= m ||
              j >= m)
            throw DomainError("kernel_eval: finite-set points are integer indices into the Gram");
          return k.gram(i, j);
        } else if constexpr (std::is_same_v<T, GaussianIntervalKernel>) {
          double d = x[0] - y[0];
          return std::exp(-d * d / (k.sigma * k.sigma));
        } else {  // ProductKernel
          double prod = 1.0;
          int off = 0;
          for (const auto& f : k.factors) {
            int d = f.point_dim();
            prod *= kernel_eval(f, x.segment(off, d), y.segment(off, d));
            off += d;
          }
          return prod;
        }
      },
      spec.variant());
}

inline double fourier_coefficient(const KernelSpec& spec, const Eigen::VectorXi& omega) {
  const auto* torus = std::get_if<TorusExpKernel>(&spec.variant());
  if (!torus) throw InvalidInput("fourier_coefficient: TorusExp kernel required");
  if (omega.size() != torus->dims) throw ShapeError("fourier_coefficient: frequency dimension");
  return torus_fourier_coefficient(torus->sigma, torus->dims,
                                   static_cast<double>(omega.cwiseAbs().sum()));
}

inline Eigen::MatrixXd gram_matrix_real(const KernelSpec& spec, const std::vector<Point>& points) {
  const int n = static_cast<int>(points.size());
  if (n < 1) throw InvalidInput("gram_matrix: at least one point");
  Eigen::MatrixXd k(n, n);
  for (int i = 0; i < n; ++i) {
    k(i, i) = kernel_eval(spec, points[i], points[i]);
    for (int j = i + 1; j < n; ++j) {
      double v = kernel_eval(spec, points[i], points[j]);
      k(i, j) = v;
      k(j, i) = v;
    }
  }
  return k;
}

inline HermitianMatrix gram_matrix(const KernelSpec& spec, const std::vector<Point>& points) {
  return HermitianMatrix::from_real(gram_matrix_real(spec, points));
}

/// Truncated Fourier feature map on the torus: frequencies ||w||_inf <= r,
/// weights khat(w)^{1/2} (divided by the total mass when normalized).
struct FourierFeatureMap {
  double sigma = 1.0;
  int r = 0;
  int dims = 1;
  bool normalized = true;

  /// Default truncation: khat(r) < 1e-14 khat(0), i.e. r = ceil(32.2/sigma).
  static FourierFeatureMap truncated(double sigma, int dims = 1, bool normalized = true) {
    if (sigma <= 0.0) throw InvalidInput("FourierFeatureMap: sigma must be positive");
    return {sigma, static_cast<int>(std::ceil(32.2 / sigma)), dims, normalized};
  }

  /// Truncation for relative-entropy computations between covariances:
  /// khat(r) ~ 1e-10 khat(0), so the retained spectrum stays well above the
  /// tau_floor support detection and density reweighting cannot push
  /// eigenvalues across it.
  static FourierFeatureMap truncated_for_divergence(double sigma, int dims = 1,
                                                    bool normalized = true) {
    if (sigma <= 0.0) throw InvalidInput("FourierFeatureMap: sigma must be positive");
    return {sigma, static_cast<int>(std::ceil(23.0 / sigma)), dims, normalized};
  }

  static FourierFeatureMap with_r(double sigma, int r, int dims = 1, bool normalized = true) {
    if (sigma <= 0.0) throw InvalidInput("FourierFeatureMap: sigma must be positive");
    if (r < 0 || dims < 1 || dims > 2) throw InvalidInput("FourierFeatureMap: need r >= 0, dims in {1,2}");
    return {sigma, r, dims, normalized};
  }

  int size() const {
    int m = 2 * r + 1;
    return dims == 1 ? m : m * m;
  }

  // Flat index over frequencies; dims=1: w = flat - r. dims=2 row-major.
  Eigen::VectorXi frequency(int flat) const {
    Eigen::VectorXi w(dims);
    int m = 2 * r + 1;
    if (dims == 1) {
      w[0] = flat - r;
    } else {
      w[0] = flat / m - r;
      w[1] = flat % m - r;
    }
    return w;
  }

  /// khat over the truncation, optionally renormalized to unit total mass.
  Eigen::VectorXd weights() const {
    Eigen::VectorXd w(size());
    for (int i = 0; i < w.size(); ++i)
      w[i] = torus_fourier_coefficient(sigma, dims,
                                       static_cast<double>(frequency(i).cwiseAbs().sum()));
    if (normalized) w /= w.sum();
    return w;
  }

  /// ||psi(x)||^2 = sum khat(w); constant in x. For dims=1 unnormalized maps
  /// it equals 1 - e^{-sigma (r+1/2)}/cosh(sigma/2).
  double norm_sq() const { return normalized ? 1.0 : weights().sum(); }

  /// psi_w(x) = weight(w)^{1/2} e^{2 i pi <w, x>}
  Eigen::VectorXcd feature(const Point& x) const {
    if (x.size() != dims) throw DomainError("FourierFeatureMap: point dimension");
    Eigen::VectorXd w = weights();
    Eigen::VectorXcd phi(size());
    for (int i = 0; i < phi.size(); ++i) {
      Eigen::VectorXi om = frequency(i);
      double phase = 0.0;
      for (int j = 0; j < dims; ++j) phase += 2.0 * M_PI * om[j] * x[j];
      phi[i] = std::sqrt(w[i]) * Complex(std::cos(phase), std::sin(phase));
    }
    return phi;
  }
};

/// Covariance operator of the uniform base measure in the Fourier basis:
/// diagonal with entries khat(w) over the truncation. Unit trace when the
/// map is normalized, otherwise flagged unnormalized with trace sum khat.
inline DensityOperator base_covariance_spectrum(const FourierFeatureMap& map) {
  return DensityOperator::diagonal(map.weights(), "fourier", map.normalized);
}

/// Smoothing kernel h(delta) = <phi(x), Sigma^{-1/2} phi(y)>^2 on the torus:
/// (tanh(sigma/2)/tanh^2(sigma/4)) (1 + sin^2(pi delta)/sinh^2(sigma/4))^{-2}.
inline double smoothing_kernel_h(double sigma, double delta) {
  if (sigma <= 0.0) throw InvalidInput("smoothing_kernel_h: sigma must be positive");
  double s = std::sin(M_PI * delta);
  double sh = std::sinh(0.25 * sigma);
  double base = 1.0 + s * s / (sh * sh);
  return std::tanh(0.5 * sigma) / std::pow(std::tanh(0.25 * sigma), 2) / (base * base);
}

/// Closed form of int h(d) sin^2(pi d) dd, bounded by sigma^2/16.
inline double smoothing_kernel_sin2_integral(double sigma) {
  double sh = std::sinh(0.25 * sigma);
  return std::tanh(0.5 * sigma) / std::pow(std::tanh(0.25 * sigma), 2) * std::pow(sh, 3) /
         (2.0 * std::pow(1.0 + sh * sh, 1.5));
}

/// Symmetric square root K^{1/2}; its columns are an explicit embedding of
/// the finite set (column dot products reproduce the Gram).
inline Eigen::MatrixXd finite_feature_matrix(const FiniteGramKernel& k) {
  RealSpectralDecomposition d = eigh_real(k.gram);
  Eigen::VectorXd s = d.eigenvalues.cwiseMax(0.0).cwiseSqrt();
  return d.eigenvectors * s.asDiagonal() * d.eigenvectors.transpose();
}

/// Covariance operator of a probability table over the finite set, in the
/// explicit embedding: K^{1/2} Diag(p) K^{1/2}.
inline DensityOperator finite_covariance(const FiniteGramKernel& k, const Eigen::VectorXd& probs,
                                         bool normalized = true) {
  if (probs.size() != k.gram.rows()) throw ShapeError("finite_covariance: table size");
  Eigen::MatrixXd e = finite_feature_matrix(k);
  Eigen::MatrixXd sigma = e * probs.asDiagonal() * e.transpose();
  return DensityOperator::from_real(0.5 * (sigma + sigma.transpose()), "finite", normalized);
}

/// min_x <phi(x), log(Sigma) phi(x)> for the truncated torus map; the
/// diagonal is constant (symmetric set), so this is sum_w khat log khat over
/// the truncation, i.e. tr[Sigma log Sigma].
inline double min_diag_log_sigma(const FourierFeatureMap& map) {
  Eigen::VectorXd w = map.weights();
  double s = 0.0;
  for (int i = 0; i < w.size(); ++i) s += w[i] * std::log(w[i]);
  return s;
}

/// min over finite-set points of <phi(i), log(Sigma) phi(i)> where Sigma is
/// the base covariance. Returns tr[Sigma log Sigma] when the diagonal is
/// constant (symmetric Gram); otherwise takes the minimum over the supplied
/// index grid (all indices when omitted, exhaustive and exact).
inline double min_diag_log_sigma(const FiniteGramKernel& k,
                                 const std::optional<std::vector<int>>& grid = std::nullopt) {
  const int m = static_cast<int>(k.gram.rows());
  Eigen::MatrixXd e = finite_feature_matrix(k);
  Eigen::MatrixXd sigma = e * k.base_weights.asDiagonal() * e.transpose();
  RealSpectralDecomposition d = eigh_real(sigma);
  const double floor = tau_floor(d.eigenvalues);
  Eigen::VectorXd logl(d.eigenvalues.size());
  for (int i = 0; i < logl.size(); ++i)
    logl[i] = std::log(std::max(d.eigenvalues[i], floor));
  Eigen::MatrixXd logsigma = d.eigenvectors * logl.asDiagonal() * d.eigenvectors.transpose();
  Eigen::VectorXd diag(m);
  for (int i = 0; i < m; ++i) diag[i] = e.col(i).dot(logsigma * e.col(i));

  const bool symmetric = (diag.maxCoeff() - diag.minCoeff()) <= 1e-10 * (1.0 + diag.cwiseAbs().maxCoeff());
  if (symmetric) {
    double tr = 0.0;  // tr[Sigma log Sigma] with flooring
    for (int i = 0; i < d.eigenvalues.size(); ++i)
      if (d.eigenvalues[i] > floor) tr += d.eigenvalues[i] * std::log(d.eigenvalues[i]);
    return tr;
  }
  if (grid && grid->empty()) throw DomainError("min_diag_log_sigma: empty grid on non-symmetric set");
  double best = std::numeric_limits<double>::infinity();
  if (grid) {
    for (int i : *grid) {
      if (i < 0 || i >= m) throw DomainError("min_diag_log_sigma: grid index out of range");
      best = std::min(best, diag[i]);
    }
  } else {
    best = diag.minCoeff();
  }
  return best;
}

}  // namespace kite
