#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <complex>
#include <functional>
#include <limits>

#include "kite/errors.hpp"

namespace kite {

using Complex = std::complex<double>;

/// Dense Hermitian matrix. The constructor validates near-hermiticity and
/// symmetrizes via (A + A*)/2; real symmetric matrices are the special case
/// with zero imaginary parts.
class HermitianMatrix {
 public:
  explicit HermitianMatrix(Eigen::MatrixXcd m) {
    if (m.rows() != m.cols()) throw ShapeError("HermitianMatrix: matrix must be square");
    if (!m.allFinite()) throw InvalidInput("HermitianMatrix: non-finite entries");
    const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
    const double defect = (m - m.adjoint()).cwiseAbs().maxCoeff();
    if (defect > 1e-12 * scale * std::max<double>(1.0, static_cast<double>(m.rows())))
      throw InvalidInput("HermitianMatrix: hermiticity defect beyond tolerance");
    mat_ = 0.5 * (m + m.adjoint().eval());
  }

  static HermitianMatrix from_real(const Eigen::MatrixXd& m) {
    return HermitianMatrix(m.cast<Complex>());
  }

  static HermitianMatrix diagonal(const Eigen::VectorXd& d) {
    return HermitianMatrix(Eigen::MatrixXcd(d.cast<Complex>().asDiagonal()));
  }

  int dim() const { return static_cast<int>(mat_.rows()); }
  const Eigen::MatrixXcd& mat() const { return mat_; }
  double trace() const { return mat_.trace().real(); }

 private:
  Eigen::MatrixXcd mat_;
};

/// Eigenvalues ascending, eigenvector columns unitary.
struct SpectralDecomposition {
  Eigen::VectorXd eigenvalues;
  Eigen::MatrixXcd eigenvectors;
  bool real_vectors = false;
};

inline SpectralDecomposition eigh(const HermitianMatrix& a) {
  if (a.mat().imag().isZero(0.0)) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(a.mat().real());
    if (solver.info() != Eigen::Success) throw InvalidInput("eigh: eigensolver failed");
    return {solver.eigenvalues(), solver.eigenvectors().cast<Complex>(), true};
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(a.mat());
  if (solver.info() != Eigen::Success) throw InvalidInput("eigh: eigensolver failed");
  return {solver.eigenvalues(), solver.eigenvectors(), false};
}

// Fast path for real symmetric content (Gram matrices, hypercube moments).
struct RealSpectralDecomposition {
  Eigen::VectorXd eigenvalues;
  Eigen::MatrixXd eigenvectors;
};

inline RealSpectralDecomposition eigh_real(const Eigen::MatrixXd& a) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(0.5 * (a + a.transpose()));
  if (solver.info() != Eigen::Success) throw InvalidInput("eigh_real: eigensolver failed");
  return {solver.eigenvalues(), solver.eigenvectors()};
}

/// Flooring threshold below which eigenvalues are treated as an exact zero
/// in trace functionals (the 0 log 0 = 0 convention).
inline double tau_floor(const Eigen::VectorXd& eigenvalues) {
  double lmax = eigenvalues.size() ? eigenvalues.cwiseAbs().maxCoeff() : 0.0;
  return static_cast<double>(eigenvalues.size()) * std::numeric_limits<double>::epsilon() *
         std::max(lmax, 1.0);
}

/// Sum of lambda*log(lambda) over eigenvalues, with entries at or below the
/// floor contributing zero.
inline double xlogx_sum(const Eigen::VectorXd& eigenvalues) {
  const double floor = tau_floor(eigenvalues);
  double s = 0.0;
  for (int i = 0; i < eigenvalues.size(); ++i) {
    double l = eigenvalues[i];
    if (l > floor) s += l * std::log(l);
  }
  return s;
}

inline HermitianMatrix spectral_fn(const HermitianMatrix& a,
                                   const std::function<double(double)>& f) {
  SpectralDecomposition d = eigh(a);
  Eigen::VectorXd fl(d.eigenvalues.size());
  for (int i = 0; i < fl.size(); ++i) {
    double v = f(d.eigenvalues[i]);
    if (!std::isfinite(v)) throw DomainError("spectral_fn: f undefined at an eigenvalue");
    fl[i] = v;
  }
  Eigen::MatrixXcd m = d.eigenvectors * fl.asDiagonal() * d.eigenvectors.adjoint();
  return HermitianMatrix(0.5 * (m + m.adjoint().eval()));
}

struct SpectralLogResult {
  HermitianMatrix value;
  bool clipped;  // true when eigenvalues were clipped to the floor
};

/// Matrix logarithm with eigenvalue flooring: eigenvalues below tau_floor are
/// clipped to it and the clip is reported.
inline SpectralLogResult spectral_log(const HermitianMatrix& a) {
  SpectralDecomposition d = eigh(a);
  const double floor = tau_floor(d.eigenvalues);
  bool clipped = false;
  Eigen::VectorXd fl(d.eigenvalues.size());
  for (int i = 0; i < fl.size(); ++i) {
    double l = d.eigenvalues[i];
    if (l < floor) {
      l = floor;
      clipped = true;
    }
    fl[i] = std::log(l);
  }
  Eigen::MatrixXcd m = d.eigenvectors * fl.asDiagonal() * d.eigenvectors.adjoint();
  return {HermitianMatrix(0.5 * (m + m.adjoint().eval())), clipped};
}

/// log tr exp(A), evaluated with a max shift so large eigenvalues do not
/// overflow.
inline double log_trace_exp(const HermitianMatrix& a) {
  Eigen::VectorXd l = eigh(a).eigenvalues;
  double lmax = l.maxCoeff();
  double s = 0.0;
  for (int i = 0; i < l.size(); ++i) s += std::exp(l[i] - lmax);
  return lmax + std::log(s);
}

inline double log_sum_exp(const Eigen::VectorXd& v) {
  double m = v.maxCoeff();
  double s = 0.0;
  for (int i = 0; i < v.size(); ++i) s += std::exp(v[i] - m);
  return m + std::log(s);
}

/// Projection onto the PSD cone (negative eigenvalues clipped to zero);
/// used to sanitize operators assembled from noisy quadrature.
inline HermitianMatrix psd_clip(const HermitianMatrix& a, double* clipped_mass = nullptr) {
  SpectralDecomposition d = eigh(a);
  if (clipped_mass) *clipped_mass = -d.eigenvalues.cwiseMin(0.0).sum();
  if (d.eigenvalues.minCoeff() >= 0.0) {
    if (clipped_mass) *clipped_mass = 0.0;
    return a;
  }
  Eigen::VectorXd l = d.eigenvalues.cwiseMax(0.0);
  Eigen::MatrixXcd m = d.eigenvectors * l.asDiagonal() * d.eigenvectors.adjoint();
  return HermitianMatrix(0.5 * (m + m.adjoint().eval()));
}

inline HermitianMatrix kron(const HermitianMatrix& a, const HermitianMatrix& b) {
  const int na = a.dim(), nb = b.dim();
  Eigen::MatrixXcd out(na * nb, na * nb);
  for (int i = 0; i < na; ++i)
    for (int j = 0; j < na; ++j) out.block(i * nb, j * nb, nb, nb) = a.mat()(i, j) * b.mat();
  return HermitianMatrix(std::move(out));
}

}  // namespace kite
