#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <string>
#include <vector>

#include "kite/kernels.hpp"

namespace kite {

/// Nonnegative weights summing to one; Diag(eta) parameterizes the learned
/// kernel over the fixed feature set.
struct SimplexWeights {
  Eigen::VectorXd eta;

  explicit SimplexWeights(Eigen::VectorXd e) : eta(std::move(e)) {
    if (eta.size() < 1 || eta.minCoeff() < 0.0 || std::abs(eta.sum() - 1.0) > 1e-12)
      throw InvalidInput("SimplexWeights: entries must be nonnegative and sum to 1");
  }

  static SimplexWeights uniform(int m) {
    return SimplexWeights(Eigen::VectorXd::Constant(m, 1.0 / m));
  }
};

inline double eta_entropy_term(const Eigen::VectorXd& eta) {
  double s = 0.0;
  for (int i = 0; i < eta.size(); ++i)
    if (eta[i] > 0.0) s += eta[i] * std::log(eta[i]);
  return s;
}

/// log~(a): log a above 1, a - 1 below; continuous with continuous slope.
inline double tilde_log(double a) {
  if (a <= 0.0) throw DomainError("tilde_log: argument must be positive");
  return a > 1.0 ? std::log(a) : a - 1.0;
}

/// Log-partition problem on the torus: potential given by Fourier
/// coefficients fhat(delta), delta in [-2r, 2r] (Hermitian-symmetric), base
/// q uniform, features psi_w weighted by eta (simplex) or by the raw khat
/// weights for the non-isotropic variant.
struct LogPartitionProblem {
  int r = 0;
  double sigma = 1.0;
  Eigen::VectorXcd fhat;   // index delta + 2r
  Eigen::VectorXd weights; // per-frequency feature weights, size 2r+1
  bool weights_normalized = true;

  static Eigen::VectorXd khat_weights(double sigma, int r) {
    Eigen::VectorXd w(2 * r + 1);
    for (int i = 0; i < w.size(); ++i)
      w[i] = torus_fourier_coefficient(sigma, 1, std::abs(i - r));
    return w;
  }

  static LogPartitionProblem isotropic(int r, double sigma, Eigen::VectorXcd fhat,
                                       const SimplexWeights& eta) {
    LogPartitionProblem p;
    p.r = r;
    p.sigma = sigma;
    p.fhat = std::move(fhat);
    if (eta.eta.size() != 2 * r + 1) throw ShapeError("LogPartitionProblem: eta size != 2r+1");
    p.weights = eta.eta;
    p.weights_normalized = true;
    p.validate();
    return p;
  }

  static LogPartitionProblem isotropic_khat(int r, double sigma, Eigen::VectorXcd fhat) {
    Eigen::VectorXd w = khat_weights(sigma, r);
    return isotropic(r, sigma, std::move(fhat), SimplexWeights(w / w.sum()));
  }

  /// Truncated unnormalized features with ||phi(x)||^2 = sum khat <= 1.
  static LogPartitionProblem nonisotropic(int r, double sigma, Eigen::VectorXcd fhat) {
    LogPartitionProblem p;
    p.r = r;
    p.sigma = sigma;
    p.fhat = std::move(fhat);
    p.weights = khat_weights(sigma, r);
    p.weights_normalized = false;
    p.validate();
    return p;
  }

  void validate() const {
    if (r < 0) throw InvalidInput("LogPartitionProblem: r >= 0");
    if (fhat.size() != 4 * r + 1) throw ShapeError("LogPartitionProblem: fhat size != 4r+1");
    for (int d = 1; d <= 2 * r; ++d)
      if (std::abs(fhat[2 * r + d] - std::conj(fhat[2 * r - d])) > 1e-10)
        throw InvalidInput("LogPartitionProblem: fhat must be Hermitian-symmetric");
    if (std::abs(fhat[2 * r].imag()) > 1e-12)
      throw InvalidInput("LogPartitionProblem: fhat(0) must be real");
    if (weights.size() != 2 * r + 1 || weights.minCoeff() < 0.0)
      throw InvalidInput("LogPartitionProblem: nonnegative weights required");
  }

  LogPartitionProblem with_weights(const Eigen::VectorXd& w, bool normalized) const {
    LogPartitionProblem p = *this;
    p.weights = w;
    p.weights_normalized = normalized;
    p.validate();
    return p;
  }

  /// f(x) = sum_delta fhat(delta) e^{2 i pi delta x} (real by symmetry)
  double potential(double x) const {
    Complex acc = 0.0;
    for (int i = 0; i < fhat.size(); ++i) {
      double d = static_cast<double>(i - 2 * r);
      acc += fhat[i] * Complex(std::cos(2.0 * M_PI * d * x), std::sin(2.0 * M_PI * d * x));
    }
    return acc.real();
  }

  /// Quadrature value of log int_0^1 e^{f(x)} dx (oracle for soundness checks).
  double log_partition_quadrature(int resolution = 8192) const {
    double m = 0.0;
    for (int g = 0; g < resolution; ++g)
      m = std::max(m, potential((g + 0.5) / resolution));
    double acc = 0.0;
    for (int g = 0; g < resolution; ++g)
      acc += std::exp(potential((g + 0.5) / resolution) - m);
    return m + std::log(acc / resolution);
  }
};

namespace detail {

// Affine constraint machinery over the weighted band sums
//   sum_{w - w' = delta} sqrt(eta_w eta_w') M_{w w'} = fhat(delta).
// Frequencies with weight below the floor are dropped from the feature set.
struct BandConstraints {
  std::vector<int> freq;   // kept frequencies, ascending
  Eigen::VectorXd sqrtw;   // sqrt weights of kept frequencies
  Eigen::VectorXcd target; // fhat(delta), index delta + 2r
  int two_r;
  Eigen::VectorXd gram;    // <A_delta, A_delta> = sum over band of eta_w eta_w'

  static constexpr double kEtaFloor = 1e-12;

  BandConstraints(const LogPartitionProblem& p, const Eigen::VectorXcd& target_in)
      : target(target_in), two_r(2 * p.r) {
    for (int i = 0; i < p.weights.size(); ++i)
      if (p.weights[i] >= kEtaFloor) {
        freq.push_back(i - p.r);
      }
    if (freq.empty()) throw IllConditioned("BandConstraints: all weights below floor");
    sqrtw.resize(freq.size());
    for (size_t i = 0; i < freq.size(); ++i) sqrtw[i] = std::sqrt(p.weights[freq[i] + p.r]);
    gram = Eigen::VectorXd::Zero(2 * two_r + 1);
    const int m = static_cast<int>(freq.size());
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < m; ++j) {
        int d = freq[i] - freq[j];
        gram[d + two_r] += sqrtw[i] * sqrtw[i] * sqrtw[j] * sqrtw[j];
      }
    for (int d = -two_r; d <= two_r; ++d)
      if (gram[d + two_r] <= 0.0 && std::abs(target[d + two_r]) > 0.0)
        throw IllConditioned("BandConstraints: infeasible constraint on an empty band");
  }

  int dim() const { return static_cast<int>(freq.size()); }

  Eigen::VectorXcd band_sums(const Eigen::MatrixXcd& m) const {
    Eigen::VectorXcd b = Eigen::VectorXcd::Zero(2 * two_r + 1);
    const int n = dim();
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) b[freq[i] - freq[j] + two_r] += sqrtw[i] * sqrtw[j] * m(i, j);
    return b;
  }

  /// Frobenius projection onto the affine constraint set: Z + sum lambda_d A_d
  /// where the band structure makes the multiplier system diagonal.
  Eigen::MatrixXcd project(const Eigen::MatrixXcd& z) const {
    Eigen::VectorXcd b = band_sums(z);
    Eigen::MatrixXcd m = z;
    const int n = dim();
    Eigen::VectorXcd lambda = Eigen::VectorXcd::Zero(2 * two_r + 1);
    for (int d = -two_r; d <= two_r; ++d)
      if (gram[d + two_r] > 0.0)
        lambda[d + two_r] = (target[d + two_r] - b[d + two_r]) / gram[d + two_r];
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) m(i, j) += lambda[freq[i] - freq[j] + two_r] * sqrtw[i] * sqrtw[j];
    return 0.5 * (m + m.adjoint().eval());
  }

  double residual(const Eigen::MatrixXcd& m) const {
    Eigen::VectorXcd b = band_sums(m);
    double res = 0.0;
    for (int d = 0; d < b.size(); ++d)
      if (gram[d] > 0.0) res = std::max(res, std::abs(b[d] - target[d]));
    return res;
  }
};

struct CoreSolveResult {
  Eigen::MatrixXcd m_star;
  double objective;  // log tr exp(M + Diag(logdiag))
  int iterations = 0;
  double grad_norm = 0.0;
  double residual = 0.0;
  std::vector<double> trace;
};

// Projected gradient descent with unit step on M -> log tr exp(M + D),
// halving backtracking against round-off. The extrapolation flag switches to
// Nesterov momentum with a monotone restart, so the trace stays
// non-increasing either way. One eigendecomposition with vectors per
// iteration; candidate checks use eigenvalues only.
inline CoreSolveResult minimize_log_trace_exp(const BandConstraints& bc,
                                              const Eigen::VectorXd& logdiag, int max_iter,
                                              double tol, bool extrapolation) {
  const int n = bc.dim();
  auto shifted = [&](const Eigen::MatrixXcd& m) {
    Eigen::MatrixXcd a = m;
    a.diagonal() += logdiag.cast<Complex>();
    return Eigen::MatrixXcd(0.5 * (a + a.adjoint().eval()));
  };
  auto lse = [](const Eigen::VectorXd& l, Eigen::VectorXd* softmax) {
    double lmax = l.maxCoeff();
    double s = 0.0;
    Eigen::VectorXd w(l.size());
    for (int i = 0; i < l.size(); ++i) {
      w[i] = std::exp(l[i] - lmax);
      s += w[i];
    }
    if (softmax) *softmax = w / s;
    return lmax + std::log(s);
  };
  auto eval_full = [&](const Eigen::MatrixXcd& m, Eigen::MatrixXcd& grad) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(shifted(m));
    Eigen::VectorXd w;
    double f = lse(es.eigenvalues(), &w);
    grad = es.eigenvectors() * w.asDiagonal() * es.eigenvectors().adjoint();
    if (!std::isfinite(f)) throw Diverged("logpartition solver: non-finite objective");
    return f;
  };
  auto eval_value = [&](const Eigen::MatrixXcd& m) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(shifted(m), Eigen::EigenvaluesOnly);
    double f = lse(es.eigenvalues(), nullptr);
    if (!std::isfinite(f)) throw Diverged("logpartition solver: non-finite objective");
    return f;
  };

  CoreSolveResult out;
  Eigen::MatrixXcd m = bc.project(Eigen::MatrixXcd::Zero(n, n));
  Eigen::MatrixXcd grad(n, n);
  double f = eval_full(m, grad);
  out.trace.push_back(f);

  const auto accept_tol = [&](double base) { return base + 1e-13 * (1.0 + std::abs(base)); };
  Eigen::MatrixXcd y = m;      // extrapolated point (FISTA)
  Eigen::MatrixXcd grad_y = grad;
  double t_momentum = 1.0;

  int it = 0;
  bool plateau = false;
  for (; it < max_iter && !plateau; ++it) {
    Eigen::MatrixXcd cand;
    double f_cand;
    if (extrapolation) {
      cand = bc.project(y - grad_y);
      f_cand = eval_value(cand);
      if (f_cand > accept_tol(f)) {
        // monotone restart: plain backtracked step from the current iterate
        t_momentum = 1.0;
        if ((y - m).norm() > 0.0) eval_full(m, grad);
        else grad = grad_y;
        double step = 1.0;
        bool accepted = false;
        for (int halving = 0; halving < 30; ++halving) {
          cand = bc.project(m - step * grad);
          f_cand = eval_value(cand);
          if (f_cand <= accept_tol(f)) {
            accepted = true;
            break;
          }
          step *= 0.5;
        }
        if (!accepted) {  // no descent direction left at round-off
          plateau = true;
          cand = m;
          f_cand = f;
        }
      }
      double displacement = (cand - m).norm();
      double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t_momentum * t_momentum));
      y = cand + ((t_momentum - 1.0) / t_next) * (cand - m);
      t_momentum = t_next;
      m = cand;
      f = f_cand;
      out.trace.push_back(f);
      if (displacement < tol) {
        ++it;
        break;
      }
      if (!plateau) eval_full(y, grad_y);
    } else {
      double step = 1.0;
      Eigen::MatrixXcd grad_cand(n, n);
      bool accepted = false;
      for (int halving = 0; halving < 30; ++halving) {
        cand = bc.project(m - step * grad);
        f_cand = eval_full(cand, grad_cand);
        if (f_cand <= accept_tol(f)) {
          accepted = true;
          break;
        }
        step *= 0.5;
      }
      if (!accepted) {
        out.trace.push_back(f);
        break;
      }
      double displacement = (cand - m).norm();
      m = cand;
      f = f_cand;
      grad = grad_cand;
      out.trace.push_back(f);
      if (displacement < tol) {
        ++it;
        break;
      }
    }
  }

  if (extrapolation) eval_full(m, grad);
  out.m_star = m;
  out.objective = f;
  out.iterations = it;
  out.grad_norm = (m - bc.project(m - grad)).norm();
  out.residual = bc.residual(m);
  return out;
}

}  // namespace detail

struct SolverReport {
  double bound = 0.0;
  int iterations = 0;
  double final_gradient_norm = 0.0;
  double constraint_residual = 0.0;
  std::vector<double> objective_trace;
  Eigen::MatrixXcd optimizer;       // M* over the kept frequencies
  std::vector<int> kept_frequencies;
  std::string eta_update_source;    // kernel-learning metadata
};

/// Constraint matrices A_delta with (A_delta)_{w w'} = sqrt(eta_w eta_w')
/// on the band w - w' = delta; the pairing <A_delta, M> = tr(A_delta^* M)
/// reads off the weighted band sum, and A_{-delta} = A_delta^*.
inline std::vector<Eigen::MatrixXcd> constraint_matrices(const LogPartitionProblem& problem) {
  detail::BandConstraints bc(problem, problem.fhat);
  const int n = bc.dim();
  std::vector<Eigen::MatrixXcd> mats;
  mats.reserve(2 * bc.two_r + 1);
  for (int d = -bc.two_r; d <= bc.two_r; ++d) {
    Eigen::MatrixXcd a = Eigen::MatrixXcd::Zero(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        if (bc.freq[i] - bc.freq[j] == d) a(i, j) = bc.sqrtw[i] * bc.sqrtw[j];
    mats.push_back(std::move(a));
  }
  return mats;
}

/// Frobenius-orthogonal projection of Z onto {M : <A_delta, M> = fhat(delta)}.
inline HermitianMatrix affine_project(const HermitianMatrix& z, const LogPartitionProblem& problem) {
  detail::BandConstraints bc(problem, problem.fhat);
  if (z.dim() != bc.dim()) throw ShapeError("affine_project: dimension mismatch with kept frequencies");
  return HermitianMatrix(bc.project(z.mat()));
}

/// Dual bound on log int e^f dq for the isotropic torus features:
/// minimizes log tr exp(M) over the weighted band constraints by projected
/// gradient with unit step; bound = log tr exp(M*) + sum eta log eta.
inline SolverReport solve_logpartition_torus(const LogPartitionProblem& problem, int max_iter = 4000,
                                             double tol = 1e-10, bool extrapolation = false) {
  if (!problem.weights_normalized)
    throw InvalidInput("solve_logpartition_torus: isotropic (simplex) weights required");
  // The constant mode shifts the optimum by exactly fhat(0); solving with a
  // zeroed constant mode and adding it back makes shift covariance exact.
  const double f0 = problem.fhat[2 * problem.r].real();
  Eigen::VectorXcd target = problem.fhat;
  target[2 * problem.r] = 0.0;
  detail::BandConstraints bc(problem, target);
  // Iterate on M~ with log Diag(eta) inside the exponential (the
  // well-conditioned form); M = M~ + log Diag(eta) - (sum eta log eta) I is
  // the equivalent point of the log tr exp(M) + sum eta log eta form, with
  // the same primal exp(M)/tr exp(M) and the same bound.
  Eigen::VectorXd logdiag(bc.dim());
  for (int i = 0; i < bc.dim(); ++i) logdiag[i] = 2.0 * std::log(bc.sqrtw[i]);
  detail::CoreSolveResult core =
      detail::minimize_log_trace_exp(bc, logdiag, max_iter, tol, extrapolation);

  const double eta_term = eta_entropy_term(problem.weights);
  SolverReport rep;
  rep.bound = core.objective + f0;
  rep.iterations = core.iterations;
  rep.final_gradient_norm = core.grad_norm;
  rep.objective_trace = core.trace;
  for (double& v : rep.objective_trace) v += f0;
  Eigen::VectorXd shift = logdiag.array() - eta_term + f0;
  rep.optimizer = core.m_star;
  rep.optimizer.diagonal() += shift.cast<Complex>();
  detail::BandConstraints bc_orig(problem, problem.fhat);
  rep.constraint_residual = bc_orig.residual(rep.optimizer);
  rep.kept_frequencies = bc.freq;
  return rep;
}

/// Primal recovery C = exp(M*)/tr exp(M*) from the isotropic dual solution.
inline Eigen::MatrixXcd primal_from_dual(const Eigen::MatrixXcd& m_star) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(m_star);
  const Eigen::VectorXd& l = es.eigenvalues();
  double lmax = l.maxCoeff();
  Eigen::VectorXd w(l.size());
  double s = 0.0;
  for (int i = 0; i < l.size(); ++i) {
    w[i] = std::exp(l[i] - lmax);
    s += w[i];
  }
  w /= s;
  return es.eigenvectors() * w.asDiagonal() * es.eigenvectors().adjoint();
}

/// Non-isotropic variant b^(c)(f) = inf_{M,c} c + 1 + log~((1/e) tr exp(M + log S_q))
/// for truncated features with ||phi(x)||^2 <= 1; inner projected gradient in
/// M, outer golden-section in c.
inline SolverReport solve_logpartition_nonisotropic(const LogPartitionProblem& problem,
                                                    int max_iter = 4000, double tol = 1e-10,
                                                    bool extrapolation = false) {
  Eigen::VectorXd logdiag(problem.weights.size());
  std::vector<int> kept;
  for (int i = 0; i < problem.weights.size(); ++i)
    if (problem.weights[i] >= detail::BandConstraints::kEtaFloor) kept.push_back(i);
  logdiag.resize(kept.size());
  for (size_t i = 0; i < kept.size(); ++i) logdiag[i] = std::log(problem.weights[kept[i]]);

  auto inner = [&](double c, detail::CoreSolveResult* core_out) {
    Eigen::VectorXcd target = problem.fhat;
    target[2 * problem.r] -= c;
    detail::BandConstraints bc(problem, target);
    detail::CoreSolveResult core =
        detail::minimize_log_trace_exp(bc, logdiag, max_iter, tol, extrapolation);
    if (core_out) *core_out = core;
    return c + 1.0 + tilde_log(std::exp(core.objective - 1.0));
  };

  // bracket c by the potential's range on a grid
  double fmin = std::numeric_limits<double>::infinity(), fmax = -fmin;
  for (int g = 0; g < 512; ++g) {
    double v = problem.potential((g + 0.5) / 512.0);
    fmin = std::min(fmin, v);
    fmax = std::max(fmax, v);
  }
  double lo = fmin - 3.0, hi = fmax + 3.0;
  const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
  double x1 = hi - gr * (hi - lo), x2 = lo + gr * (hi - lo);
  double f1 = inner(x1, nullptr), f2 = inner(x2, nullptr);
  for (int it = 0; it < 60 && hi - lo > 1e-8; ++it) {
    if (f1 <= f2) {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - gr * (hi - lo);
      f1 = inner(x1, nullptr);
    } else {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + gr * (hi - lo);
      f2 = inner(x2, nullptr);
    }
  }
  double c_star = 0.5 * (lo + hi);
  detail::CoreSolveResult core;
  double bound = inner(c_star, &core);

  SolverReport rep;
  rep.bound = bound;
  rep.iterations = core.iterations;
  rep.final_gradient_norm = core.grad_norm;
  rep.constraint_residual = core.residual;
  rep.objective_trace = core.trace;
  rep.optimizer = core.m_star;
  rep.kept_frequencies.clear();
  for (int i : kept) rep.kept_frequencies.push_back(i - problem.r);
  return rep;
}

/// b_eps(f) = eps * b(f/eps); approaches the maximum of f as eps decreases.
inline double temperature_bound(const LogPartitionProblem& problem, double epsilon,
                                int max_iter = 4000, double tol = 1e-10) {
  if (epsilon <= 0.0) throw DomainError("temperature_bound: epsilon must be positive");
  LogPartitionProblem scaled = problem;
  scaled.fhat /= epsilon;
  return epsilon * solve_logpartition_torus(scaled, max_iter, tol).bound;
}

/// MM objective for kernel learning:
/// J(eta) = tr[X log X] - sum eta log eta with X = C^{1/2} Diag(eta) C^{1/2}.
inline double mm_objective(const HermitianMatrix& c_p, const Eigen::VectorXd& eta) {
  SpectralDecomposition d = eigh(c_p);
  Eigen::VectorXd s = d.eigenvalues.cwiseMax(0.0).cwiseSqrt();
  Eigen::MatrixXcd csqrt = d.eigenvectors * s.asDiagonal() * d.eigenvectors.adjoint();
  Eigen::MatrixXcd x = csqrt * eta.cast<Complex>().asDiagonal() * csqrt;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(0.5 * (x + x.adjoint().eval()));
  return xlogx_sum(es.eigenvalues()) - eta_entropy_term(eta);
}

/// One majorization-minimization step for maximizing J: softmax of
/// diag[C^{1/2} log(C^{1/2} Diag(eta) C^{1/2}) C^{1/2}]. The objective never
/// decreases; a decrease beyond 1e-9 raises PropertyViolation.
inline SimplexWeights mm_update_eta(const HermitianMatrix& c_p, const SimplexWeights& eta) {
  const int m = c_p.dim();
  if (eta.eta.size() != m) throw ShapeError("mm_update_eta: eta size mismatch");
  SpectralDecomposition d = eigh(c_p);
  if (d.eigenvalues.minCoeff() < -1e-10 * std::max(1.0, d.eigenvalues.maxCoeff()))
    throw NotPSD("mm_update_eta: moment matrix not PSD");
  for (int i = 0; i < m; ++i)
    if (std::abs(c_p.mat()(i, i).real() - 1.0) > 1e-8)
      throw InvalidInput("mm_update_eta: moment matrix must have unit diagonal");

  Eigen::VectorXd s = d.eigenvalues.cwiseMax(0.0).cwiseSqrt();
  Eigen::MatrixXcd csqrt = d.eigenvectors * s.asDiagonal() * d.eigenvectors.adjoint();
  Eigen::MatrixXcd x = csqrt * eta.eta.cast<Complex>().asDiagonal() * csqrt;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(0.5 * (x + x.adjoint().eval()));
  const Eigen::VectorXd& xl = es.eigenvalues();
  const double floor = tau_floor(xl);
  Eigen::VectorXd logl(xl.size());
  for (int i = 0; i < xl.size(); ++i) logl[i] = xl[i] > floor ? std::log(xl[i]) : 0.0;
  Eigen::MatrixXcd mlog = es.eigenvectors() * logl.asDiagonal() * es.eigenvectors().adjoint();
  Eigen::VectorXd v = (csqrt * mlog * csqrt).diagonal().real();

  Eigen::VectorXd next(m);
  double vmax = v.maxCoeff();
  double z = 0.0;
  for (int i = 0; i < m; ++i) {
    next[i] = std::exp(v[i] - vmax);
    z += next[i];
  }
  next /= z;
  SimplexWeights out(next);
  if (mm_objective(c_p, out.eta) < mm_objective(c_p, eta.eta) - 1e-9)
    throw PropertyViolation("mm-monotonicity: MM objective decreased");
  return out;
}

/// D(Lambda^{1/2} C_p Lambda^{1/2} || Lambda^{1/2} C_q Lambda^{1/2}) for the
/// linear kernel parametrization Lambda = Diag(eta); concave and monotone in
/// eta.
inline double kernel_relative_entropy_linear(const HermitianMatrix& c_p, const HermitianMatrix& c_q,
                                             const Eigen::VectorXd& eta) {
  Eigen::VectorXd sw = eta.cwiseMax(0.0).cwiseSqrt();
  Eigen::MatrixXcd a = sw.asDiagonal() * c_p.mat() * sw.asDiagonal();
  Eigen::MatrixXcd b = sw.asDiagonal() * c_q.mat() * sw.asDiagonal();
  DensityOperator da(HermitianMatrix(0.5 * (a + a.adjoint().eval())), "", false);
  DensityOperator db(HermitianMatrix(0.5 * (b + b.adjoint().eval())), "", false);
  return relative_entropy(da, db);
}

/// Alternates the M-solve with the MM eta-update fed by the recovered primal
/// moment matrix; reports the best bound seen (non-increasing trace).
inline SolverReport solve_logpartition_with_kernel_learning(const LogPartitionProblem& problem,
                                                            int outer_iters, int max_iter = 4000,
                                                            double tol = 1e-10) {
  if (outer_iters < 1) throw InvalidInput("solve_logpartition_with_kernel_learning: outer_iters >= 1");
  LogPartitionProblem current = problem;
  SolverReport best;
  best.bound = std::numeric_limits<double>::infinity();
  std::vector<double> trace;

  for (int t = 0; t < outer_iters; ++t) {
    SolverReport rep = solve_logpartition_torus(current, max_iter, tol);
    if (rep.bound < best.bound) {
      best = rep;
    }
    trace.push_back(best.bound);
    if (t + 1 == outer_iters) break;

    // recover the primal moment matrix: de-weight exp(M*)/tr exp(M*) by the
    // eta^{1/2} factors and Toeplitz-average its bands
    Eigen::MatrixXcd c_prim = primal_from_dual(rep.optimizer);
    const std::vector<int>& freq = rep.kept_frequencies;
    const int n = static_cast<int>(freq.size());
    Eigen::VectorXd sw(n);
    for (int i = 0; i < n; ++i) sw[i] = std::sqrt(current.weights[freq[i] + current.r]);
    Eigen::VectorXcd band = Eigen::VectorXcd::Zero(2 * current.r + 1);
    Eigen::VectorXd count = Eigen::VectorXd::Zero(2 * current.r + 1);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        int dd = freq[i] - freq[j];
        if (std::abs(dd) > current.r) continue;
        band[dd + current.r] += c_prim(i, j) / (sw[i] * sw[j]);
        count[dd + current.r] += 1.0;
      }
    for (int dd = 0; dd < band.size(); ++dd)
      if (count[dd] > 0.0) band[dd] /= count[dd];
    band /= band[current.r].real();  // unit mass
    Eigen::MatrixXcd c_mom(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        int dd = freq[i] - freq[j];
        c_mom(i, j) = std::abs(dd) <= current.r ? band[dd + current.r] : Complex(0.0, 0.0);
      }
    HermitianMatrix c_m(0.5 * (c_mom + c_mom.adjoint().eval()));

    Eigen::VectorXd eta_full = Eigen::VectorXd::Zero(2 * current.r + 1);
    Eigen::VectorXd eta_kept(n);
    for (int i = 0; i < n; ++i) eta_kept[i] = current.weights[freq[i] + current.r];
    eta_kept /= eta_kept.sum();
    SimplexWeights updated = mm_update_eta(c_m, SimplexWeights(eta_kept));
    for (int i = 0; i < n; ++i) eta_full[freq[i] + current.r] = updated.eta[i];
    current = current.with_weights(eta_full, true);
  }

  best.objective_trace = trace;
  best.iterations = outer_iters;
  best.eta_update_source = "recovered_primal";
  return best;
}

// ---- Hypercube {-1,1}^d with features Diag(eta)^{1/2} (x; 1) ----

namespace detail {
inline void check_hypercube_moment(const Eigen::MatrixXd& c) {
  if (c.rows() != c.cols() || c.rows() < 2) throw ShapeError("hypercube: (d+1)x(d+1) matrix required");
  for (int i = 0; i < c.rows(); ++i)
    if (std::abs(c(i, i) - 1.0) > 1e-8) throw DomainError("hypercube: unit diagonal required");
  Eigen::VectorXd lam = eigh_real(c).eigenvalues;
  if (lam.minCoeff() < -1e-10 * std::max(1.0, lam.maxCoeff()))
    throw NotPSD("hypercube: moment matrix not PSD");
}
}  // namespace detail

/// Entropy upper bound d log 2 - tr[S log S] + sum eta log eta with
/// S = Diag(eta)^{1/2} C Diag(eta)^{1/2}; uniform eta reduces to
/// d log 2 - tr[C log C]/(d+1).
inline double hypercube_entropy_bound(const Eigen::MatrixXd& c, const SimplexWeights& eta) {
  detail::check_hypercube_moment(c);
  const int d = static_cast<int>(c.rows()) - 1;
  if (eta.eta.size() != d + 1) throw ShapeError("hypercube_entropy_bound: eta size != d+1");
  Eigen::VectorXd sw = eta.eta.cwiseSqrt();
  Eigen::MatrixXd s = sw.asDiagonal() * c * sw.asDiagonal();
  return d * std::log(2.0) - xlogx_sum(eigh_real(s).eigenvalues) + eta_entropy_term(eta.eta);
}

/// Log-determinant comparison bound:
/// (1/2) log det(C + (1/3)[I 0; 0 0]) + (d/2) log(pi e / 2).
inline double hypercube_logdet_bound(const Eigen::MatrixXd& c) {
  detail::check_hypercube_moment(c);
  const int d = static_cast<int>(c.rows()) - 1;
  Eigen::MatrixXd b = c;
  b.topLeftCorner(d, d).diagonal().array() += 1.0 / 3.0;
  Eigen::VectorXd lam = eigh_real(b).eigenvalues;
  if (lam.minCoeff() <= 0.0) throw IllConditioned("hypercube_logdet_bound: singular argument");
  double logdet = lam.array().log().sum();
  return 0.5 * logdet + 0.5 * d * std::log(0.5 * M_PI * M_E);
}

/// Runs the MM update on C to tighten the entropy bound over eta; returns
/// the optimized weights and bound (never above the uniform-eta bound).
inline std::pair<SimplexWeights, double> hypercube_eta_optimize(const Eigen::MatrixXd& c,
                                                                int iters) {
  detail::check_hypercube_moment(c);
  const int d = static_cast<int>(c.rows()) - 1;
  HermitianMatrix ch = HermitianMatrix::from_real(c);
  SimplexWeights eta = SimplexWeights::uniform(d + 1);
  for (int t = 0; t < iters; ++t) {
    SimplexWeights next = mm_update_eta(ch, eta);
    if ((next.eta - eta.eta).cwiseAbs().maxCoeff() < 1e-14) {
      eta = next;
      break;
    }
    eta = next;
  }
  return {eta, d * std::log(2.0) - mm_objective(ch, eta.eta)};
}

/// Exact moment matrix E[(x;1)(x;1)^T] of independent +-1 bits with means m.
inline Eigen::MatrixXd hypercube_independent_moment(const Eigen::VectorXd& means) {
  const int d = static_cast<int>(means.size());
  Eigen::VectorXd v(d + 1);
  v.head(d) = means;
  v[d] = 1.0;
  Eigen::MatrixXd c = v * v.transpose();
  for (int i = 0; i < d; ++i) c(i, i) = 1.0;
  return c;
}

/// Exact moment matrix by 2^d enumeration of a probability table over
/// {-1,1}^d (row-major over bits, bit j = +1 when the j-th binary digit of
/// the cell index is set).
inline Eigen::MatrixXd hypercube_moment_from_table(const Eigen::VectorXd& table, int d) {
  if (d < 1 || d > 12) throw ShapeError("hypercube_moment_from_table: d in [1,12]");
  if (table.size() != (1 << d) || table.minCoeff() < 0.0 || std::abs(table.sum() - 1.0) > 1e-10)
    throw InvalidInput("hypercube_moment_from_table: probability table over 2^d states");
  Eigen::MatrixXd c = Eigen::MatrixXd::Zero(d + 1, d + 1);
  Eigen::VectorXd v(d + 1);
  for (int s = 0; s < (1 << d); ++s) {
    for (int j = 0; j < d; ++j) v[j] = (s >> j) & 1 ? 1.0 : -1.0;
    v[d] = 1.0;
    c += table[s] * v * v.transpose();
  }
  return c;
}

}  // namespace kite
