#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "kite/multivariate.hpp"
#include "kite/rng.hpp"
#include "kite/varinf.hpp"

namespace kite {

struct PropertyResult {
  std::string name;
  int trials = 0;
  int violations = 0;
  double worst = 0.0;  // largest observed violation beyond the slack (0 when none)

  void count(bool violated, double magnitude) {
    ++trials;
    if (violated) {
      ++violations;
      worst = std::max(worst, magnitude);
    }
  }
};

inline Eigen::MatrixXcd random_complex_gaussian(CounterRng& rng, int n) {
  Eigen::MatrixXcd g(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) g(i, j) = rng.complex_normal();
  return g;
}

/// Strictly positive unit-trace density operator (Wishart-style).
inline DensityOperator random_density_operator(CounterRng& rng, int n, double ridge = 1e-3) {
  Eigen::MatrixXcd g = random_complex_gaussian(rng, n);
  Eigen::MatrixXcd a = g * g.adjoint() + ridge * Eigen::MatrixXcd::Identity(n, n);
  a /= a.trace().real();
  return DensityOperator(HermitianMatrix(0.5 * (a + a.adjoint().eval())));
}

inline Eigen::MatrixXcd random_unitary(CounterRng& rng, int n) {
  Eigen::HouseholderQR<Eigen::MatrixXcd> qr(random_complex_gaussian(rng, n));
  Eigen::MatrixXcd q = qr.householderQ();
  return q;
}

inline Eigen::VectorXd random_simplex(CounterRng& rng, int n, double floor = 1e-3) {
  Eigen::VectorXd v(n);
  for (int i = 0; i < n; ++i) v[i] = floor + rng.uniform();
  return v / v.sum();
}

/// Random PSD Toeplitz moment matrix with unit diagonal (moments of a random
/// strictly positive trigonometric density, computed by quadrature).
inline HermitianMatrix random_toeplitz_moment(CounterRng& rng, int m) {
  const int modes = 4;
  Eigen::VectorXd amp(modes), phase(modes);
  for (int k = 0; k < modes; ++k) {
    amp[k] = rng.uniform(0.0, 0.8 / modes);
    phase[k] = rng.uniform(0.0, 2.0 * M_PI);
  }
  const int grid = 1024;
  Eigen::VectorXd p(grid);
  for (int g = 0; g < grid; ++g) {
    double x = (g + 0.5) / grid;
    double v = 1.0;
    for (int k = 0; k < modes; ++k) v += amp[k] * std::cos(2.0 * M_PI * (k + 1) * x + phase[k]);
    p[g] = std::max(v, 1e-3);
  }
  p /= p.mean();
  Eigen::VectorXcd phat(m);
  for (int d = 0; d < m; ++d) {
    Complex acc = 0.0;
    for (int g = 0; g < grid; ++g) {
      double th = -2.0 * M_PI * d * (g + 0.5) / grid;
      acc += p[g] * Complex(std::cos(th), std::sin(th));
    }
    phat[d] = acc / static_cast<double>(grid);
  }
  Eigen::MatrixXcd c(m, m);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j) c(i, j) = j >= i ? phat[j - i] : std::conj(phat[i - j]);
  return HermitianMatrix(0.5 * (c + c.adjoint().eval()));
}

inline std::vector<PropertyResult> run_quantum_properties(std::uint64_t seed, int trials,
                                                          const std::vector<int>& dims,
                                                          double slack = 1e-8) {
  PropertyResult nonneg{"quantum/nonnegativity"};
  PropertyResult pinsker{"quantum/pinsker-nuclear-hs"};
  PropertyResult convex{"quantum/joint-convexity"};
  PropertyResult pinch{"quantum/pinching-monotonicity"};
  PropertyResult povm{"quantum/povm-classical-reduction"};
  PropertyResult unitary{"quantum/unitary-invariance"};
  PropertyResult fdiv{"quantum/f-divergence-kl-consistency"};

  int stream = 0;
  for (int dim : dims) {
    for (int t = 0; t < trials; ++t) {
      CounterRng rng(seed, ++stream);
      DensityOperator a = random_density_operator(rng, dim);
      DensityOperator b = random_density_operator(rng, dim);
      double d = relative_entropy(a, b);

      nonneg.count(d < -1e-10, -d);

      // Pinsker chain through the singular values of the difference
      Eigen::VectorXd lam = eigh(HermitianMatrix(a.matrix().mat() - b.matrix().mat())).eigenvalues;
      double nuc = lam.cwiseAbs().sum();
      double hs = lam.norm();
      double gap1 = 0.5 * nuc * nuc - slack - d;
      double gap2 = 0.5 * hs * hs - slack - d;
      pinsker.count(gap1 > 0.0 || gap2 > 0.0, std::max(gap1, gap2));

      // joint convexity at t in {0.25, 0.5, 0.75}
      DensityOperator a2 = random_density_operator(rng, dim);
      DensityOperator b2 = random_density_operator(rng, dim);
      double worst_cvx = 0.0;
      for (double w : {0.25, 0.5, 0.75}) {
        DensityOperator am(HermitianMatrix(w * a.matrix().mat() + (1 - w) * a2.matrix().mat()));
        DensityOperator bm(HermitianMatrix(w * b.matrix().mat() + (1 - w) * b2.matrix().mat()));
        double lhs = relative_entropy(am, bm);
        double rhs = w * d + (1 - w) * relative_entropy(a2, b2);
        worst_cvx = std::max(worst_cvx, lhs - rhs - slack);
      }
      convex.count(worst_cvx > 0.0, worst_cvx);

      // pinching with a random projection pair (Pi, I - Pi)
      {
        int k = 1 + static_cast<int>(rng.below(dim - 1));
        Eigen::MatrixXcd u = random_unitary(rng, dim);
        Eigen::MatrixXcd pi = u.leftCols(k) * u.leftCols(k).adjoint();
        Eigen::MatrixXcd rest = Eigen::MatrixXcd::Identity(dim, dim) - pi;
        auto pinch_op = [&](const DensityOperator& x) {
          Eigen::MatrixXcd y =
              pi * x.matrix().mat() * pi + rest * x.matrix().mat() * rest;
          return DensityOperator(HermitianMatrix(0.5 * (y + y.adjoint().eval())));
        };
        double dp = relative_entropy(pinch_op(a), pinch_op(b));
        pinch.count(dp > d + slack, dp - d - slack);
      }

      // POVM classical reduction, Eq. (4) style
      {
        int parts = 3;
        std::vector<Eigen::MatrixXcd> e(parts);
        Eigen::MatrixXcd s = Eigen::MatrixXcd::Zero(dim, dim);
        for (auto& m : e) {
          Eigen::MatrixXcd g = random_complex_gaussian(rng, dim);
          m = g * g.adjoint();
          s += m;
        }
        SpectralDecomposition sd = eigh(HermitianMatrix(0.5 * (s + s.adjoint().eval())));
        Eigen::MatrixXcd isq = sd.eigenvectors *
                               sd.eigenvalues.cwiseSqrt().cwiseInverse().asDiagonal() *
                               sd.eigenvectors.adjoint();
        double classical = 0.0;
        for (const auto& m : e) {
          Eigen::MatrixXcd povm_el = isq * m * isq;
          double mu = (povm_el * a.matrix().mat()).trace().real();
          double nu = (povm_el * b.matrix().mat()).trace().real();
          if (mu > 0.0) classical += mu * std::log(mu / nu);
        }
        povm.count(classical > d + slack, classical - d - slack);
      }

      // unitary invariance
      {
        Eigen::MatrixXcd u = random_unitary(rng, dim);
        DensityOperator ua(HermitianMatrix(u * a.matrix().mat() * u.adjoint()));
        DensityOperator ub(HermitianMatrix(u * b.matrix().mat() * u.adjoint()));
        double du = relative_entropy(ua, ub);
        unitary.count(std::abs(du - d) > 1e-9, std::abs(du - d));
      }

      // f-divergence with KL kind reproduces relative_entropy
      {
        double fk = f_divergence(a, b, DivergenceKind::KL);
        fdiv.count(std::abs(fk - d) > 1e-9, std::abs(fk - d));
      }
    }
  }
  return {nonneg, pinsker, convex, pinch, povm, unitary, fdiv};
}

inline JointDistribution random_joint(CounterRng& rng, const std::vector<int>& shape,
                                      bool orthonormal, double floor = 0.02) {
  long total = 1;
  for (int m : shape) total *= m;
  Eigen::VectorXd t(total);
  for (long i = 0; i < total; ++i) t[i] = floor + rng.uniform();
  t /= t.sum();
  if (orthonormal) return JointDistribution::orthonormal(shape, t);
  std::vector<FiniteGramKernel> ks;
  for (int m : shape) {
    // random PSD Gram with unit diagonal
    Eigen::MatrixXd g(m, m);
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < m; ++j) g(i, j) = rng.normal();
    Eigen::MatrixXd k = g * g.transpose() + 0.5 * Eigen::MatrixXd::Identity(m, m);
    Eigen::VectorXd d = k.diagonal().cwiseSqrt().cwiseInverse();
    k = d.asDiagonal() * k * d.asDiagonal();
    k = 0.5 * (k + k.transpose());
    k.diagonal().setOnes();
    ks.push_back(FiniteGramKernel{k, Eigen::VectorXd::Constant(m, 1.0 / m)});
  }
  return JointDistribution(shape, t, std::move(ks));
}

inline std::vector<PropertyResult> run_multivariate_properties(std::uint64_t seed, int instances,
                                                               double slack = 1e-8) {
  PropertyResult additivity{"multivariate/tensor-additivity"};
  PropertyResult dataproc{"multivariate/data-processing"};
  PropertyResult submod{"multivariate/submodularity"};
  PropertyResult mi_nonneg{"multivariate/mi-nonnegative-and-below-shannon"};

  for (int t = 0; t < instances; ++t) {
    CounterRng rng(seed, 1000 + t);
    int m1 = 2 + static_cast<int>(rng.below(3));
    int m2 = 2 + static_cast<int>(rng.below(3));
    bool ortho = (t % 2 == 0);

    // tensor additivity on a product table
    {
      Eigen::VectorXd p1 = random_simplex(rng, m1, 0.02);
      Eigen::VectorXd p2 = random_simplex(rng, m2, 0.02);
      Eigen::VectorXd prod(m1 * m2);
      for (int i = 0; i < m1; ++i)
        for (int j = 0; j < m2; ++j) prod[i * m2 + j] = p1[i] * p2[j];
      JointDistribution joint = random_joint(rng, {m1, m2}, ortho);
      JointDistribution jp(joint.shape, prod, joint.kernels);
      double h12 = joint_kernel_entropy(jp);
      double h1 = marginal_kernel_entropy(jp, 0);
      double h2 = marginal_kernel_entropy(jp, 1);
      additivity.count(std::abs(h12 - h1 - h2) > 1e-9, std::abs(h12 - h1 - h2));
    }

    // data processing on a random pair with matching kernels
    {
      JointDistribution jp = random_joint(rng, {m1, m2}, ortho);
      JointDistribution jq(jp.shape, random_simplex(rng, m1 * m2, 0.02), jp.kernels);
      try {
        DataProcessingResult r = data_processing_check(jp, jq, slack);
        dataproc.count(false, 0.0);
        (void)r;
      } catch (const PropertyViolation&) {
        dataproc.count(true, 1.0);
      }
    }

    // submodularity on a random triple
    {
      JointDistribution j3 = random_joint(rng, {2, 2, 2}, ortho);
      try {
        double lhs = submodularity_check(j3, slack);
        submod.count(false, 0.0);
        (void)lhs;
      } catch (const PropertyViolation&) {
        submod.count(true, 1.0);
      }
    }

    // kernel MI between 0 and Shannon MI
    {
      JointDistribution jp = random_joint(rng, {m1, m2}, ortho);
      double mi = kernel_mutual_information(jp);
      double shannon = shannon_mutual_information(jp);
      bool bad = mi < -1e-10 || mi > shannon + slack;
      mi_nonneg.count(bad, std::max(-mi, mi - shannon));
    }
  }
  return {additivity, dataproc, submod, mi_nonneg};
}

inline std::vector<PropertyResult> run_varinf_properties(std::uint64_t seed, int instances,
                                                         double slack = 1e-8) {
  PropertyResult concave{"varinf/kernel-concavity"};
  PropertyResult monotone{"varinf/kernel-monotonicity"};
  PropertyResult mm{"varinf/mm-monotone"};

  for (int t = 0; t < instances; ++t) {
    CounterRng rng(seed, 5000 + t);
    const int m = 6;
    HermitianMatrix cp = random_toeplitz_moment(rng, m);
    HermitianMatrix cq = random_toeplitz_moment(rng, m);

    Eigen::VectorXd e1 = random_simplex(rng, m, 1e-2);
    Eigen::VectorXd e2 = random_simplex(rng, m, 1e-2);
    double d1 = kernel_relative_entropy_linear(cp, cq, e1);
    double d2 = kernel_relative_entropy_linear(cp, cq, e2);
    double dm = kernel_relative_entropy_linear(cp, cq, 0.5 * (e1 + e2));
    concave.count(dm < 0.5 * (d1 + d2) - slack, 0.5 * (d1 + d2) - dm);

    // entrywise domination: eta1 >= eta2 (eta2 not renormalized; monotone in
    // the PSD order of the diagonal parametrization)
    Eigen::VectorXd shrink = e1 * rng.uniform(0.3, 1.0);
    double dsmall = kernel_relative_entropy_linear(cp, cq, shrink);
    monotone.count(dsmall > d1 + slack, dsmall - d1);

    try {
      SimplexWeights eta = SimplexWeights::uniform(m);
      for (int k = 0; k < 5; ++k) eta = mm_update_eta(cp, eta);
      mm.count(false, 0.0);
    } catch (const PropertyViolation&) {
      mm.count(true, 1.0);
    }
  }
  return {concave, monotone, mm};
}

}  // namespace kite
