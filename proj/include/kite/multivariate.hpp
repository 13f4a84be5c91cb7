#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <numeric>
#include <vector>

#include "kite/estimation.hpp"

namespace kite {

/// Joint probability table over a product of finite sets, with one (A1)
/// kernel per factor. The table is stored flat in row-major order (last
/// factor fastest).
struct JointDistribution {
  std::vector<int> shape;
  Eigen::VectorXd table;
  std::vector<FiniteGramKernel> kernels;

  JointDistribution(std::vector<int> shape_, Eigen::VectorXd table_,
                    std::vector<FiniteGramKernel> kernels_)
      : shape(std::move(shape_)), table(std::move(table_)), kernels(std::move(kernels_)) {
    if (shape.empty() || kernels.size() != shape.size())
      throw ShapeError("JointDistribution: one kernel per factor");
    long total = 1;
    for (size_t j = 0; j < shape.size(); ++j) {
      if (shape[j] < 1 || kernels[j].gram.rows() != shape[j])
        throw ShapeError("JointDistribution: kernel/factor size mismatch");
      total *= shape[j];
    }
    if (table.size() != total) throw ShapeError("JointDistribution: table size mismatch");
    if (table.minCoeff() < 0.0 || std::abs(table.sum() - 1.0) > 1e-12)
      throw InvalidInput("JointDistribution: table must be a probability table");
    if (total > 4096) throw ShapeError("JointDistribution: total dimension exceeds 4096");
  }

  static JointDistribution orthonormal(std::vector<int> shape_, Eigen::VectorXd table_) {
    std::vector<FiniteGramKernel> ks;
    for (int m : shape_)
      ks.push_back(FiniteGramKernel{Eigen::MatrixXd::Identity(m, m),
                                    Eigen::VectorXd::Constant(m, 1.0 / m)});
    return JointDistribution(std::move(shape_), std::move(table_), std::move(ks));
  }

  int factors() const { return static_cast<int>(shape.size()); }

  int total_dim() const {
    return std::accumulate(shape.begin(), shape.end(), 1, std::multiplies<int>());
  }

  Eigen::VectorXd marginal(int axis) const {
    Eigen::VectorXd m = Eigen::VectorXd::Zero(shape[axis]);
    const int total = total_dim();
    for (int flat = 0; flat < total; ++flat) m[index_of(flat, axis)] += table[flat];
    return m;
  }

  // Marginal joint over a contiguous prefix/suffix/subset of axes.
  JointDistribution marginal_joint(const std::vector<int>& axes) const {
    std::vector<int> sub_shape;
    std::vector<FiniteGramKernel> sub_kernels;
    for (int a : axes) {
      sub_shape.push_back(shape[a]);
      sub_kernels.push_back(kernels[a]);
    }
    long sub_total = 1;
    for (int m : sub_shape) sub_total *= m;
    Eigen::VectorXd sub = Eigen::VectorXd::Zero(sub_total);
    const int total = total_dim();
    for (int flat = 0; flat < total; ++flat) {
      long idx = 0;
      for (int a : axes) idx = idx * shape[a] + index_of(flat, a);
      sub[idx] += table[flat];
    }
    return JointDistribution(std::move(sub_shape), std::move(sub), std::move(sub_kernels));
  }

  int index_of(int flat, int axis) const {
    int stride = 1;
    for (int j = factors() - 1; j > axis; --j) stride *= shape[j];
    return (flat / stride) % shape[axis];
  }
};

/// Covariance operator of the joint table in the product embedding
/// (Kronecker products of the per-factor explicit features). Unit trace.
inline DensityOperator joint_covariance(const JointDistribution& joint) {
  const int total = joint.total_dim();
  std::vector<Eigen::MatrixXd> feats;
  for (const auto& k : joint.kernels) feats.push_back(finite_feature_matrix(k));

  Eigen::MatrixXd sigma = Eigen::MatrixXd::Zero(total, total);
  Eigen::VectorXd v(total);
  for (int flat = 0; flat < total; ++flat) {
    double p = joint.table[flat];
    if (p == 0.0) continue;
    v.setConstant(1.0);
    // v = kron of factor feature columns
    int block = total;
    for (int a = 0; a < joint.factors(); ++a) {
      const int m = joint.shape[a];
      block /= m;
      const Eigen::VectorXd col = feats[a].col(joint.index_of(flat, a));
      for (int i = 0; i < total; ++i) v[i] *= col[(i / block) % m];
    }
    sigma.noalias() += p * v * v.transpose();
  }
  return DensityOperator::from_real(0.5 * (sigma + sigma.transpose()), "product");
}

inline DensityOperator marginal_covariance(const JointDistribution& joint, int axis) {
  return finite_covariance(joint.kernels[axis], joint.marginal(axis));
}

/// Partial trace over all factors except the first `keep`.
inline HermitianMatrix partial_trace_keep_prefix(const HermitianMatrix& m, int dim_keep) {
  const int total = m.dim();
  if (total % dim_keep != 0) throw ShapeError("partial_trace: dimension mismatch");
  const int dim_rest = total / dim_keep;
  Eigen::MatrixXcd out = Eigen::MatrixXcd::Zero(dim_keep, dim_keep);
  for (int i = 0; i < dim_keep; ++i)
    for (int j = 0; j < dim_keep; ++j) {
      Complex acc = 0.0;
      for (int b = 0; b < dim_rest; ++b) acc += m.mat()(i * dim_rest + b, j * dim_rest + b);
      out(i, j) = acc;
    }
  return HermitianMatrix(std::move(out));
}

inline double shannon_entropy(const Eigen::VectorXd& p) {
  double h = 0.0;
  for (int i = 0; i < p.size(); ++i)
    if (p[i] > 0.0) h -= p[i] * std::log(p[i]);
  return h;
}

inline double shannon_mutual_information(const JointDistribution& joint) {
  if (joint.factors() != 2) throw ShapeError("shannon_mutual_information: two factors");
  Eigen::VectorXd p1 = joint.marginal(0), p2 = joint.marginal(1);
  double mi = 0.0;
  for (int a = 0; a < joint.shape[0]; ++a)
    for (int b = 0; b < joint.shape[1]; ++b) {
      double pab = joint.table[a * joint.shape[1] + b];
      if (pab > 0.0) mi += pab * std::log(pab / (p1[a] * p2[b]));
    }
  return mi;
}

/// Kernel mutual information D(Sigma_joint || Sigma_1 (x) ... (x) Sigma_k);
/// zero iff the joint covariance factorizes. Lower bound on the Shannon MI
/// for two factors.
inline double kernel_mutual_information(const JointDistribution& joint) {
  DensityOperator sj = joint_covariance(joint);
  HermitianMatrix prod = marginal_covariance(joint, 0).matrix();
  for (int a = 1; a < joint.factors(); ++a)
    prod = kron(prod, marginal_covariance(joint, a).matrix());
  return relative_entropy(sj, DensityOperator(prod, "product"));
}

/// Kernel entropy of the joint table with the uniform-product base measure;
/// the minimum diagonal value is exact (exhaustive over cells).
inline double joint_kernel_entropy(const JointDistribution& joint) {
  DensityOperator sp = joint_covariance(joint);
  // base covariance and min-diag constant are separable sums over factors
  HermitianMatrix base = finite_covariance(joint.kernels[0], joint.kernels[0].base_weights).matrix();
  double min_diag = min_diag_log_sigma(joint.kernels[0]);
  for (int a = 1; a < joint.factors(); ++a) {
    base = kron(base, finite_covariance(joint.kernels[a], joint.kernels[a].base_weights).matrix());
    min_diag += min_diag_log_sigma(joint.kernels[a]);
  }
  return kernel_entropy(sp, DensityOperator(base, "product"), min_diag);
}

inline double marginal_kernel_entropy(const JointDistribution& joint, int axis) {
  DensityOperator sp = marginal_covariance(joint, axis);
  DensityOperator base = finite_covariance(joint.kernels[axis], joint.kernels[axis].base_weights);
  return kernel_entropy(sp, base, min_diag_log_sigma(joint.kernels[axis]));
}

struct DataProcessingResult {
  double d_joint;
  double d_marginal;
};

/// D(Sigma_p12 || Sigma_q12) >= D(Sigma_p1 || Sigma_q1); the marginal
/// covariance is produced by partial trace and cross-checked against the
/// covariance of the marginal table.
inline DataProcessingResult data_processing_check(const JointDistribution& joint_p,
                                                  const JointDistribution& joint_q,
                                                  double slack = 1e-8) {
  if (joint_p.shape != joint_q.shape) throw ShapeError("data_processing_check: shape mismatch");
  DensityOperator sp = joint_covariance(joint_p);
  DensityOperator sq = joint_covariance(joint_q);
  double d_joint = relative_entropy(sp, sq);

  const int m1 = joint_p.shape[0];
  HermitianMatrix tp = partial_trace_keep_prefix(sp.matrix(), m1);
  HermitianMatrix tq = partial_trace_keep_prefix(sq.matrix(), m1);
  DensityOperator mp = marginal_covariance(joint_p, 0);
  DensityOperator mq = marginal_covariance(joint_q, 0);
  if ((tp.mat() - mp.matrix().mat()).norm() > 1e-10 * m1 ||
      (tq.mat() - mq.matrix().mat()).norm() > 1e-10 * m1)
    throw PropertyViolation("data-processing: partial trace disagrees with marginal covariance");

  double d_marg = relative_entropy(DensityOperator(tp, "marginal"), DensityOperator(tq, "marginal"));
  if (std::isfinite(d_joint) && d_joint < d_marg - slack)
    throw PropertyViolation("data-processing: D(joint) < D(marginal)");
  return {d_joint, d_marg};
}

/// Strong subadditivity combination H(123) - H(12) - H(23) + H(2) of kernel
/// entropies over a triple product; must be <= 0 (within slack).
inline double submodularity_check(const JointDistribution& joint, double slack = 1e-8) {
  if (joint.factors() != 3) throw ShapeError("submodularity_check: three factors");
  double h123 = joint_kernel_entropy(joint);
  double h12 = joint_kernel_entropy(joint.marginal_joint({0, 1}));
  double h23 = joint_kernel_entropy(joint.marginal_joint({1, 2}));
  double h2 = marginal_kernel_entropy(joint, 1);
  double lhs = h123 - h12 - h23 + h2;
  if (lhs > slack) throw PropertyViolation("submodularity: H(123)-H(12)-H(23)+H(2) > 0");
  return lhs;
}

/// Gram-path sample estimate of the kernel MI: Hadamard product of the
/// factor Grams plays the joint Gram, and MI = H1 + H2 - H12 on the weighted
/// empirical entropies.
inline double empirical_mutual_information_gram(const Eigen::MatrixXd& k1,
                                                const Eigen::MatrixXd& k2,
                                                const Eigen::VectorXd& weights) {
  if (k1.rows() != k2.rows() || k1.rows() != weights.size())
    throw ShapeError("empirical_mutual_information_gram: size mismatch");
  Eigen::VectorXd sw = weights.cwiseSqrt();
  auto neg_entropy = [&](const Eigen::MatrixXd& k) {
    Eigen::MatrixXd wkw = sw.asDiagonal() * k * sw.asDiagonal();
    return xlogx_sum(eigh_real(wkw).eigenvalues);
  };
  return neg_entropy(k1.cwiseProduct(k2)) - neg_entropy(k1) - neg_entropy(k2);
}

}  // namespace kite
