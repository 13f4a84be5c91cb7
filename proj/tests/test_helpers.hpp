#pragma once

#include <Eigen/Dense>

#include "kite/properties.hpp"

namespace kite::testing {

inline HermitianMatrix random_hermitian(CounterRng& rng, int n, double scale = 1.0) {
  Eigen::MatrixXcd g = random_complex_gaussian(rng, n);
  return HermitianMatrix(scale * 0.5 * (g + g.adjoint().eval()));
}

inline DensityOperator diag_density(std::initializer_list<double> values) {
  Eigen::VectorXd v(static_cast<int>(values.size()));
  int i = 0;
  for (double x : values) v[i++] = x;
  return DensityOperator::diagonal(v);
}

}  // namespace kite::testing
