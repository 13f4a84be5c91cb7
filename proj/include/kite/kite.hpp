#pragma once

// kite: kernel information-theoretic entropies.
// Von Neumann entropies and relative entropies of RKHS covariance operators,
// estimators from samples and kernel-integral oracles, kernel mutual
// information on product spaces, and convex-duality bounds on log-partition
// functions with kernel learning.

#define KITE_VERSION "0.1.0"

#include "kite/errors.hpp"
#include "kite/estimation.hpp"
#include "kite/integration.hpp"
#include "kite/kernels.hpp"
#include "kite/linops.hpp"
#include "kite/multivariate.hpp"
#include "kite/quantum.hpp"
#include "kite/rng.hpp"
#include "kite/util.hpp"
#include "kite/varinf.hpp"
