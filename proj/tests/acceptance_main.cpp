// Acceptance suite: runs each release criterion at its stated tolerance and
// prints one pass/fail line per criterion. Exit code is the failure count.

#include <chrono>
#include <cstdio>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "kite/kite.hpp"
#include "kite/properties.hpp"

using namespace kite;

namespace {

struct Criterion {
  bool pass = true;
  std::ostringstream detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << (detail.str().empty() ? "" : "; ") << what;
    }
  }
};

Eigen::VectorXcd cos_fhat(int r) {
  Eigen::VectorXcd fhat = Eigen::VectorXcd::Zero(4 * r + 1);
  fhat[2 * r + 1] = 0.5;
  fhat[2 * r - 1] = 0.5;
  return fhat;
}

double classical_entropy(const Eigen::VectorXd& p) {
  double h = 0.0;
  for (int i = 0; i < p.size(); ++i)
    if (p[i] > 0.0) h -= p[i] * std::log(p[i]);
  return h;
}

double classical_kl(const Eigen::VectorXd& p, const Eigen::VectorXd& q) {
  double d = 0.0;
  for (int i = 0; i < p.size(); ++i)
    if (p[i] > 0.0) d += p[i] * std::log(p[i] / q[i]);
  return d;
}

// ---- criterion 1: discrete reduction on orthonormal embeddings ----
void criterion_discrete_reduction(Criterion& c) {
  CounterRng rng(1001);
  double worst = 0.0;
  for (int t = 0; t < 100; ++t) {
    int m = 2 + static_cast<int>(rng.below(5));
    FiniteGramKernel k{Eigen::MatrixXd::Identity(m, m), Eigen::VectorXd::Constant(m, 1.0 / m)};
    Eigen::VectorXd p = random_simplex(rng, m, 1e-3);
    Eigen::VectorXd q = random_simplex(rng, m, 1e-3);
    DensityOperator base = finite_covariance(k, k.base_weights);
    double h = kernel_entropy(finite_covariance(k, p), base, min_diag_log_sigma(k));
    worst = std::max(worst, std::abs(h - classical_entropy(p)));
    double d = relative_entropy(finite_covariance(k, p), finite_covariance(k, q));
    worst = std::max(worst, std::abs(d - classical_kl(p, q)));

    int m1 = 2 + static_cast<int>(rng.below(3)), m2 = 2 + static_cast<int>(rng.below(3));
    JointDistribution joint =
        JointDistribution::orthonormal({m1, m2}, random_simplex(rng, m1 * m2, 1e-3));
    worst = std::max(worst,
                     std::abs(kernel_mutual_information(joint) - shannon_mutual_information(joint)));
  }
  c.require(worst <= 1e-10, "max |kernel - Shannon| = " + std::to_string(worst));
  c.detail << "max deviation " << worst;
}

// ---- criterion 2: Fourier entropy identity ----
void criterion_fourier_identity(Criterion& c) {
  for (double sigma : {0.1, 0.5, 1.0, 2.0}) {
    int r = static_cast<int>(std::ceil(60.0 / sigma));
    double series = 0.0;
    for (int w = -r; w <= r; ++w) {
      double kh = torus_fourier_coefficient(sigma, 1, std::abs(w));
      series += kh * std::log(kh);
    }
    double closed = torus_khat_log_khat_sum(sigma);
    c.require(std::abs(series - closed) <= 1e-10,
              "sigma=" + std::to_string(sigma) + " |series - closed| = " +
                  std::to_string(std::abs(series - closed)));
  }
}

// ---- criterion 3: sandwich inequality ----
void criterion_sandwich(Criterion& c) {
  const std::vector<double> sigmas{1.0, 0.3, 0.1};
  const int pairs = 20;

  // strictly positive random tabulated densities on a 257-point grid
  auto random_density = [](CounterRng& rng) {
    const int n = 257;
    Eigen::VectorXd grid(n), vals(n);
    for (int i = 0; i < n; ++i) grid[i] = static_cast<double>(i) / (n - 1);
    Eigen::VectorXd amp(4), phase(4);
    for (int k = 0; k < 4; ++k) {
      amp[k] = rng.uniform(0.0, 0.15);
      phase[k] = rng.uniform(0.0, 2.0 * M_PI);
    }
    for (int i = 0; i < n; ++i) {
      double v = 1.0;
      for (int k = 0; k < 4; ++k)
        v += amp[k] * std::cos(2.0 * M_PI * (k + 1) * grid[i] + phase[k]);
      vals[i] = std::max(v, 0.2);
    }
    return DensityOracle::tabulated(grid, vals);
  };

  std::vector<std::string> failures(pairs);
  parallel_for(pairs, [&](int t) {
    CounterRng rng(3001, t);
    DensityOracle p = random_density(rng);
    DensityOracle q = random_density(rng);
    for (double sigma : sigmas) {
      try {
        sandwich_check(p, q, sigma, IntegrationPlan::uniform(2048), 1e-6);
      } catch (const Error& e) {
        failures[t] = "pair " + std::to_string(t) + " sigma " + std::to_string(sigma) + ": " + e.what();
        return;
      }
    }
  });
  for (const std::string& f : failures) c.require(f.empty(), f);

  // monotone Shannon-kernel gap on the fixed mixture pair
  DensityOracle mix = DensityOracle::named("triangle_mix");
  DensityOracle unif = DensityOracle::uniform();
  double prev = std::numeric_limits<double>::infinity();
  for (double sigma : sigmas) {
    SandwichResult r = sandwich_check(mix, unif, sigma, IntegrationPlan::uniform(2048), 1e-6);
    double gap = r.d_shannon - r.d_kernel;
    c.require(gap <= prev + 1e-12, "gap not decreasing at sigma=" + std::to_string(sigma));
    c.detail << "gap(" << sigma << ")=" << gap << " ";
    prev = gap;
  }
}

// ---- criterion 4: Figure 1 reproduction (property form) ----
void criterion_figure1(Criterion& c) {
  const double sigma = 0.1;
  const int reps = 20;
  const std::vector<int> ns{32, 64, 128, 256, 512, 1024};
  DensityOracle tri = DensityOracle::named("triangle");
  DensityOracle base = DensityOracle::uniform();
  FourierFeatureMap map = FourierFeatureMap::truncated(sigma, 1, /*normalized=*/true);
  IntegrationPlan plan = IntegrationPlan::gauss_legendre(std::max(4096, 8 * map.r));
  DensityOperator sp = quadrature_covariance(tri, map, plan);
  double limit = -von_neumann_entropy(sp);

  // the kernel KL to the base measure respects the Shannon bound
  // D(p||tau) = log 2 - 1/2 for the triangle density
  {
    FourierFeatureMap dmap = FourierFeatureMap::truncated_for_divergence(sigma);
    double kernel_kl = relative_entropy(quadrature_covariance(tri, dmap, plan),
                                        base_covariance_spectrum(dmap));
    c.require(kernel_kl <= std::log(2.0) - 0.5 + 1e-6,
              "kernel KL above the differential-entropy target 0.1931");
  }

  KernelSpec kern = KernelSpec::torus_exp(sigma);
  const int total = static_cast<int>(ns.size()) * reps;
  std::vector<double> gram(total), proj(total);
  parallel_for(total, [&](int idx) {
    int ni = idx / reps, rep = idx % reps;
    CounterRng rng_g(4001, (static_cast<std::uint64_t>(ni) << 32) | rep);
    gram[idx] = empirical_entropy_gram(
        SampleSet::uniform(draw_samples(tri, ns[ni], rng_g)), kern);
    CounterRng rng_p(4002, (static_cast<std::uint64_t>(ni) << 32) | rep);
    proj[idx] = projection_estimator(tri, base,
                                     SampleSet::uniform(draw_samples(base, ns[ni], rng_p)), kern,
                                     plan, 1e-10 * ns[ni])
                    .negative_entropy_p;
  });

  double gram_err_1024 = 0.0, proj_err_1024 = 0.0;
  for (size_t ni = 0; ni < ns.size(); ++ni) {
    double gmean = 0.0, gsq = 0.0, pmean = 0.0;
    for (int rep = 0; rep < reps; ++rep) {
      double g = gram[ni * reps + rep], pr = proj[ni * reps + rep];
      gmean += g / reps;
      gsq += g * g / reps;
      pmean += pr / reps;
      // projection-path entropy estimates stay below the limit entropy
      c.require(pr >= limit - 1e-6, "projection estimate crossed below the limit at n=" +
                                        std::to_string(ns[ni]));
    }
    double gse = std::sqrt(std::max(0.0, gsq - gmean * gmean) / reps);
    // Jensen direction: negative-entropy means approach the limit from above
    c.require(gmean >= limit - 2.0 * gse,
              "sample-path mean below the limit at n=" + std::to_string(ns[ni]));
    if (ns[ni] == 1024) {
      gram_err_1024 = std::abs(gmean - limit);
      proj_err_1024 = std::abs(pmean - limit);
    }
  }
  c.require(proj_err_1024 < gram_err_1024, "projection |error| not smaller at n=1024");
  c.detail << "limit " << limit << ", |err|@1024 gram " << gram_err_1024 << " vs proj "
           << proj_err_1024;
}

// ---- criterion 5: quantum property suite ----
void criterion_quantum_suite(Criterion& c) {
  for (const PropertyResult& r : run_quantum_properties(5001, 200, {3, 5, 8})) {
    c.require(r.violations == 0,
              r.name + ": " + std::to_string(r.violations) + " violations (worst " +
                  std::to_string(r.worst) + ")");
  }
  c.detail << "200 trials per dim in {3,5,8}, 7 properties";
}

// ---- criterion 6: log-partition soundness, target, and shape ----
void criterion_logpartition(Criterion& c) {
  const std::vector<double> sigmas{1.0, 0.5, 0.2};
  const std::vector<int> rs{5, 10, 20, 35, 50};
  LogPartitionProblem probe = LogPartitionProblem::isotropic_khat(5, 1.0, cos_fhat(5));
  const double truth = probe.log_partition_quadrature(8192);  // log I0(1) ~ 0.235914

  const int total = static_cast<int>(sigmas.size() * rs.size());
  std::vector<double> bounds(total);
  std::vector<double> residuals(total);
  parallel_for(total, [&](int idx) {
    double sigma = sigmas[idx / rs.size()];
    int r = rs[idx % rs.size()];
    LogPartitionProblem prob = LogPartitionProblem::isotropic_khat(r, sigma, cos_fhat(r));
    SolverReport rep = solve_logpartition_torus(prob, 3000, 1e-9, /*extrapolation=*/true);
    bounds[idx] = rep.bound;
    residuals[idx] = rep.constraint_residual;
  });

  for (size_t si = 0; si < sigmas.size(); ++si) {
    double prev = std::numeric_limits<double>::infinity();
    for (size_t ri = 0; ri < rs.size(); ++ri) {
      double b = bounds[si * rs.size() + ri];
      c.require(b >= truth - 1e-6, "bound below the quadrature truth");
      c.require(b <= prev + 1e-6, "bounds not non-increasing in r at sigma=" +
                                      std::to_string(sigmas[si]));
      c.require(residuals[si * rs.size() + ri] <= 1e-9, "constraint residual above 1e-9");
      prev = b;
    }
  }
  double target = bounds[2 * rs.size() + (rs.size() - 1)];  // sigma=0.2, r=50
  c.require(std::abs(target - truth) <= 0.05, "sigma=0.2, r=50 bound not within 0.05 of truth");
  c.detail << "truth " << truth << ", bound(0.2,50) " << target;
}

// ---- criterion 7: kernel learning ----
void criterion_kernel_learning(Criterion& c) {
  // MM monotonicity on the triangle moment matrix, every iteration
  {
    int r = 50;
    Eigen::VectorXcd phat(2 * r + 1);
    for (int d = 0; d <= 2 * r; ++d)
      phat[d] = d == 0 ? 1.0 : (d % 2 ? 4.0 / (M_PI * M_PI * d * d) : 0.0);
    HermitianMatrix cp = toeplitz_from_moments(phat, r + 1);
    SimplexWeights eta = SimplexWeights::uniform(r + 1);
    double j = mm_objective(cp, eta.eta);
    for (int t = 0; t < 30; ++t) {
      eta = mm_update_eta(cp, eta);  // throws PropertyViolation on any decrease
      double jn = mm_objective(cp, eta.eta);
      c.require(jn >= j - 1e-9, "MM objective decreased");
      j = jn;
    }
  }

  const std::vector<int> rs{10, 25, 50};
  std::vector<double> uniform_bounds(rs.size()), learned_bounds(rs.size());
  std::vector<bool> monotone(rs.size(), true);
  parallel_for(static_cast<int>(rs.size()), [&](int i) {
    int r = rs[i];
    LogPartitionProblem prob = LogPartitionProblem::isotropic(
        r, 0.5, cos_fhat(r), SimplexWeights::uniform(2 * r + 1));
    uniform_bounds[i] = solve_logpartition_torus(prob, 2000, 1e-9, true).bound;
    SolverReport learned = solve_logpartition_with_kernel_learning(prob, 5, 2000, 1e-9);
    learned_bounds[i] = learned.bound;
    for (size_t t = 1; t < learned.objective_trace.size(); ++t)
      if (learned.objective_trace[t] > learned.objective_trace[t - 1] + 1e-8) monotone[i] = false;
  });
  for (size_t i = 0; i < rs.size(); ++i) {
    c.require(learned_bounds[i] <= uniform_bounds[i] + 1e-8,
              "learned bound above uniform at r=" + std::to_string(rs[i]));
    c.require(monotone[i], "best-so-far trace not non-increasing");
    c.detail << "r=" << rs[i] << ": " << uniform_bounds[i] << " -> " << learned_bounds[i] << " ";
  }
}

// ---- criterion 8: hypercube bounds ----
void criterion_hypercube(Criterion& c) {
  CounterRng rng(8001);
  // d = 1 tightness
  double worst1 = 0.0;
  for (int t = 0; t < 50; ++t) {
    double pj = rng.uniform(1e-3, 1.0 - 1e-3);
    Eigen::VectorXd mean(1);
    mean[0] = 2.0 * pj - 1.0;
    double truth = -(pj * std::log(pj) + (1 - pj) * std::log(1 - pj));
    double bound =
        hypercube_entropy_bound(hypercube_independent_moment(mean), SimplexWeights::uniform(2));
    worst1 = std::max(worst1, std::abs(bound - truth));
  }
  c.require(worst1 <= 1e-8, "d=1 bound not tight, worst " + std::to_string(worst1));

  // d <= 8: bounds dominate the enumerated entropy; optimized <= uniform
  for (int d = 1; d <= 8; ++d) {
    for (int t = 0; t < 50; ++t) {
      Eigen::VectorXd means(d);
      Eigen::VectorXd table = Eigen::VectorXd::Ones(1 << d);
      for (int j = 0; j < d; ++j) {
        double pj = rng.uniform(1e-3, 1.0 - 1e-3);
        means[j] = 2.0 * pj - 1.0;
        for (int s = 0; s < (1 << d); ++s) table[s] *= ((s >> j) & 1) ? pj : 1.0 - pj;
      }
      double truth = classical_entropy(table);
      Eigen::MatrixXd cmat = hypercube_independent_moment(means);
      double bu = hypercube_entropy_bound(cmat, SimplexWeights::uniform(d + 1));
      auto [eta, bo] = hypercube_eta_optimize(cmat, 40);
      double bl = hypercube_logdet_bound(cmat);
      c.require(bu >= truth - 1e-8, "uniform bound below enumerated entropy");
      c.require(bo >= truth - 1e-8, "optimized bound below enumerated entropy");
      c.require(bl >= truth - 1e-8, "log-det bound below enumerated entropy");
      c.require(bo <= bu + 1e-9, "optimized bound above uniform bound");
    }
  }
  c.detail << "d=1 worst |bound-truth| " << worst1;
}

// ---- criterion 9: multivariate suite + Markov equality ----
void criterion_multivariate(Criterion& c) {
  for (const PropertyResult& r : run_multivariate_properties(9001, 50)) {
    c.require(r.violations == 0,
              r.name + ": " + std::to_string(r.violations) + " violations");
  }

  CounterRng rng(9002);
  double worst = 0.0;
  for (int t = 0; t < 10; ++t) {
    Eigen::VectorXd init = random_simplex(rng, 2, 0.05);
    Eigen::MatrixXd t12(2, 2), t23(2, 2);
    for (int i = 0; i < 2; ++i) {
      double a = rng.uniform(0.05, 0.95), b = rng.uniform(0.05, 0.95);
      t12.row(i) << a, 1.0 - a;
      t23.row(i) << b, 1.0 - b;
    }
    Eigen::VectorXd markov(8);
    for (int a = 0; a < 2; ++a)
      for (int b = 0; b < 2; ++b)
        for (int cc = 0; cc < 2; ++cc)
          markov[(a * 2 + b) * 2 + cc] = init[a] * t12(a, b) * t23(b, cc);
    double lhs = submodularity_check(JointDistribution::orthonormal({2, 2, 2}, markov));
    worst = std::max(worst, std::abs(lhs));
  }
  c.require(worst <= 1e-8, "Markov equality violated, worst " + std::to_string(worst));
  c.detail << "Markov |lhs| worst " << worst;
}

// ---- criterion 10: degrees of freedom ----
void criterion_degrees_of_freedom(Criterion& c) {
  const std::vector<double> sigmas{0.1, 0.15, 0.2, 0.25, 0.3};
  const std::vector<double> nus{std::exp(-1.0), std::exp(-1.5), std::exp(-2.0), std::exp(-2.5),
                                std::exp(-3.0)};
  for (double sigma : sigmas) {
    FourierFeatureMap map = FourierFeatureMap::truncated(sigma);
    double prev = std::numeric_limits<double>::infinity();
    for (double nu : nus) {
      double lambda = nu * std::tanh(0.5 * sigma);
      double df = degrees_of_freedom(map, lambda);
      double bound = degrees_of_freedom_bound(sigma, 1, lambda);
      c.require(df <= bound, "df above the small-bandwidth bound at sigma=" +
                                 std::to_string(sigma) + " nu=" + std::to_string(nu));
      c.require(df >= prev, "df not increasing while lambda decreases");
      prev = df;
    }
    // monotone decreasing over a wide lambda sweep
    double last = std::numeric_limits<double>::infinity();
    for (double l : {1e-5, 1e-4, 1e-3, 1e-2, 1e-1, 1.0, 10.0}) {
      double df = degrees_of_freedom(map, l);
      c.require(df < last, "df not decreasing in lambda");
      last = df;
    }
  }
}

}  // namespace

int main() {
  struct Entry {
    int number;
    std::string name;
    std::function<void(Criterion&)> run;
  };
  std::vector<Entry> criteria{
      {1, "discrete reduction (K = I) matches Shannon quantities to 1e-10", criterion_discrete_reduction},
      {2, "Fourier identity sum khat log khat to 1e-10", criterion_fourier_identity},
      {3, "sandwich inequality chain with monotone sigma ladder", criterion_sandwich},
      {4, "Figure-1 estimation: Jensen direction, lower bound, error ordering", criterion_figure1},
      {5, "quantum property suite, 200 trials at dims {3,5,8}", criterion_quantum_suite},
      {6, "log-partition soundness, 0.05 target, non-increasing in r", criterion_logpartition},
      {7, "kernel learning: MM monotone, learned <= uniform at r in {10,25,50}", criterion_kernel_learning},
      {8, "hypercube: d=1 tight, bounds dominate enumerated entropy", criterion_hypercube},
      {9, "multivariate suite + Markov submodularity equality", criterion_multivariate},
      {10, "degrees of freedom: bound direction and monotonicity", criterion_degrees_of_freedom},
  };

  int failures = 0;
  for (Entry& e : criteria) {
    Criterion c;
    auto t0 = std::chrono::steady_clock::now();
    try {
      e.run(c);
    } catch (const std::exception& ex) {
      c.pass = false;
      c.detail << "exception: " << ex.what();
    }
    double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("[%s] criterion %2d: %s (%.1f s)%s%s\n", c.pass ? "PASS" : "FAIL", e.number,
                e.name.c_str(), secs, c.detail.str().empty() ? "" : " -- ",
                c.detail.str().c_str());
    std::fflush(stdout);
    if (!c.pass) ++failures;
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failures,
              criteria.size());
  return failures;
}
