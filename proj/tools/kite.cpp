// kite command-line front end: experiment reproduction and ad-hoc
// estimation with machine-readable JSON/CSV output.

#include <CLI11.hpp>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <mutex>
#include <sstream>

#include "kite/kite.hpp"
#include "kite/properties.hpp"

using json = nlohmann::ordered_json;
using namespace kite;

namespace {

constexpr double kProjectionLowerBoundSlack = 1e-6;

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

struct Record {
  json inputs = json::object();
  json outputs = json::object();
  std::vector<json> rows;
  std::vector<std::string> columns;  // CSV column order
};

struct CommonOpts {
  std::string config_path;
  std::string output_path;
  std::string format = "json";
  std::uint64_t seed = 0;
  bool seed_given = false;
  bool timing = false;
};

void add_common(CLI::App* cmd, CommonOpts& o) {
  cmd->add_option("--config", o.config_path, "JSON config file (flags win over config)");
  cmd->add_option("--output", o.output_path, "output file (stdout when omitted)");
  cmd->add_option("--format", o.format, "json|csv")->check(CLI::IsMember({"json", "csv"}));
  cmd->add_option("--seed", o.seed, "RNG seed (required for stochastic commands)")
      ->each([&o](const std::string&) { o.seed_given = true; });
  cmd->add_flag("--timing", o.timing, "include wall time in the record");
}

json load_config(const std::string& path) {
  if (path.empty()) return json::object();
  std::ifstream in(path);
  if (!in) throw InvalidInput("config: cannot open '" + path + "'");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw InvalidInput("config: parse error in '" + path + "': " + e.what());
  }
}

template <typename T>
T cfg_get(const json& cfg, const std::string& key, T fallback) {
  if (cfg.contains(key)) {
    try {
      return cfg.at(key).get<T>();
    } catch (const json::exception& e) {
      throw InvalidInput("config: field '" + key + "': " + e.what());
    }
  }
  return fallback;
}

void emit(const std::string& command, std::uint64_t seed, const Record& rec,
          const CommonOpts& opts, double wall_seconds) {
  std::ostringstream out;
  if (opts.format == "csv") {
    for (size_t c = 0; c < rec.columns.size(); ++c)
      out << (c ? "," : "") << rec.columns[c];
    out << "\n";
    for (const json& row : rec.rows) {
      for (size_t c = 0; c < rec.columns.size(); ++c) {
        if (c) out << ",";
        const json& v = row.at(rec.columns[c]);
        if (v.is_number_float())
          out << format_double(v.get<double>());
        else
          out << v.dump();
      }
      out << "\n";
    }
  } else {
    json doc;
    doc["command"] = command;
    doc["library_version"] = KITE_VERSION;
    doc["seed"] = seed;
    doc["inputs"] = rec.inputs;
    doc["outputs"] = rec.outputs;
    doc["rows"] = rec.rows;
    if (opts.timing) doc["wall_time_s"] = wall_seconds;
    out << doc.dump(2) << "\n";
  }
  if (opts.output_path.empty()) {
    std::cout << out.str();
  } else {
    std::ofstream f(opts.output_path, std::ios::binary);
    if (!f) throw InvalidInput("output: cannot open '" + opts.output_path + "'");
    f << out.str();
  }
}

DensityOracle parse_density(const json& spec) {
  if (spec.is_string()) return DensityOracle::named(spec.get<std::string>());
  if (spec.is_object() && spec.contains("csv")) {
    std::ifstream in(spec.at("csv").get<std::string>());
    if (!in) throw InvalidInput("density: cannot open CSV '" + spec.at("csv").get<std::string>() + "'");
    std::vector<double> xs, vs;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (line.empty()) continue;
      std::replace(line.begin(), line.end(), ',', ' ');
      std::istringstream ls(line);
      double x, v;
      if (!(ls >> x >> v)) {
        if (lineno == 1) continue;  // header
        throw InvalidInput("density CSV: line " + std::to_string(lineno) + ": expected two numbers");
      }
      xs.push_back(x);
      vs.push_back(v);
    }
    Eigen::VectorXd grid = Eigen::Map<Eigen::VectorXd>(xs.data(), xs.size());
    Eigen::VectorXd vals = Eigen::Map<Eigen::VectorXd>(vs.data(), vs.size());
    return DensityOracle::tabulated(grid, vals);
  }
  throw InvalidInput("density: expected a name or {\"csv\": path}");
}

IntegrationPlan parse_plan(const json& cfg, const std::string& default_scheme, int default_res) {
  std::string scheme = cfg_get<std::string>(cfg, "quadrature", default_scheme);
  int res = cfg_get<int>(cfg, "resolution", default_res);
  if (scheme == "uniform") return IntegrationPlan::uniform(res);
  if (scheme == "gauss_legendre") return IntegrationPlan::gauss_legendre(res);
  throw InvalidInput("quadrature: expected 'uniform' or 'gauss_legendre'");
}

void require_seed(const CommonOpts& opts, const json& cfg) {
  if (!opts.seed_given && !cfg.contains("seed"))
    throw InvalidInput("--seed is required for stochastic commands");
}

std::uint64_t effective_seed(const CommonOpts& opts, const json& cfg) {
  if (opts.seed_given) return opts.seed;
  return cfg_get<std::uint64_t>(cfg, "seed", 0);
}

struct SolverConfig {
  int max_iter = 3000;
  double tol = 1e-9;
  bool extrapolation = false;
  int outer_iters = 6;
};

SolverConfig parse_solver(const json& cfg) {
  SolverConfig s;
  if (cfg.contains("solver")) {
    const json& sv = cfg.at("solver");
    s.max_iter = cfg_get<int>(sv, "max_iter", s.max_iter);
    s.tol = cfg_get<double>(sv, "tol", s.tol);
    s.extrapolation = cfg_get<bool>(sv, "extrapolation", s.extrapolation);
    s.outer_iters = cfg_get<int>(sv, "outer_iters", s.outer_iters);
  }
  return s;
}

json solver_json(const SolverConfig& s) {
  return json{{"max_iter", s.max_iter},
              {"tol", s.tol},
              {"extrapolation", s.extrapolation},
              {"outer_iters", s.outer_iters}};
}

// ---- entropy-sample / entropy-projection ----

struct EntropyRunShared {
  DensityOracle density = DensityOracle::uniform();
  double sigma = 0.1;
  std::vector<int> ns;
  int replications = 20;
  IntegrationPlan plan;
  FourierFeatureMap map = FourierFeatureMap::truncated(0.1);
  double limit_neg = 0.0;
};

EntropyRunShared entropy_setup(const json& cfg, json& inputs) {
  EntropyRunShared run;
  json density_spec = cfg.contains("density") ? cfg.at("density") : json("triangle");
  run.density = parse_density(density_spec);
  run.sigma = cfg_get<double>(cfg, "sigma", 0.1);
  run.ns = cfg_get<std::vector<int>>(cfg, "ns", {32, 64, 128, 256, 512, 1024});
  run.replications = cfg_get<int>(cfg, "replications", 20);
  run.map = FourierFeatureMap::truncated(run.sigma, 1, /*normalized=*/true);
  run.plan = parse_plan(cfg, "gauss_legendre", std::max(4096, 8 * run.map.r));
  run.limit_neg = -von_neumann_entropy(quadrature_covariance(run.density, run.map, run.plan));

  inputs["density"] = density_spec;
  inputs["sigma"] = run.sigma;
  inputs["ns"] = run.ns;
  inputs["replications"] = run.replications;
  inputs["quadrature"] = run.plan.scheme == IntegrationPlan::Scheme::GaussLegendre
                             ? "gauss_legendre"
                             : "uniform";
  inputs["resolution"] = run.plan.resolution;
  inputs["fourier_truncation_r"] = run.map.r;
  return run;
}

void summarize_by_n(Record& rec, const EntropyRunShared& run,
                    const std::vector<std::vector<double>>& values) {
  json summary = json::array();
  for (size_t i = 0; i < run.ns.size(); ++i) {
    double mean = 0.0, meansq = 0.0;
    for (double v : values[i]) {
      mean += v / values[i].size();
      meansq += v * v / values[i].size();
    }
    double sd = std::sqrt(std::max(0.0, meansq - mean * mean));
    summary.push_back(json{{"n", run.ns[i]},
                           {"mean_neg_entropy", mean},
                           {"std_neg_entropy", sd},
                           {"abs_error", std::abs(mean - run.limit_neg)}});
  }
  rec.outputs["summary"] = summary;
  rec.outputs["limit_neg_entropy"] = run.limit_neg;
  rec.outputs["limit_entropy"] = -run.limit_neg;
}

int cmd_entropy_sample(const json& cfg, const CommonOpts& opts, double t0) {
  require_seed(opts, cfg);
  std::uint64_t seed = effective_seed(opts, cfg);
  Record rec;
  EntropyRunShared run = entropy_setup(cfg, rec.inputs);
  KernelSpec kern = KernelSpec::torus_exp(run.sigma);

  const int total = static_cast<int>(run.ns.size()) * run.replications;
  std::vector<double> flat(total);
  parallel_for(total, [&](int idx) {
    int ni = idx / run.replications, rep = idx % run.replications;
    CounterRng rng(seed, (static_cast<std::uint64_t>(ni) << 32) | rep);
    SampleSet s = SampleSet::uniform(draw_samples(run.density, run.ns[ni], rng));
    flat[idx] = empirical_entropy_gram(s, kern);
  });

  std::vector<std::vector<double>> by_n(run.ns.size());
  for (size_t i = 0; i < run.ns.size(); ++i)
    for (int rep = 0; rep < run.replications; ++rep) {
      double v = flat[i * run.replications + rep];
      by_n[i].push_back(v);
      rec.rows.push_back(json{{"n", run.ns[i]},
                              {"replication", rep},
                              {"neg_entropy", v},
                              {"entropy", -v},
                              {"limit_neg_entropy", run.limit_neg}});
    }
  summarize_by_n(rec, run, by_n);
  rec.columns = {"n", "replication", "neg_entropy", "entropy", "limit_neg_entropy"};
  emit("entropy-sample", seed, rec, opts,
       std::chrono::duration<double>(std::chrono::steady_clock::now().time_since_epoch()).count() - t0);
  return 0;
}

int cmd_entropy_projection(const json& cfg, const CommonOpts& opts, double t0) {
  require_seed(opts, cfg);
  std::uint64_t seed = effective_seed(opts, cfg);
  Record rec;
  EntropyRunShared run = entropy_setup(cfg, rec.inputs);
  double jitter_coeff = cfg_get<double>(cfg, "jitter_coefficient", 1e-10);
  rec.inputs["jitter_coefficient"] = jitter_coeff;
  rec.inputs["jitter_rule"] = "jitter = coefficient * n";
  KernelSpec kern = KernelSpec::torus_exp(run.sigma);
  DensityOracle base = DensityOracle::uniform();

  const int total = static_cast<int>(run.ns.size()) * run.replications;
  std::vector<double> flat(total);
  parallel_for(total, [&](int idx) {
    int ni = idx / run.replications, rep = idx % run.replications;
    CounterRng rng(seed, (static_cast<std::uint64_t>(ni) << 32) | rep);
    SampleSet lm = SampleSet::uniform(draw_samples(base, run.ns[ni], rng));
    flat[idx] = projection_estimator(run.density, base, lm, kern, run.plan,
                                     jitter_coeff * run.ns[ni])
                    .negative_entropy_p;
  });

  std::vector<std::vector<double>> by_n(run.ns.size());
  for (size_t i = 0; i < run.ns.size(); ++i)
    for (int rep = 0; rep < run.replications; ++rep) {
      double v = flat[i * run.replications + rep];
      by_n[i].push_back(v);
      bool lower_bound = (-v) <= (-run.limit_neg) + kProjectionLowerBoundSlack;
      rec.rows.push_back(json{{"n", run.ns[i]},
                              {"replication", rep},
                              {"neg_entropy", v},
                              {"entropy", -v},
                              {"limit_neg_entropy", run.limit_neg},
                              {"lower_bound", lower_bound}});
    }
  summarize_by_n(rec, run, by_n);
  rec.columns = {"n", "replication", "neg_entropy", "entropy", "limit_neg_entropy", "lower_bound"};
  emit("entropy-projection", seed, rec, opts,
       std::chrono::duration<double>(std::chrono::steady_clock::now().time_since_epoch()).count() - t0);
  return 0;
}

// ---- logpartition ----

Eigen::VectorXcd parse_fhat(const json& cfg, int r) {
  // entries [[delta, re, im], ...]; the mirror entry is filled by conjugation
  json entries = cfg.contains("fhat") ? cfg.at("fhat")
                                      : json::array({json::array({1, 0.5, 0.0})});
  Eigen::VectorXcd fhat = Eigen::VectorXcd::Zero(4 * r + 1);
  for (const json& e : entries) {
    if (!e.is_array() || e.size() != 3)
      throw InvalidInput("fhat: entries must be [delta, re, im] triples");
    int delta = e.at(0).get<int>();
    if (std::abs(delta) > 2 * r)
      throw InvalidInput("fhat: |delta| must be <= 2r (r too small for this potential)");
    Complex v(e.at(1).get<double>(), e.at(2).get<double>());
    fhat[2 * r + delta] = v;
    if (delta != 0) fhat[2 * r - delta] = std::conj(v);
  }
  return fhat;
}

SimplexWeights parse_eta(const json& cfg, int r, double sigma) {
  json eta = cfg.contains("eta") ? cfg.at("eta") : json("khat");
  if (eta.is_string()) {
    if (eta.get<std::string>() == "uniform") return SimplexWeights::uniform(2 * r + 1);
    if (eta.get<std::string>() == "khat") {
      Eigen::VectorXd w = LogPartitionProblem::khat_weights(sigma, r);
      return SimplexWeights(w / w.sum());
    }
    throw InvalidInput("eta: expected 'uniform', 'khat', or an array of weights");
  }
  std::vector<double> vals = eta.get<std::vector<double>>();
  if (static_cast<int>(vals.size()) != 2 * r + 1) throw InvalidInput("eta: need 2r+1 weights");
  return SimplexWeights(Eigen::Map<Eigen::VectorXd>(vals.data(), vals.size()));
}

int cmd_logpartition(const json& cfg, const CommonOpts& opts, double t0) {
  std::uint64_t seed = effective_seed(opts, cfg);
  Record rec;
  std::vector<double> sigmas = cfg_get<std::vector<double>>(cfg, "sigmas", {1.0, 0.5, 0.2});
  std::vector<int> rs = cfg_get<std::vector<int>>(cfg, "rs", {5, 10, 20, 35, 50});
  bool learning = cfg_get<bool>(cfg, "kernel_learning", false);
  SolverConfig solver = parse_solver(cfg);

  rec.inputs["sigmas"] = sigmas;
  rec.inputs["rs"] = rs;
  rec.inputs["fhat"] = cfg.contains("fhat") ? cfg.at("fhat")
                                            : json::array({json::array({1, 0.5, 0.0})});
  rec.inputs["eta"] = cfg.contains("eta") ? cfg.at("eta") : json("khat");
  rec.inputs["kernel_learning"] = learning;
  rec.inputs["solver"] = solver_json(solver);

  double truth = 0.0;
  {
    int r0 = rs.front();
    LogPartitionProblem probe = LogPartitionProblem::isotropic(
        r0, sigmas.front(), parse_fhat(cfg, r0), parse_eta(cfg, r0, sigmas.front()));
    truth = probe.log_partition_quadrature(8192);
  }
  rec.outputs["log_partition_quadrature"] = truth;

  for (double sigma : sigmas) {
    for (int r : rs) {
      LogPartitionProblem prob =
          LogPartitionProblem::isotropic(r, sigma, parse_fhat(cfg, r), parse_eta(cfg, r, sigma));
      SolverReport rep =
          solve_logpartition_torus(prob, solver.max_iter, solver.tol, solver.extrapolation);
      json row{{"sigma", sigma},
               {"r", r},
               {"bound", rep.bound},
               {"iterations", rep.iterations},
               {"constraint_residual", rep.constraint_residual},
               {"truth", truth}};
      if (learning) {
        SolverReport learned = solve_logpartition_with_kernel_learning(
            prob, solver.outer_iters, solver.max_iter, solver.tol);
        row["bound_learned"] = learned.bound;
      }
      rec.rows.push_back(std::move(row));
    }
  }
  rec.columns = {"sigma", "r", "bound", "iterations", "constraint_residual", "truth"};
  if (learning) rec.columns.push_back("bound_learned");
  emit("logpartition", seed, rec, opts,
       std::chrono::duration<double>(std::chrono::steady_clock::now().time_since_epoch()).count() - t0);
  return 0;
}

// ---- hypercube ----

int cmd_hypercube(const json& cfg, const CommonOpts& opts, double t0) {
  require_seed(opts, cfg);
  std::uint64_t seed = effective_seed(opts, cfg);
  Record rec;
  int dmax = cfg_get<int>(cfg, "dmax", 8);
  int draws = cfg_get<int>(cfg, "draws", 50);
  int mm_iters = cfg_get<int>(cfg, "mm_iters", 60);
  rec.inputs["dmax"] = dmax;
  rec.inputs["draws"] = draws;
  rec.inputs["mm_iters"] = mm_iters;

  json summary = json::array();
  for (int d = 1; d <= dmax; ++d) {
    double mean_u = 0.0, mean_o = 0.0, mean_l = 0.0;
    for (int draw = 0; draw < draws; ++draw) {
      CounterRng rng(seed, (static_cast<std::uint64_t>(d) << 32) | draw);
      Eigen::VectorXd means(d);
      double truth = 0.0;
      for (int j = 0; j < d; ++j) {
        double pj = rng.uniform();  // random component probability
        pj = std::min(std::max(pj, 1e-6), 1.0 - 1e-6);
        means[j] = 2.0 * pj - 1.0;
        truth -= pj * std::log(pj) + (1.0 - pj) * std::log(1.0 - pj);
      }
      Eigen::MatrixXd c = hypercube_independent_moment(means);
      double bu = hypercube_entropy_bound(c, SimplexWeights::uniform(d + 1));
      auto [eta, bo] = hypercube_eta_optimize(c, mm_iters);
      double bl = hypercube_logdet_bound(c);
      rec.rows.push_back(json{{"d", d},
                              {"draw", draw},
                              {"true_entropy", truth},
                              {"bound_uniform", bu},
                              {"bound_optimized", bo},
                              {"bound_logdet", bl},
                              {"excess_uniform", bu - truth},
                              {"excess_optimized", bo - truth},
                              {"excess_logdet", bl - truth}});
      mean_u += (bu - truth) / draws;
      mean_o += (bo - truth) / draws;
      mean_l += (bl - truth) / draws;
    }
    summary.push_back(json{{"d", d},
                           {"mean_excess_uniform", mean_u},
                           {"mean_excess_optimized", mean_o},
                           {"mean_excess_logdet", mean_l}});
  }
  rec.outputs["summary"] = summary;
  rec.columns = {"d",           "draw",          "true_entropy",   "bound_uniform",
                 "bound_optimized", "bound_logdet", "excess_uniform", "excess_optimized",
                 "excess_logdet"};
  emit("hypercube", seed, rec, opts,
       std::chrono::duration<double>(std::chrono::steady_clock::now().time_since_epoch()).count() - t0);
  return 0;
}

// ---- mi ----

int cmd_mi(const json& cfg, const CommonOpts& opts, double t0) {
  std::uint64_t seed = effective_seed(opts, cfg);
  Record rec;
  json table_spec;
  if (cfg.contains("table_file")) {
    std::ifstream in(cfg.at("table_file").get<std::string>());
    if (!in) throw InvalidInput("mi: cannot open table file");
    table_spec = json::parse(in);
  } else if (cfg.contains("joint")) {
    table_spec = cfg.at("joint");
  } else {
    table_spec = json{{"shape", {2, 2}}, {"table", {0.4, 0.1, 0.1, 0.4}}};
  }
  std::vector<int> shape = table_spec.at("shape").get<std::vector<int>>();
  std::vector<double> flat = table_spec.at("table").get<std::vector<double>>();
  Eigen::VectorXd table = Eigen::Map<Eigen::VectorXd>(flat.data(), flat.size());

  JointDistribution joint = [&]() {
    if (table_spec.contains("grams")) {
      std::vector<FiniteGramKernel> ks;
      const json& grams = table_spec.at("grams");
      if (grams.size() != shape.size()) throw ShapeError("mi: one gram per factor");
      for (size_t a = 0; a < shape.size(); ++a) {
        const json& g = grams[a];
        Eigen::MatrixXd k(shape[a], shape[a]);
        for (int i = 0; i < shape[a]; ++i)
          for (int j = 0; j < shape[a]; ++j) k(i, j) = g.at(i).at(j).get<double>();
        ks.push_back(FiniteGramKernel{k, Eigen::VectorXd::Constant(shape[a], 1.0 / shape[a])});
      }
      return JointDistribution(shape, table, std::move(ks));
    }
    return JointDistribution::orthonormal(shape, table);
  }();

  double kmi = kernel_mutual_information(joint);
  double smi = shannon_mutual_information(joint);
  rec.inputs["joint"] = table_spec;
  rec.outputs["kernel_mi"] = kmi;
  rec.outputs["shannon_mi"] = smi;
  rec.outputs["gap"] = smi - kmi;
  rec.rows.push_back(json{{"kernel_mi", kmi}, {"shannon_mi", smi}, {"gap", smi - kmi}});
  rec.columns = {"kernel_mi", "shannon_mi", "gap"};
  emit("mi", seed, rec, opts,
       std::chrono::duration<double>(std::chrono::steady_clock::now().time_since_epoch()).count() - t0);
  return 0;
}

// ---- sandwich ----

int cmd_sandwich(const json& cfg, const CommonOpts& opts, double t0) {
  std::uint64_t seed = effective_seed(opts, cfg);
  Record rec;
  json dp_spec = cfg.contains("density_p") ? cfg.at("density_p") : json("triangle_mix");
  json dq_spec = cfg.contains("density_q") ? cfg.at("density_q") : json("uniform");
  DensityOracle p = parse_density(dp_spec);
  DensityOracle q = parse_density(dq_spec);
  std::vector<double> sigmas = cfg_get<std::vector<double>>(cfg, "sigmas", {1.0, 0.3, 0.1});
  int resolution = cfg_get<int>(cfg, "resolution", 2048);
  rec.inputs["density_p"] = dp_spec;
  rec.inputs["density_q"] = dq_spec;
  rec.inputs["sigmas"] = sigmas;
  rec.inputs["resolution"] = resolution;

  for (double sigma : sigmas) {
    SandwichResult r = sandwich_check(p, q, sigma, IntegrationPlan::uniform(resolution));
    rec.rows.push_back(json{{"sigma", sigma},
                            {"d_smoothed", r.d_smoothed},
                            {"d_kernel", r.d_kernel},
                            {"d_shannon", r.d_shannon},
                            {"gap_shannon_kernel", r.d_shannon - r.d_kernel}});
  }
  rec.columns = {"sigma", "d_smoothed", "d_kernel", "d_shannon", "gap_shannon_kernel"};
  emit("sandwich", seed, rec, opts,
       std::chrono::duration<double>(std::chrono::steady_clock::now().time_since_epoch()).count() - t0);
  return 0;
}

// ---- check ----

int cmd_check(const json& cfg, const CommonOpts& opts, double t0) {
  require_seed(opts, cfg);
  std::uint64_t seed = effective_seed(opts, cfg);
  Record rec;
  int trials = cfg_get<int>(cfg, "trials", 50);
  std::vector<int> dims = cfg_get<std::vector<int>>(cfg, "dims", {3, 5, 8});
  int instances = cfg_get<int>(cfg, "instances", 25);
  rec.inputs["trials"] = trials;
  rec.inputs["dims"] = dims;
  rec.inputs["instances"] = instances;

  std::vector<PropertyResult> all;
  for (auto& r : run_quantum_properties(seed, trials, dims)) all.push_back(r);
  for (auto& r : run_multivariate_properties(seed, instances)) all.push_back(r);
  for (auto& r : run_varinf_properties(seed, instances)) all.push_back(r);

  int total_violations = 0;
  for (const PropertyResult& r : all) {
    rec.rows.push_back(json{{"property", r.name},
                            {"trials", r.trials},
                            {"violations", r.violations},
                            {"worst_violation", r.worst}});
    total_violations += r.violations;
    if (r.violations > 0)
      std::cerr << "property violated: " << r.name << " (" << r.violations << "/" << r.trials
                << ", worst " << r.worst << ")\n";
  }
  rec.outputs["total_violations"] = total_violations;
  rec.columns = {"property", "trials", "violations", "worst_violation"};
  emit("check", seed, rec, opts,
       std::chrono::duration<double>(std::chrono::steady_clock::now().time_since_epoch()).count() - t0);
  return total_violations == 0 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"kite: kernel information-theoretic entropies"};
  app.require_subcommand(1);

  CommonOpts opts;
  std::string name;
  json overrides = json::object();

  auto make_sub = [&](const char* cmd, const char* desc) {
    CLI::App* sub = app.add_subcommand(cmd, desc);
    add_common(sub, opts);
    sub->callback([&name, cmd]() { name = cmd; });
    return sub;
  };
  auto override_str = [&overrides](const char* key) {
    return [&overrides, key](const std::string& v) { overrides[key] = v; };
  };
  auto override_dbl = [&overrides](const char* key) {
    return [&overrides, key](const std::string& v) { overrides[key] = std::stod(v); };
  };

  CLI::App* es = make_sub("entropy-sample", "Gram-path entropy estimation from i.i.d. samples");
  es->add_option_function<std::string>("--density", override_str("density"), "density name");
  es->add_option_function<std::string>("--sigma", override_dbl("sigma"), "kernel bandwidth");

  CLI::App* ep = make_sub("entropy-projection", "projection-path entropy estimation");
  ep->add_option_function<std::string>("--density", override_str("density"), "density name");
  ep->add_option_function<std::string>("--sigma", override_dbl("sigma"), "kernel bandwidth");

  CLI::App* lp = make_sub("logpartition", "dual upper bounds on log-partition functions");
  lp->add_flag_callback("--kernel-learning",
                        [&overrides]() { overrides["kernel_learning"] = true; },
                        "add a learned-eta bound column");

  make_sub("hypercube", "entropy bounds for random product distributions on {-1,1}^d");

  CLI::App* mi = make_sub("mi", "kernel vs Shannon mutual information of a joint table");
  mi->add_option_function<std::string>("--table", override_str("table_file"), "joint table JSON file");

  CLI::App* sw = make_sub("sandwich", "smoothed/kernel/Shannon relative entropy chain");
  sw->add_option_function<std::string>("--density-p", override_str("density_p"), "density p");
  sw->add_option_function<std::string>("--density-q", override_str("density_q"), "density q");

  make_sub("check", "run the randomized property suites");

  CLI11_PARSE(app, argc, argv);

  double t0 =
      std::chrono::duration<double>(std::chrono::steady_clock::now().time_since_epoch()).count();
  try {
    json cfg = load_config(opts.config_path);
    for (auto& [key, value] : overrides.items()) cfg[key] = value;  // flags win
    if (opts.seed_given) cfg["seed"] = opts.seed;
    if (name == "entropy-sample") return cmd_entropy_sample(cfg, opts, t0);
    if (name == "entropy-projection") return cmd_entropy_projection(cfg, opts, t0);
    if (name == "logpartition") return cmd_logpartition(cfg, opts, t0);
    if (name == "hypercube") return cmd_hypercube(cfg, opts, t0);
    if (name == "mi") return cmd_mi(cfg, opts, t0);
    if (name == "sandwich") return cmd_sandwich(cfg, opts, t0);
    if (name == "check") return cmd_check(cfg, opts, t0);
  } catch (const InvalidInput& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
