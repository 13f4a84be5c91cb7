#include <catch2/catch_amalgamated.hpp>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <json.hpp>
#include <sstream>

using json = nlohmann::json;

namespace {

struct RunResult {
  int exit_code;
  std::string output_file;
};

std::string temp_path(const std::string& name) {
  return std::string("cli_test_") + name;
}

RunResult run_cli(const std::string& args, const std::string& out_name) {
  std::string out = temp_path(out_name);
  std::string cmd = std::string(KITE_BIN) + " " + args + " --output " + out + " 2> " +
                    temp_path("stderr.txt");
  int rc = std::system(cmd.c_str());
  return {WEXITSTATUS(rc), out};
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  out << content;
}

// minimal structural validation against the shipped schema: checks the
// required top-level fields and their declared types
void validate_against_schema(const json& doc) {
  std::ifstream in(std::string(KITE_SOURCE_DIR) + "/schemas/result_record.schema.json");
  REQUIRE(in.good());
  json schema = json::parse(in);
  for (const auto& field : schema.at("required")) {
    INFO("required field " << field.get<std::string>());
    REQUIRE(doc.contains(field.get<std::string>()));
  }
  for (auto& [key, spec] : schema.at("properties").items()) {
    if (!doc.contains(key)) continue;
    std::string type = spec.at("type").get<std::string>();
    const json& v = doc.at(key);
    if (type == "string") CHECK(v.is_string());
    if (type == "integer") CHECK(v.is_number_integer());
    if (type == "number") CHECK(v.is_number());
    if (type == "object") CHECK(v.is_object());
    if (type == "array") CHECK(v.is_array());
  }
}

}  // namespace

TEST_CASE("entropy-sample: output schema and byte determinism") {
  write_file(temp_path("es.json"),
             R"({"ns": [8, 16], "replications": 3, "sigma": 0.5, "resolution": 1024})");
  RunResult a = run_cli("entropy-sample --config " + temp_path("es.json") + " --seed 42", "es_a.json");
  REQUIRE(a.exit_code == 0);
  json doc = json::parse(slurp(a.output_file));
  validate_against_schema(doc);
  CHECK(doc.at("command") == "entropy-sample");
  CHECK(doc.at("seed") == 42);
  CHECK(doc.at("rows").size() == 6);
  CHECK(doc.at("outputs").contains("limit_neg_entropy"));
  CHECK_FALSE(doc.contains("wall_time_s"));  // only with --timing

  RunResult b = run_cli("entropy-sample --config " + temp_path("es.json") + " --seed 42", "es_b.json");
  REQUIRE(b.exit_code == 0);
  CHECK(slurp(a.output_file) == slurp(b.output_file));

  RunResult c = run_cli("entropy-sample --config " + temp_path("es.json") + " --seed 43", "es_c.json");
  REQUIRE(c.exit_code == 0);
  CHECK(slurp(a.output_file) != slurp(c.output_file));

  // uniform density: estimates concentrate near the base-measure entropy
  RunResult u = run_cli("entropy-sample --density uniform --sigma 0.5 --config " +
                            temp_path("es.json") + " --seed 7",
                        "es_u.json");
  REQUIRE(u.exit_code == 0);
  json udoc = json::parse(slurp(u.output_file));
  double limit = udoc.at("outputs").at("limit_neg_entropy").get<double>();
  for (const auto& row : udoc.at("rows"))
    CHECK(row.at("neg_entropy").get<double>() >= limit - 1e-9);
}

TEST_CASE("entropy-sample requires a seed") {
  write_file(temp_path("es2.json"), R"({"ns": [8], "replications": 2})");
  RunResult r = run_cli("entropy-sample --config " + temp_path("es2.json"), "es_noseed.json");
  CHECK(r.exit_code == 2);
}

TEST_CASE("entropy-projection: lower-bound flags recorded") {
  write_file(temp_path("ep.json"),
             R"({"ns": [4, 16], "replications": 3, "sigma": 0.5, "resolution": 1024})");
  RunResult r = run_cli("entropy-projection --config " + temp_path("ep.json") + " --seed 5",
                        "ep.json.out");
  REQUIRE(r.exit_code == 0);
  json doc = json::parse(slurp(r.output_file));
  validate_against_schema(doc);
  double limit_entropy = doc.at("outputs").at("limit_entropy").get<double>();
  for (const auto& row : doc.at("rows")) {
    CHECK(row.at("lower_bound").get<bool>());
    CHECK(row.at("entropy").get<double>() <= limit_entropy + 1e-6);
  }
}

TEST_CASE("logpartition: soundness columns and kernel learning") {
  write_file(temp_path("lp.json"),
             R"({"sigmas": [0.5], "rs": [3, 6], "solver": {"max_iter": 1500, "tol": 1e-9, "extrapolation": true, "outer_iters": 3}})");
  RunResult r = run_cli("logpartition --config " + temp_path("lp.json") + " --kernel-learning",
                        "lp.out");
  REQUIRE(r.exit_code == 0);
  json doc = json::parse(slurp(r.output_file));
  validate_against_schema(doc);
  double truth = doc.at("outputs").at("log_partition_quadrature").get<double>();
  CHECK(truth == Catch::Approx(0.2359141).margin(1e-4));
  for (const auto& row : doc.at("rows")) {
    CHECK(row.at("bound").get<double>() >= truth - 1e-6);
    CHECK(row.at("bound_learned").get<double>() <= row.at("bound").get<double>() + 1e-8);
    CHECK(row.at("constraint_residual").get<double>() <= 1e-9);
  }

  // f = 0 gives zero bounds
  write_file(temp_path("lp0.json"),
             R"({"sigmas": [0.5], "rs": [4], "fhat": [[0, 0.0, 0.0]], "solver": {"max_iter": 1500, "extrapolation": true}})");
  RunResult r0 = run_cli("logpartition --config " + temp_path("lp0.json"), "lp0.out");
  REQUIRE(r0.exit_code == 0);
  json doc0 = json::parse(slurp(r0.output_file));
  for (const auto& row : doc0.at("rows"))
    CHECK(std::abs(row.at("bound").get<double>()) <= 1e-8);
}

TEST_CASE("mi subcommand") {
  RunResult r = run_cli("mi", "mi_default.out");
  REQUIRE(r.exit_code == 0);
  json doc = json::parse(slurp(r.output_file));
  validate_against_schema(doc);
  CHECK(doc.at("outputs").at("kernel_mi").get<double>() == Catch::Approx(0.1927448).margin(1e-6));
  CHECK(doc.at("outputs").at("shannon_mi").get<double>() == Catch::Approx(0.1927448).margin(1e-6));

  // independent table: both vanish
  write_file(temp_path("mi_ind.json"),
             R"({"shape": [2, 2], "table": [0.18, 0.42, 0.12, 0.28]})");
  RunResult ri = run_cli("mi --table " + temp_path("mi_ind.json"), "mi_ind.out");
  REQUIRE(ri.exit_code == 0);
  json di = json::parse(slurp(ri.output_file));
  CHECK(std::abs(di.at("outputs").at("kernel_mi").get<double>()) <= 1e-9);
  CHECK(std::abs(di.at("outputs").at("shannon_mi").get<double>()) <= 1e-9);

  // non-orthonormal grams: kernel MI below Shannon MI
  write_file(temp_path("mi_gram.json"),
             R"({"shape": [2, 2], "table": [0.4, 0.1, 0.1, 0.4],
                 "grams": [[[1.0, 0.3], [0.3, 1.0]], [[1.0, 0.5], [0.5, 1.0]]]})");
  RunResult rg = run_cli("mi --table " + temp_path("mi_gram.json") + " --format csv", "mi_gram.csv");
  REQUIRE(rg.exit_code == 0);
  std::string csv = slurp(rg.output_file);
  CHECK(csv.rfind("kernel_mi,shannon_mi,gap\n", 0) == 0);
  double kmi = 0.0, smi = 0.0;
  std::sscanf(csv.c_str() + csv.find('\n') + 1, "%lf,%lf", &kmi, &smi);
  CHECK(kmi <= smi + 1e-9);
  CHECK(kmi >= 0.0);
}

TEST_CASE("sandwich subcommand") {
  write_file(temp_path("sw.json"), R"({"sigmas": [1.0, 0.5], "resolution": 1024})");
  RunResult r = run_cli("sandwich --config " + temp_path("sw.json"), "sw.out");
  REQUIRE(r.exit_code == 0);
  json doc = json::parse(slurp(r.output_file));
  validate_against_schema(doc);
  double prev_gap = std::numeric_limits<double>::infinity();
  for (const auto& row : doc.at("rows")) {
    CHECK(row.at("d_smoothed").get<double>() <= row.at("d_kernel").get<double>() + 1e-6);
    CHECK(row.at("d_kernel").get<double>() <= row.at("d_shannon").get<double>() + 1e-6);
    double gap = row.at("gap_shannon_kernel").get<double>();
    CHECK(gap <= prev_gap + 1e-12);
    prev_gap = gap;
  }
}

TEST_CASE("hypercube subcommand") {
  write_file(temp_path("hc.json"), R"({"dmax": 3, "draws": 8, "mm_iters": 40})");
  RunResult r = run_cli("hypercube --config " + temp_path("hc.json") + " --seed 9", "hc.out");
  REQUIRE(r.exit_code == 0);
  json doc = json::parse(slurp(r.output_file));
  validate_against_schema(doc);
  for (const auto& row : doc.at("rows")) {
    CHECK(row.at("excess_uniform").get<double>() >= -1e-8);
    CHECK(row.at("excess_optimized").get<double>() >= -1e-8);
    CHECK(row.at("excess_logdet").get<double>() >= -1e-8);
    if (row.at("d").get<int>() == 1)
      CHECK(std::abs(row.at("excess_uniform").get<double>()) <= 1e-8);
    CHECK(row.at("bound_optimized").get<double>() <= row.at("bound_uniform").get<double>() + 1e-9);
  }
  // deterministic under the seed
  RunResult r2 = run_cli("hypercube --config " + temp_path("hc.json") + " --seed 9", "hc2.out");
  CHECK(slurp(r.output_file) == slurp(r2.output_file));
}

TEST_CASE("check subcommand exits zero when the suites pass") {
  write_file(temp_path("ck.json"), R"({"trials": 10, "dims": [3, 4], "instances": 6})");
  RunResult r = run_cli("check --config " + temp_path("ck.json") + " --seed 3", "ck.out");
  CHECK(r.exit_code == 0);
  json doc = json::parse(slurp(r.output_file));
  for (const auto& row : doc.at("rows")) CHECK(row.at("violations").get<int>() == 0);
}

TEST_CASE("config parse errors carry diagnostics and a nonzero exit code") {
  write_file(temp_path("broken.json"), "{\"ns\": [8,,]}");
  RunResult r = run_cli("entropy-sample --config " + temp_path("broken.json") + " --seed 1",
                        "broken.out");
  CHECK(r.exit_code == 2);
  std::string err = slurp(temp_path("stderr.txt"));
  CHECK(err.find("parse error") != std::string::npos);

  write_file(temp_path("badfield.json"), R"({"ns": "eight"})");
  RunResult r2 = run_cli("entropy-sample --config " + temp_path("badfield.json") + " --seed 1",
                         "badfield.out");
  CHECK(r2.exit_code == 2);
  std::string err2 = slurp(temp_path("stderr.txt"));
  CHECK(err2.find("ns") != std::string::npos);
}

TEST_CASE("csv output uses full precision") {
  write_file(temp_path("lpcsv.json"),
             R"({"sigmas": [1.0], "rs": [3], "solver": {"max_iter": 800, "extrapolation": true}})");
  RunResult r = run_cli("logpartition --config " + temp_path("lpcsv.json") + " --format csv",
                        "lp.csv");
  REQUIRE(r.exit_code == 0);
  std::string csv = slurp(r.output_file);
  CHECK(csv.rfind("sigma,r,bound,", 0) == 0);
  // a full-precision double has more than 10 significant digits in the bound column
  std::istringstream lines(csv);
  std::string header, row;
  std::getline(lines, header);
  std::getline(lines, row);
  size_t second_comma = row.find(',', row.find(',') + 1);
  size_t third_comma = row.find(',', second_comma + 1);
  CHECK(third_comma - second_comma > 12);
}
