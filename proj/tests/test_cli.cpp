#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "potvine/cli.hpp"
#include "support/planted.hpp"

using namespace potvine;
namespace fs = std::filesystem;

namespace {

struct TempTree {
  fs::path root;
  TempTree() {
    root = fs::temp_directory_path() /
           ("potvine_cli_" + std::to_string(::getpid()) + "_" +
            std::to_string(next()++));
    fs::create_directories(root);
  }
  ~TempTree() { fs::remove_all(root); }
  static int& next() {
    static int c = 0;
    return c;
  }
  std::string file(const std::string& name) const { return (root / name).string(); }
};

void write_series_csv(const std::string& path, std::size_t n, std::uint64_t seed,
                      double cause_scale = 1.0) {
  const auto d = planted::make_cause_link_series(n, seed);
  std::ofstream out(path);
  out << "traffic,no2,pm10\n";
  for (std::size_t r = 0; r < n; ++r)
    out << format_double(d.data(r, 0) * cause_scale) << ','
        << format_double(d.data(r, 1)) << ',' << format_double(d.data(r, 2)) << '\n';
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// data rows in a csv (text columns allowed)
int data_rows(const std::string& path) {
  std::ifstream in(path);
  std::string line;
  int rows = -1;  // skip header
  while (std::getline(in, line))
    if (!line.empty()) ++rows;
  return rows;
}

int run(std::vector<std::string> args) { return cli::run_cli(std::move(args)); }

std::vector<std::string> fit_args(const std::string& input, const std::string& out) {
  return {"fit",          "--input",  input, "--out",
          out,            "--seed",   "42",  "--order-min",
          "1",            "--order-max", "2", "--replicates",
          "100",          "--candidate-quantiles", "0.85", "0.9",
          "0.95",         "--no-normalize"};
}

}  // namespace

TEST_CASE("cli validates configuration before touching data", "[cli]") {
  TempTree t;
  write_series_csv(t.file("data.csv"), 800, 1);
  // missing cause column: config error (2) even though the file parses
  CHECK(run({"causation", "--input", t.file("data.csv"), "--out", t.file("r"),
             "--seed", "1", "--cause", "nonexistent", "--horizon", "1"}) == 2);
  // nonexistent input: data error (3)
  CHECK(run({"diagnose", "--input", t.file("missing.csv"), "--out", t.file("r")}) == 3);
  // no seed on a stochastic command: config error
  CHECK(run({"fit", "--input", t.file("data.csv"), "--out", t.file("r")}) == 2);
  // empty lambda list
  CHECK(run({"optimize", "--input", t.file("data.csv"), "--out", t.file("r"), "--seed",
             "1", "--cause", "traffic", "--lambdas"}) == 2);
}

TEST_CASE("cli rejects malformed csv input with line numbers", "[cli]") {
  TempTree t;
  {
    std::ofstream out(t.file("bad.csv"));
    out << "a,b\n1.0,2.0\n3.0,oops\n";
  }
  CHECK(run({"diagnose", "--input", t.file("bad.csv"), "--out", t.file("r")}) == 3);
  {
    std::ofstream out(t.file("gap.csv"));
    out << "a,b\n1.0,2.0\n3.0\n";
  }
  CHECK(run({"diagnose", "--input", t.file("gap.csv"), "--out", t.file("r")}) == 3);
}

TEST_CASE("full pipeline is byte-identical across reruns", "[cli]") {
  TempTree t;
  write_series_csv(t.file("data.csv"), 1500, 7);

  auto pipeline = [&](const std::string& out) {
    REQUIRE(run(fit_args(t.file("data.csv"), out)) == 0);
    REQUIRE(run({"causation", "--input", t.file("data.csv"), "--out", out, "--seed",
                 "42", "--cause", "traffic", "--horizon", "1", "--n-synthetic",
                 "300", "--v-grid", "0.5:2.5:9"}) == 0);
    REQUIRE(run({"optimize", "--input", t.file("data.csv"), "--out", out, "--seed",
                 "42", "--cause", "traffic", "--horizon", "1", "--generations", "40",
                 "--lambdas", "0", "1", "--impact-quantile", "0.8"}) == 0);
  };
  pipeline(t.file("runA"));
  pipeline(t.file("runB"));

  std::size_t compared = 0;
  for (const auto& entry : fs::directory_iterator(t.file("runA"))) {
    const auto name = entry.path().filename().string();
    INFO("file " << name);
    CHECK(slurp(t.file("runA") + "/" + name) == slurp(t.file("runB") + "/" + name));
    ++compared;
  }
  CHECK(compared >= 8);

  // artifact hash: same seed/config implies the identical model.json
  CHECK(slurp(t.file("runA") + "/model.json") == slurp(t.file("runB") + "/model.json"));
}

TEST_CASE("causation and optimize read back the fitted artifact", "[cli]") {
  TempTree t;
  write_series_csv(t.file("data.csv"), 1500, 11);
  const std::string out = t.file("run");
  REQUIRE(run(fit_args(t.file("data.csv"), out)) == 0);

  // single-point grid gives single-row outputs
  REQUIRE(run({"causation", "--input", t.file("data.csv"), "--out", out, "--seed",
               "42", "--cause", "traffic", "--horizon", "1", "--n-synthetic", "200",
               "--impact-threshold", "1.6"}) == 0);
  CHECK(data_rows(out + "/causation_empirical.csv") == 1);

  // horizon above the fitted order is rejected up front
  CHECK(run({"causation", "--input", t.file("data.csv"), "--out", out, "--seed", "42",
             "--cause", "traffic", "--horizon", "9"}) == 2);

  // ablation produces the summary with one row per variable
  REQUIRE(run({"optimize", "--input", t.file("data.csv"), "--out", out, "--seed",
               "42", "--cause", "traffic", "--horizon", "1", "--generations", "30",
               "--lambdas", "0", "--ablation", "--impact-quantile", "0.8"}) == 0);
  CHECK(data_rows(out + "/ablation_summary.csv") == 3);

  // simulate from the artifact in both scales
  REQUIRE(run({"simulate", "--out", out, "--seed", "5", "--n", "40"}) == 0);
  const auto blocks = read_csv(out + "/simulated_blocks.csv");
  CHECK(blocks.values.rows() == 40);
  for (double v : blocks.values.data()) {
    CHECK(v > 0.0);
    CHECK(v < 1.0);
  }
  REQUIRE(run({"simulate", "--out", out, "--seed", "5", "--path", "60", "--scale",
               "data"}) == 0);
  const auto path = read_csv(out + "/simulated_path.csv");
  CHECK(path.values.rows() == 60);
}

TEST_CASE("cli surfaces an empty factual world as a data error", "[cli]") {
  TempTree t;
  write_series_csv(t.file("train.csv"), 1200, 3);
  const std::string out = t.file("run");
  REQUIRE(run(fit_args(t.file("train.csv"), out)) == 0);
  // the cause column of the evaluation data never reaches the fitted threshold
  write_series_csv(t.file("tiny.csv"), 1200, 3, 1e-4);
  CHECK(run({"causation", "--input", t.file("tiny.csv"), "--out", out, "--seed", "42",
             "--cause", "traffic", "--horizon", "1"}) == 3);
}

TEST_CASE("diagnose emits normalized summaries and analytic correlations", "[cli]") {
  TempTree t;
  // AR(1) column with phi = 0.6 plus an independent noise column
  rng::Stream s(6, "test.cli_ar");
  std::ofstream out(t.file("ar.csv"));
  out << "x,y\n";
  double prev = 0.0;
  for (int i = 0; i < 20000; ++i) {
    prev = 0.6 * prev + s.normal();
    out << format_double(3.0 + 2.0 * prev) << ',' << format_double(s.normal()) << '\n';
  }
  out.close();

  const std::string rundir = t.file("diag");
  REQUIRE(run({"diagnose", "--input", t.file("ar.csv"), "--out", rundir, "--cause",
               "x", "--max-lag", "6"}) == 0);

  // header: variable,n,mean,sd,min,max -- the variable column is text, parse
  // by hand
  std::ifstream sf(rundir + "/summary.csv");
  std::string line;
  std::getline(sf, line);
  int rows = 0;
  while (std::getline(sf, line)) {
    std::stringstream ss(line);
    std::string var, n, mean, sd;
    std::getline(ss, var, ',');
    std::getline(ss, n, ',');
    std::getline(ss, mean, ',');
    std::getline(ss, sd, ',');
    CHECK_THAT(std::stod(sd), Catch::Matchers::WithinAbs(1.0, 1e-9));
    ++rows;
  }
  CHECK(rows == 2);

  // acf of the AR(1) column matches the analytic decay
  std::ifstream cf(rundir + "/correlations.csv");
  std::getline(cf, line);
  bool checked = false;
  while (std::getline(cf, line)) {
    std::stringstream ss(line);
    std::string kind, i, j, lag, value;
    std::getline(ss, kind, ',');
    std::getline(ss, i, ',');
    std::getline(ss, j, ',');
    std::getline(ss, lag, ',');
    std::getline(ss, value, ',');
    if (kind == "acf" && i == "x" && lag == "2") {
      CHECK_THAT(std::stod(value), Catch::Matchers::WithinAbs(0.36, 0.03));
      checked = true;
    }
  }
  CHECK(checked);
}
