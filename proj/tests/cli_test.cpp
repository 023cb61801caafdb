#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "maxrisk/cli.hpp"
#include "maxrisk/error.hpp"
#include "maxrisk/risk.hpp"
#include "maxrisk/simulate.hpp"

using namespace maxrisk;

namespace {

std::vector<std::vector<std::string>> parse_csv(const std::string& text) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream ls(line);
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.push_back("");
    rows.push_back(cells);
  }
  return rows;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

void spit(const std::string& path, const std::string& text) {
  std::ofstream(path, std::ios::binary) << text;
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(MAXRISK_CLI) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST_CASE("number formatting") {
  CHECK(format_number(0.1) == "0.1");
  CHECK(format_number(1.0 / 3.0) == "0.333333333333");
  CHECK(format_number(1e-20) == "1e-20");
  CHECK(format_number(-2.5) == "-2.5");
  CHECK(format_number(123456789012345.0) == "1.23456789012e+14");
}

TEST_CASE("config round trip") {
  const RunConfig d{};
  CHECK(parse_config(serialize_config(d)) == d);
  CHECK(parse_config("{}") == d);

  RunConfig c;
  c.depsurface.psi = {0.7};
  c.depsurface.h_max = 3.5;
  c.r2curves.shapes = {"square"};
  c.riskreport.regions = {RegionConfig{"square", 2.0, 3.0}, RegionConfig{}};
  c.riskreport.variogram.type = "power_m";
  c.riskreport.variogram.m = 0.3;
  c.simulate.model = "tube";
  c.simulate.seed = 18446744073709551615ull;
  c.simulate.gev = GevParams{1.0, 2.0, 0.0};
  c.simulate.dump = "x.bin";
  c.simulate.quad.rel_tol = 1e-9;
  const RunConfig back = parse_config(serialize_config(c));
  CHECK(back == c);
  CHECK(back.simulate.seed == 18446744073709551615ull);
}

TEST_CASE("config errors name the problem") {
  auto message = [](const std::string& text) {
    try {
      parse_config(text);
    } catch (const ConfigError& e) {
      return std::string(e.what());
    }
    return std::string("accepted");
  };
  CHECK(message(R"({"depsurface": {"bogus": 1}})").find("bogus") != std::string::npos);
  CHECK(message(R"({"simulate": {"region": {"radius": 1}}})").find("radius") != std::string::npos);
  CHECK(message("{\n\"depsurface\": {\"n_h\": 3,\n").find("line") != std::string::npos);
  CHECK(message(R"({"depsurface": {"n_h": "many"}})").find("n_h") != std::string::npos);
  CHECK(message(R"({"unknown_block": {}})").find("unknown_block") != std::string::npos);
  CHECK(message(R"({"simulate": {"model": "gaussian"}})") != "accepted");
  CHECK(message(R"({"simulate": {"cells_per_diameter": 10}})") != "accepted");
  CHECK_THROWS_AS(load_config("/nonexistent/run.json"), ConfigError);
}

TEST_CASE("dependence surface rows") {
  DepSurfaceConfig c;
  c.psi = {1.0};
  c.beta = {1, 2};
  c.n_h = 3;
  c.gamma_max = 4.0;
  std::ostringstream out;
  cmd_depsurface(c, out);
  const auto rows = parse_csv(out.str());
  REQUIRE(rows.size() == 7);
  CHECK(rows[0] == std::vector<std::string>{"psi", "h", "beta", "D"});
  CHECK(rows[1][3] == "1");
  CHECK(rows[3][1] == "2");
  const PowerSpec p = PowerSpec::gev(1, GevParams{});
  CHECK(rows[3][3] == format_number(dep_measure(p, Variogram::power(1.0, 1.0), {0, 0}, {2.0, 0})));
  // Threads do not change the table.
  std::ostringstream out2;
  cmd_depsurface(c, out2, 3);
  CHECK(out2.str() == out.str());
}

TEST_CASE("r2 curve rows") {
  R2CurvesConfig c;
  c.psi = {1.0};
  c.shapes = {"square"};
  c.n_lambda = 2;
  c.lambda_min = 1.0;
  c.lambda_max = 10.0;
  std::ostringstream out;
  cmd_r2curves(c, out);
  const auto rows = parse_csv(out.str());
  REQUIRE(rows.size() == 3);
  CHECK(rows[0] == std::vector<std::string>{"shape", "psi", "lambda", "R2"});
  RiskQuery q;
  q.region = Region::square(1.0);
  q.power = PowerSpec::gev(1, GevParams{});
  q.variogram = Variogram::power(1.0, 1.0);
  q.quad = c.quad.spec();
  CHECK(rows[2][3] == format_number(r2(q, 10.0)));
}

TEST_CASE("risk report rows") {
  RiskReportConfig c;
  c.lambdas = {10.0};
  c.alphas = {0.5, 0.95};
  std::ostringstream out;
  cmd_riskreport(c, out);
  const auto rows = parse_csv(out.str());
  REQUIRE(rows.size() == 3);
  CHECK(rows[0].size() == 10);
  CHECK(rows[1][9] == "1");
  CHECK(rows[2][9] == "0");
  CHECK(rows[1][7] == rows[1][4]);
  RiskQuery q;
  q.power = PowerSpec::gev(1, GevParams{});
  q.quad = c.quad.spec();
  q.alpha = 0.95;
  CHECK(rows[2][7] == format_number(var_asymptotic(q, 10.0).value));
  CHECK(rows[2][8] == format_number(es_asymptotic(q, 10.0).value));
}

TEST_CASE("simulation summary and dump") {
  SimulateConfig c;
  c.n_rep = 12;
  c.region = RegionConfig{"disk", 1.0, 2.0};
  c.variogram.psi = 2.0;
  c.alphas = {0.9};
  c.bootstrap = 20;
  const std::string dump = "cli_test_dump.bin";
  std::ostringstream out;
  cmd_simulate(c, out, dump);
  const auto rows = parse_csv(out.str());
  REQUIRE(rows.size() == 7);
  CHECK(rows[0] == std::vector<std::string>{"quantity", "alpha", "estimate", "std_error", "reference"});
  CHECK(rows[1][0] == "mean");
  CHECK(rows[1][4] == format_number(mean_power(PowerSpec::gev(1, GevParams{}))));
  CHECK(rows[3][0] == "value_at_risk");
  CHECK(rows[3][1] == "0.9");
  const auto samples = read_field_samples(dump);
  CHECK(samples.size() == 12);
  CHECK(std::holds_alternative<GevParams>(samples[0].margin));
  std::ostringstream out3;
  cmd_simulate(c, out3, "", 3);
  CHECK(out3.str() == out.str());
  std::remove(dump.c_str());
}

TEST_CASE("executable exit codes and outputs") {
  spit("cli_test_ok.json", R"({"depsurface": {"psi": [1], "beta": [1], "n_h": 2}})");
  spit("cli_test_bad.json", R"({"depsurface": {"bogus": 1}})");
  spit("cli_test_slow.json", R"({"r2curves": {"n_lambda": 2, "quad": {"max_subdivisions": 1}}})");
  CHECK(run_cli("depsurface --config cli_test_ok.json --out cli_test_out.csv") == 0);
  CHECK(slurp("cli_test_out.csv").rfind("psi,h,beta,D\n", 0) == 0);
  CHECK(run_cli("depsurface --config cli_test_bad.json") == 2);
  CHECK(run_cli("depsurface --config cli_test_missing.json") == 2);
  CHECK(run_cli("r2curves --config cli_test_slow.json") == 3);
  CHECK(run_cli("nosuchcommand") != 0);
  CHECK(run_cli("config --config cli_test_ok.json") == 0);
  for (const char* f : {"cli_test_ok.json", "cli_test_bad.json", "cli_test_slow.json", "cli_test_out.csv"}) {
    std::remove(f);
  }
}
