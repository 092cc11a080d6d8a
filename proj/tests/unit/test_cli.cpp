#include <cstdlib>
#include <fstream>
#include <sstream>

#include "bdie/cli.hpp"
#include "bdie/error.hpp"
#include "doctest.h"

using namespace bdie;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("bdie_cli_test_" + name);
  fs::remove_all(p);
  return p;
}

RunConfig config_in(const fs::path& dir) {
  RunConfig c;
  c.output_dir = dir.string();
  c.level = 1;
  return c;
}

json read_json(const fs::path& p) {
  std::ifstream in(p);
  return json::parse(in);
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

int run(const std::string& cmd, const RunConfig& c, std::string* log = nullptr) {
  std::ostringstream out;
  const int code = run_command(cmd, c, out);
  if (log) *log = out.str();
  return code;
}

}  // namespace

TEST_SUITE("cli_harness") {
  TEST_CASE("config echo round-trips and omits the worker count") {
    RunConfig c;
    c.workers = 3;
    c.case_name = "bump";
    c.mesh.partition = "x>=0.25";
    c.probes = {{0, 0, 2}};
    const json j = config_to_json(c);
    CHECK_FALSE(j.contains("workers"));
    CHECK_FALSE(j.contains("output_dir"));
    CHECK(j.at("schema_version") == kSchemaVersion);
    CHECK(config_to_json(config_from_json(j)) == j);
    CHECK(config_from_json({{"output_dir", "x"}}).output_dir == "x");
    CHECK(config_from_json(json::object()).level == RunConfig{}.level);
  }

  TEST_CASE("malformed configs are configuration errors") {
    for (const char* text : {R"({"levle": 2})", R"({"level": "two"})", R"({"jump": "full"})",
                             R"({"schema_version": 7})", R"({"mesh": {"radius": 3}})"}) {
      try {
        config_from_json(json::parse(text));
        FAIL("accepted " << text);
      } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::Config);
      }
    }
    RunConfig c;
    c.levels = {2, 1};
    CHECK(run("converge", c) == 2);
    c = RunConfig{};
    c.probes = {{0, 0, 0.5}};
    CHECK(run("solve", c) == 2);
    c = RunConfig{};
    c.coefficient = "cubic";
    CHECK(run("check-coeff", c) == 2);
    CHECK(run("plot", RunConfig{}) == 2);
  }

  TEST_CASE("invalid partition rule") {
    RunConfig c = config_in(scratch("partition"));
    c.mesh.partition = "w<0";
    std::string log;
    CHECK(run("mesh", c, &log) == 2);
    CHECK(log.find("w<0") != std::string::npos);
  }

  TEST_CASE("mesh report") {
    const fs::path dir = scratch("mesh");
    RunConfig c = config_in(dir);
    c.level = 2;
    std::string log;
    REQUIRE(run("mesh", c, &log) == 0);
    const json r = read_json(dir / "mesh_report.json");
    CHECK(r["surface"]["triangles"] == 320);
    CHECK(r["surface"]["area_rel_error_vs_4pi"].get<double>() < 0.02);
    CHECK(log.find("relative error vs 4 pi") != std::string::npos);
    std::ifstream off(dir / "surface.off");
    CHECK(read_off(off).num_triangles() == 320);
  }

  TEST_CASE("coefficient audits") {
    const fs::path dir = scratch("coeff");
    RunConfig c = config_in(dir);
    CHECK(run("check-coeff", c) == 0);
    json r = read_json(dir / "coefficient_report.json")["report"];
    CHECK(r["passes_cond0"] == true);
    CHECK(r["passes_cond1"] == true);
    CHECK(r["passes_cond3"] == true);
    CHECK(r["passes_decay"] == true);

    c.coefficient = "sine_x1";
    c.coefficient_params.clear();
    CHECK(run("check-coeff", c) == 1);
    r = read_json(dir / "coefficient_report.json")["report"];
    CHECK(r["passes_cond0"] == true);
    CHECK(r["passes_cond1"] == false);

    c.coefficient = "constant";
    CHECK(run("check-coeff", c) == 0);
    r = read_json(dir / "coefficient_report.json")["report"];
    CHECK(r["sup_omega_grad_a"] == 0.0);
    CHECK(r["sup_omega2_lap_a"] == 0.0);
  }

  TEST_CASE("green-check on the zero field") {
    const fs::path dir = scratch("green");
    RunConfig c = config_in(dir);
    c.case_name = "zero";
    CHECK(run("green-check", c) == 0);
    for (const json& r : read_json(dir / "green_check.json")["reports"]) CHECK(r["max_abs"] == 0.0);
  }

  TEST_CASE("solve with zero data writes a zero solution") {
    const fs::path dir = scratch("solve_zero");
    RunConfig c = config_in(dir);
    c.case_name = "zero";
    CHECK(run("solve", c) == 0);
    const json r = read_json(dir / "m12_solution.json");
    for (const json& v : r["u"]) CHECK(v == 0.0);
    for (const json& v : r["recovered_trace"]["coeffs"]) CHECK(v == 0.0);
    CHECK(read_file(dir / "probes.csv").rfind("x,y,z,u,u_exact,abs_error\n", 0) == 0);
  }

  TEST_CASE("dense cap exit code") {
    RunConfig c = config_in(scratch("cap"));
    c.level = 4;
    c.mesh.angular_level = 2;
    c.mesh.n_radial = 10;
    CHECK(run("solve", c) == 3);
  }

  TEST_CASE("convergence table parses back") {
    std::vector<ConvergenceRow> rows(2);
    rows[0] = {1, 0.618, 80, 136, 0.095, 0.15, 0.58, 0.14, 94.6, 0.0};
    rows[1] = {2, 0.1 + 0.2, 480, 711, 1.0 / 3.0, 6e-3, 8.4e-2, 1.4e-2, 196.5, 0.0};
    std::stringstream s;
    write_convergence_csv(s, rows);
    const auto back = read_convergence_csv(s);
    REQUIRE(back.size() == 2);
    for (std::size_t i = 0; i < 2; ++i) {
      CHECK(back[i].level == rows[i].level);
      CHECK(back[i].h_surface == rows[i].h_surface);
      CHECK(back[i].n_unknowns == rows[i].n_unknowns);
      CHECK(back[i].probe_rel == rows[i].probe_rel);
      CHECK(back[i].condition == rows[i].condition);
    }
    std::stringstream bad("level,h\n1,2\n");
    CHECK_THROWS_AS(read_convergence_csv(bad), Error);
  }

  TEST_CASE("converge over two levels") {
    const fs::path dir = scratch("converge");
    RunConfig c = config_in(dir);
    c.levels = {1, 2};
    CHECK(run("converge", c) == 0);
    std::ifstream in(dir / "convergence.csv");
    const auto rows = read_convergence_csv(in);
    REQUIRE(rows.size() == 2);
    CHECK(rows[1].weighted_rel < rows[0].weighted_rel);
    CHECK(rows[1].probe_rel < rows[0].probe_rel);
    // runtime per level lives in the timings file
    std::istringstream t(read_file(dir / "timings_converge.csv"));
    std::string line;
    std::getline(t, line);
    CHECK(line == "command,stage,seconds");
    std::vector<double> secs;
    while (std::getline(t, line)) {
      if (line.rfind("converge,level_", 0) == 0) secs.push_back(std::stod(line.substr(line.rfind(',') + 1)));
    }
    REQUIRE(secs.size() == 2);
    CHECK(secs[0] > 0.0);
    CHECK(secs[1] > secs[0]);
  }

  TEST_CASE("output directory override") {
    const fs::path dir = scratch("env");
    ::setenv("BDIE_OUT", dir.string().c_str(), 1);
    RunConfig c;
    c.output_dir = "/nonexistent/never";
    CHECK(output_directory(c) == dir);
    ::unsetenv("BDIE_OUT");
    CHECK(fs::is_directory(dir));
  }

  TEST_CASE("outputs are byte-identical across runs and worker counts") {
    std::vector<fs::path> dirs;
    for (int w : {1, 4, 4}) {
      const fs::path dir = scratch("det_" + std::to_string(dirs.size()));
      RunConfig c = config_in(dir);
      c.level = 2;
      c.workers = w;
      c.iterative_check = true;
      REQUIRE(run("solve", c) == 0);
      REQUIRE(run("green-check", c) == 0);
      dirs.push_back(dir);
    }
    for (const char* f : {"m12_solution.json", "probes.csv", "green_check.json", "green_check.csv"}) {
      const std::string a = read_file(dirs[0] / f);
      CHECK(!a.empty());
      CHECK(a == read_file(dirs[1] / f));
      CHECK(a == read_file(dirs[2] / f));
    }
  }
}
