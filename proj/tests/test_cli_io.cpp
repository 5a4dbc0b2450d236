#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "json.hpp"
#include "millopt/config.hpp"
#include "millopt/errors.hpp"
#include "millopt/output.hpp"
#include "support.hpp"

using namespace millopt;
using namespace millopt::testing;

namespace {

const char* kMinimal = R"(
[grid]
dims = [20, 10]
h = 0.1

[shadow]
angles = [0, 90]
peclet = 1e4

[loads]
supports = ["xmin"]
load_at = ["xmax,ymin"]
load_force = [[0, -1]]
)";

std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::size_t count_lines(const std::string& s) { return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n')); }

std::string message_of(const std::string& text) {
  try {
    parse_config_text(text, "case.toml");
  } catch (const ConfigError& e) {
    return e.what();
  }
  return {};
}

}  // namespace

TEST_CASE("VTK fixture for a 2 x 1 grid") {
  const auto g = grid2(2, 1, 0.5);
  const std::vector<double> f{0.25, 1.0};
  const std::string expected =
      "# vtk DataFile Version 3.0\n"
      "millopt rho\n"
      "ASCII\n"
      "DATASET STRUCTURED_POINTS\n"
      "DIMENSIONS 3 2 1\n"
      "ORIGIN 0 0 0\n"
      "SPACING 0.5 0.5 0.5\n"
      "CELL_DATA 2\n"
      "SCALARS rho double 1\n"
      "LOOKUP_TABLE default\n"
      "0.25\n"
      "1\n";
  CHECK(field_vtk_text(f, g, "rho") == expected);
  const std::vector<double> wrong{1.0};
  CHECK_THROWS_AS(field_vtk_text(wrong, g, "rho"), InvalidArgument);
}

TEST_CASE("VTK header for a 3D grid and nine significant digits") {
  const auto g = grid3(2, 2, 2, 0.25);
  std::vector<double> f(8, 1.0 / 3.0);
  const auto txt = field_vtk_text(f, g, "x");
  CHECK(txt.find("DIMENSIONS 3 3 3\n") != std::string::npos);
  CHECK(txt.find("CELL_DATA 8\n") != std::string::npos);
  CHECK(txt.find("0.333333333\n") != std::string::npos);
  CHECK(count_lines(txt) == 10 + 8);
}

TEST_CASE("field stack and CSV sidecars") {
  const auto dir = std::filesystem::temp_directory_path() / "millopt_test_stack";
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  const auto g = grid2(3, 2, 1.0, {Box{{0, 0, 0}, {1, 1, 0}}});
  FieldStack fs;
  fs.rho.assign(6, 1.0);
  fs.rho_tilde.assign(6, 0.5);
  fs.shadows = {std::vector<double>(5, 0.1), std::vector<double>(5, 0.2)};
  fs.aggregated.assign(5, 0.1);
  fs.projected.assign(5, 0.0);
  write_field_stack(fs, g, dir, "", true);
  for (const char* name : {"rho", "rho_tilde", "shadow_s0", "shadow_s1", "aggregated", "projected"}) {
    CHECK(std::filesystem::exists(dir / (std::string(name) + ".vtk")));
    CHECK(std::filesystem::exists(dir / (std::string(name) + ".csv")));
  }
  CHECK(read_file(dir / "projected.csv") == "1,0,0\n0,0,0\n");
  CHECK(read_file(dir / "shadow_s1.vtk").find("SCALARS shadow_s1 double 1") != std::string::npos);
  std::filesystem::remove_all(dir);
}

TEST_CASE("iteration log") {
  std::vector<IterationRecord> recs(3);
  for (int i = 0; i < 3; ++i) {
    recs[i].iter = i;
    recs[i].compliance = 100.0 / (i + 1);
  }
  const auto txt = iteration_log_text(recs);
  CHECK(txt.rfind(std::string(kIterationLogHeader) + "\n", 0) == 0);
  CHECK(count_lines(txt) == 4);
  std::istringstream in(txt);
  std::string line;
  std::getline(in, line);
  std::getline(in, line);
  CHECK(std::count(line.begin(), line.end(), ',') == 9);
  CHECK(line.rfind("0,100,", 0) == 0);
  CHECK_THROWS_AS(write_iteration_log({}, "unused.csv"), InvalidArgument);
}

TEST_CASE("machinability report JSON") {
  const auto g = grid2(4, 2);
  MachinabilityReport r;
  r.checked = true;
  r.design_cells = 8;
  r.void_cells = 2;
  r.unreachable_void = 1;
  r.unreachable_fraction = 0.5;
  r.unreachable_cells = {g.cell_index(2, 1)};
  const auto j = nlohmann::json::parse(machinability_json(r, g));
  CHECK(j["checked"] == true);
  CHECK(j["machinable"] == false);
  CHECK(j["unreachable_void"] == 1);
  CHECK(j["unreachable_examples"][0][0] == 2);
  CHECK(j["unreachable_examples"][0][1] == 1);
}

TEST_CASE("minimal config fills in defaults") {
  const auto pc = parse_config_text(kMinimal);
  const auto& c = pc.config;
  CHECK(pc.warnings.empty());
  CHECK(c.grid.dims == std::vector<int>{20, 10});
  CHECK(c.directions.size() == 2);
  CHECK(c.directions[0].u()[0] == doctest::Approx(-1.0));
  CHECK(c.directions[1].u()[1] == doctest::Approx(-1.0));
  CHECK(c.rho_init == doctest::Approx(0.02));
  CHECK(c.mma.asyinit == doctest::Approx(0.5 / 17.0));
  CHECK(c.loads.loads.size() == 1);
  CHECK(c.loads.loads[0].force[1] == -1.0);
}

TEST_CASE("resolved config round-trips") {
  for (const char* text : {kMinimal}) {
    const auto a = parse_config_text(text).config;
    const auto b = parse_config_text(resolved_config_text(a)).config;
    CHECK(a == b);
    CHECK(resolved_config_text(b) == resolved_config_text(a));
  }
  std::string three = R"(
[grid]
dims = [6, 4, 4]
h = 0.1
passive = [[0, 0, 0, 0.2, 0.2, 0.2]]
[filter]
kind = "pde"
r_min = 0.15
[shadow]
directions = [[0, 3, 0], [1, 0, 0]]
source_factor = 100
[material]
e_min = 1e-4
e_min_schedule = [20, 40, 60]
[loads]
supports = ["xmin"]
load_at = ["xmax,ymin"]
load_force = [[0, -1, 0]]
[solver]
kind = "iterative"
)";
  const auto pc = parse_config_text(three);
  CHECK(pc.warnings.size() == 2);
  const auto b = parse_config_text(resolved_config_text(pc.config)).config;
  CHECK(pc.config == b);
  CHECK(b.directions[0].u()[1] == 1.0);
  CHECK(b.solver.kind == SolverKind::Iterative);
}

TEST_CASE("missing peclet falls back to the rule of thumb with a warning") {
  std::string text = kMinimal;
  text.replace(text.find("peclet = 1e4\n"), 13, "");
  const auto pc = parse_config_text(text);
  REQUIRE(pc.warnings.size() == 1);
  CHECK(pc.warnings[0].find("peclet") != std::string::npos);
  CHECK(pc.config.peclet == doctest::Approx(1e4 / 2.0));
}

TEST_CASE("config errors carry the line number") {
  CHECK(message_of("[grid]\ndims = [2, 2]\nh = 1\ndims = [3, 3]\n").find("case.toml:4: duplicate key 'dims'") !=
        std::string::npos);
  CHECK(message_of(std::string(kMinimal) + "\n[run]\nmax_itres = 3\n").find(":16: unknown key 'max_itres'") !=
        std::string::npos);
  CHECK(message_of("[gird]\n").find("case.toml:1: unknown section [gird]") != std::string::npos);
  CHECK(message_of("[grid]\ndims = [2, 2\n").find("case.toml:") != std::string::npos);
  CHECK(message_of("[grid]\nh = 1\n").find("missing required key 'dims'") != std::string::npos);
  std::string both = kMinimal;
  both.insert(both.find("peclet"), "directions = [[1, 0]]\n");
  CHECK_FALSE(message_of(both).empty());
  std::string bad_rho = std::string(kMinimal) + "[run]\nrho_init = 1.5\n";
  CHECK_FALSE(message_of(bad_rho).empty());
  CHECK_THROWS_AS(parse_config("/nonexistent/run.toml"), ConfigError);
}

TEST_CASE("shipped configs parse") {
  const std::filesystem::path dir = MILLOPT_CONFIG_DIR;
  int n = 0;
  for (const auto& e : std::filesystem::directory_iterator(dir)) {
    if (e.path().extension() != ".toml") continue;
    CAPTURE(e.path().string());
    const auto pc = parse_config(e.path());
    CHECK(pc.warnings.empty());
    CHECK_NOTHROW(validate(pc.config));
    ++n;
  }
  CHECK(n >= 6);
}
