#include <cstring>
#include <filesystem>
#include <string>
#include <vector>

#include "doctest.h"
#include "millopt/millopt.h"

namespace {

const char* kSmall = R"(
[grid]
dims = [16, 8]
h = 0.125
[filter]
r_min = 0.3
[shadow]
angles = [0]
peclet = 1e4
[material]
simp_p = 3
[loads]
supports = ["xmin"]
load_at = ["xmax,ymin"]
load_force = [[0, -1]]
[run]
rho_init = 0.02
max_iters = 4
)";

void count_progress(const millopt_iteration*, void* user) { ++*static_cast<int*>(user); }

}  // namespace

TEST_CASE("config handles and errors") {
  CHECK(std::strlen(millopt_version()) > 0);
  millopt_config_t* cfg = nullptr;
  CHECK(millopt_config_parse("[grid]\nbogus = 1\n", &cfg) == MILLOPT_ERR_CONFIG);
  CHECK(cfg == nullptr);
  CHECK(std::string(millopt_last_error()).find("unknown key 'bogus'") != std::string::npos);
  CHECK(millopt_config_load("/nonexistent.toml", &cfg) == MILLOPT_ERR_CONFIG);
  CHECK(millopt_config_parse(nullptr, &cfg) == MILLOPT_ERR_ARGUMENT);

  REQUIRE(millopt_config_parse(kSmall, &cfg) == MILLOPT_OK);
  CHECK(millopt_config_warning_count(cfg) == 0);
  CHECK(millopt_config_warning(cfg, 0) == nullptr);
  const std::string resolved = millopt_config_resolved(cfg);
  CHECK(resolved.find("max_iters = 4") != std::string::npos);
  CHECK(millopt_config_set_max_iters(cfg, -1) == MILLOPT_ERR_ARGUMENT);
  millopt_config_t* again = nullptr;
  REQUIRE(millopt_config_parse(resolved.c_str(), &again) == MILLOPT_OK);
  CHECK(std::string(millopt_config_resolved(again)) == resolved);
  millopt_config_free(again);
  millopt_config_free(cfg);
}

TEST_CASE("gradient check through the C interface") {
  millopt_config_t* cfg = nullptr;
  REQUIRE(millopt_config_parse(kSmall, &cfg) == MILLOPT_OK);
  double ec = 1.0, ev = 1.0;
  REQUIRE(millopt_check_gradient(cfg, 10, 3u, 1e-6, &ec, &ev) == MILLOPT_OK);
  CHECK(ec < 1e-4);
  CHECK(ev < 1e-4);
  CHECK(millopt_check_gradient(cfg, 10, 3u, 0.0, &ec, &ev) == MILLOPT_ERR_ARGUMENT);
  millopt_config_free(cfg);
}

TEST_CASE("run, inspect and write outputs") {
  const auto dir = std::filesystem::temp_directory_path() / "millopt_capi_run";
  std::filesystem::remove_all(dir);
  millopt_config_t* cfg = nullptr;
  REQUIRE(millopt_config_parse(kSmall, &cfg) == MILLOPT_OK);
  const std::string out = dir.string();
  millopt_run_options opts{1, 0, 2, out.c_str(), 0};
  int calls = 0;
  millopt_run_t* run = nullptr;
  REQUIRE(millopt_run(cfg, &opts, count_progress, &calls, &run) == MILLOPT_OK);
  REQUIRE(run != nullptr);
  CHECK(millopt_run_iteration_count(run) == 5);
  CHECK(calls == 5);
  millopt_iteration it{};
  REQUIRE(millopt_run_iteration(run, 4, &it) == MILLOPT_OK);
  CHECK(it.iter == 4);
  CHECK(it.filter_solves == 6);
  REQUIRE(millopt_run_iteration(run, 0, &it) == MILLOPT_OK);
  CHECK(it.filter_solves == 6);
  CHECK(it.scaled_obj == doctest::Approx(10.0));
  CHECK(millopt_run_iteration(run, 5, &it) == MILLOPT_ERR_ARGUMENT);

  REQUIRE(millopt_run_cell_count(run) == 128);
  std::vector<double> phys(128);
  CHECK(millopt_run_physical(run, phys.data(), 127) == MILLOPT_ERR_ARGUMENT);
  REQUIRE(millopt_run_physical(run, phys.data(), phys.size()) == MILLOPT_OK);
  for (double v : phys) CHECK(v >= 0.0);

  millopt_machinability m{};
  REQUIRE(millopt_run_machinability(run, &m) == MILLOPT_OK);
  CHECK(m.checked == 1);
  CHECK(m.design_cells == 128);

  REQUIRE(millopt_run_write_outputs(run, out.c_str(), 1) == MILLOPT_OK);
  for (const char* f : {"rho.vtk", "rho.csv", "rho_tilde.vtk", "shadow_s0.vtk", "aggregated.vtk", "projected.vtk",
                        "iterations.csv", "resolved.toml", "machinability.json", "snapshots/iter_00000_projected.vtk",
                        "snapshots/iter_00002_projected.vtk", "snapshots/iter_00004_projected.vtk"}) {
    CAPTURE(f);
    CHECK(std::filesystem::exists(dir / f));
  }
  CHECK_FALSE(std::filesystem::exists(dir / "snapshots/iter_00001_projected.vtk"));
  millopt_run_free(run);

  millopt_config_t* back = nullptr;
  REQUIRE(millopt_config_load((dir / "resolved.toml").string().c_str(), &back) == MILLOPT_OK);
  CHECK(std::string(millopt_config_resolved(back)) == std::string(millopt_config_resolved(cfg)));
  millopt_config_free(back);
  millopt_config_free(cfg);
  std::filesystem::remove_all(dir);
}

TEST_CASE("reference switch and argument checks") {
  millopt_config_t* cfg = nullptr;
  REQUIRE(millopt_config_parse(kSmall, &cfg) == MILLOPT_OK);
  REQUIRE(millopt_config_set_reference(cfg, 1) == MILLOPT_OK);
  CHECK(std::string(millopt_config_resolved(cfg)).find("reference = true") != std::string::npos);
  millopt_run_options bad{1, 0, 1, nullptr, 0};
  millopt_run_t* run = nullptr;
  CHECK(millopt_run(cfg, &bad, nullptr, nullptr, &run) == MILLOPT_ERR_ARGUMENT);
  CHECK(run == nullptr);
  REQUIRE(millopt_config_set_max_iters(cfg, 0) == MILLOPT_OK);
  REQUIRE(millopt_run(cfg, nullptr, nullptr, nullptr, &run) == MILLOPT_OK);
  millopt_machinability m{};
  REQUIRE(millopt_run_machinability(run, &m) == MILLOPT_OK);
  CHECK(m.checked == 0);
  millopt_run_free(run);
  millopt_config_free(cfg);
  CHECK(millopt_run_iteration_count(nullptr) == 0);
  CHECK(millopt_run_machinability(nullptr, &m) == MILLOPT_ERR_ARGUMENT);
}
