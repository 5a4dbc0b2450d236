// Command-line front end over the C interface.
#include <cstdio>
#include <string>

#include "CLI11.hpp"
#include "millopt/millopt.h"

namespace {

int exit_code(millopt_status st) {
  switch (st) {
    case MILLOPT_OK:
      return 0;
    case MILLOPT_ERR_CONFIG:
    case MILLOPT_ERR_ARGUMENT:
      return 2;
    case MILLOPT_ERR_SOLVER:
      return 3;
    default:
      return 1;
  }
}

void print_iteration(const millopt_iteration* it, void*) {
  std::printf("it %4d  C %.6g  vol %.4f  g %+.2e  change %.3e  %.0f ms\n", it->iter, it->compliance, it->volfrac,
              it->g, it->change, it->wall_ms);
  std::fflush(stdout);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"millopt: topology optimization with milling constraints"};
  app.require_subcommand(1);
  auto* run_cmd = app.add_subcommand("run", "optimize the design described by a config file");

  std::string config_path;
  std::string out_dir = "out";
  int snapshot_every = 0;
  bool deterministic = false;
  bool check_gradient = false;
  bool reference = false;
  bool csv = false;
  bool quiet = false;
  int max_iters = -1;
  run_cmd->add_option("config", config_path, "TOML run file")->required();
  run_cmd->add_option("--out", out_dir, "output directory");
  run_cmd->add_option("--snapshot-every", snapshot_every, "write the projected field every N iterations")
      ->check(CLI::NonNegativeNumber);
  run_cmd->add_flag("--deterministic", deterministic, "single worker, reproducible output");
  run_cmd->add_flag("--check-gradient", check_gradient, "finite-difference check of the gradients, then exit");
  run_cmd->add_flag("--reference", reference, "bypass shadowing (no milling constraint)");
  run_cmd->add_flag("--csv", csv, "write CSV copies of the field files");
  run_cmd->add_option("--max-iters", max_iters, "override run.max_iters");
  run_cmd->add_flag("-q,--quiet", quiet, "no per-iteration output");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }

  millopt_config_t* cfg = nullptr;
  millopt_status st = millopt_config_load(config_path.c_str(), &cfg);
  if (st != MILLOPT_OK) {
    std::fprintf(stderr, "error: %s\n", millopt_last_error());
    return exit_code(st);
  }
  for (size_t i = 0; i < millopt_config_warning_count(cfg); ++i) {
    std::fprintf(stderr, "warning: %s\n", millopt_config_warning(cfg, i));
  }
  if (reference && (st = millopt_config_set_reference(cfg, 1)) != MILLOPT_OK) {
    std::fprintf(stderr, "error: %s\n", millopt_last_error());
    millopt_config_free(cfg);
    return exit_code(st);
  }
  if (max_iters >= 0) millopt_config_set_max_iters(cfg, max_iters);

  if (check_gradient) {
    double ec = 0.0, ev = 0.0;
    st = millopt_check_gradient(cfg, 20, 1u, 1e-6, &ec, &ev);
    millopt_config_free(cfg);
    if (st != MILLOPT_OK) {
      std::fprintf(stderr, "error: %s\n", millopt_last_error());
      return exit_code(st);
    }
    std::printf("gradient check: compliance max rel err %.3e, volume max rel err %.3e\n", ec, ev);
    return ec < 1e-4 && ev < 1e-4 ? 0 : 1;
  }

  millopt_run_options opts{deterministic ? 1 : 0, 0, snapshot_every, out_dir.c_str(), csv ? 1 : 0};
  millopt_run_t* run = nullptr;
  st = millopt_run(cfg, &opts, quiet ? nullptr : print_iteration, nullptr, &run);
  millopt_config_free(cfg);
  if (st != MILLOPT_OK) std::fprintf(stderr, "error: %s\n", millopt_last_error());
  if (!run) return exit_code(st);

  if (millopt_run_iteration_count(run) > 0) {
    const millopt_status wst = millopt_run_write_outputs(run, out_dir.c_str(), csv ? 1 : 0);
    if (wst != MILLOPT_OK) {
      std::fprintf(stderr, "error: %s\n", millopt_last_error());
      millopt_run_free(run);
      return st != MILLOPT_OK ? exit_code(st) : exit_code(wst);
    }
    millopt_iteration last{};
    millopt_run_iteration(run, millopt_run_iteration_count(run) - 1, &last);
    millopt_machinability m{};
    millopt_run_machinability(run, &m);
    std::printf("final: iter %d  compliance %.6g  volfrac %.4f  binary %.2f%%", last.iter, last.compliance,
                last.volfrac, 100.0 * m.binary_fraction);
    if (m.checked) std::printf("  unreachable void %.3f%%", 100.0 * m.unreachable_fraction);
    std::printf("\n");
  }
  millopt_run_free(run);
  return exit_code(st);
}
