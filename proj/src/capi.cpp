#include "millopt/millopt.h"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <random>
#include <string>

#include "millopt/config.hpp"
#include "millopt/driver.hpp"
#include "millopt/errors.hpp"
#include "millopt/output.hpp"

struct millopt_config {
  millopt::RunConfig cfg;
  std::vector<std::string> warnings;
  std::string resolved;
};

struct millopt_run {
  millopt::RunConfig cfg;
  std::unique_ptr<millopt::StructuredGrid> grid;
  millopt::OptimizationResult result;
};

namespace {

thread_local std::string g_last_error;

template <class Fn>
millopt_status guarded(Fn&& fn) {
  try {
    fn();
    g_last_error.clear();
    return MILLOPT_OK;
  } catch (const millopt::ConfigError& e) {
    g_last_error = e.what();
    return MILLOPT_ERR_CONFIG;
  } catch (const millopt::SolverError& e) {
    g_last_error = e.what();
    return MILLOPT_ERR_SOLVER;
  } catch (const millopt::IoError& e) {
    g_last_error = e.what();
    return MILLOPT_ERR_IO;
  } catch (const millopt::InvalidArgument& e) {
    g_last_error = e.what();
    return MILLOPT_ERR_ARGUMENT;
  } catch (const std::filesystem::filesystem_error& e) {
    g_last_error = e.what();
    return MILLOPT_ERR_IO;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return MILLOPT_ERR_INTERNAL;
  } catch (...) {
    g_last_error = "unknown error";
    return MILLOPT_ERR_INTERNAL;
  }
}

millopt_status bad_argument(const char* msg) {
  g_last_error = msg;
  return MILLOPT_ERR_ARGUMENT;
}

millopt_iteration to_c(const millopt::IterationRecord& r) {
  return {r.iter,      r.compliance, r.scaled_obj,    r.volfrac,       r.g,
          r.change,    r.fea_iters,  r.shadow_iters,  r.adjoint_iters, r.wall_ms,
          r.filter_solves};
}

std::span<const millopt::ToolDirection> directions_of(const millopt::RunConfig& c) {
  if (c.reference) return {};
  return c.directions;
}

}  // namespace

extern "C" {

const char* millopt_version(void) { return "0.1.0"; }

const char* millopt_last_error(void) { return g_last_error.c_str(); }

millopt_status millopt_config_load(const char* path, millopt_config_t** out) {
  if (!path || !out) return bad_argument("null argument");
  *out = nullptr;
  return guarded([&] {
    auto pc = millopt::parse_config(path);
    *out = new millopt_config{std::move(pc.config), std::move(pc.warnings), {}};
  });
}

millopt_status millopt_config_parse(const char* text, millopt_config_t** out) {
  if (!text || !out) return bad_argument("null argument");
  *out = nullptr;
  return guarded([&] {
    auto pc = millopt::parse_config_text(text);
    *out = new millopt_config{std::move(pc.config), std::move(pc.warnings), {}};
  });
}

void millopt_config_free(millopt_config_t* cfg) { delete cfg; }

size_t millopt_config_warning_count(const millopt_config_t* cfg) { return cfg ? cfg->warnings.size() : 0; }

const char* millopt_config_warning(const millopt_config_t* cfg, size_t i) {
  if (!cfg || i >= cfg->warnings.size()) return nullptr;
  return cfg->warnings[i].c_str();
}

millopt_status millopt_config_set_reference(millopt_config_t* cfg, int on) {
  if (!cfg) return bad_argument("null config");
  return guarded([&] {
    millopt::RunConfig c = cfg->cfg;
    c.reference = on != 0;
    // The reference design starts from the volume-neutral midpoint.
    if (c.reference) c.rho_init = 0.5;
    millopt::validate(c);
    cfg->cfg = std::move(c);
  });
}

millopt_status millopt_config_set_max_iters(millopt_config_t* cfg, int max_iters) {
  if (!cfg) return bad_argument("null config");
  if (max_iters < 0) return bad_argument("max_iters must be non-negative");
  cfg->cfg.max_iters = max_iters;
  return MILLOPT_OK;
}

const char* millopt_config_resolved(millopt_config_t* cfg) {
  if (!cfg) return nullptr;
  cfg->resolved = millopt::resolved_config_text(cfg->cfg);
  return cfg->resolved.c_str();
}

millopt_status millopt_check_gradient(const millopt_config_t* cfg, size_t n_components, unsigned seed, double step,
                                      double* max_rel_compliance, double* max_rel_volume) {
  if (!cfg || !max_rel_compliance || !max_rel_volume) return bad_argument("null argument");
  if (!(step > 0.0)) return bad_argument("step must be positive");
  return guarded([&] {
    millopt::Problem problem(cfg->cfg, {true, 1});
    const auto n = static_cast<std::size_t>(problem.grid().num_design());
    std::mt19937 rng(seed);
    std::uniform_real_distribution<double> uni(0.5, 1.5);
    std::vector<double> x(n);
    for (double& v : x) v = std::min(0.95, cfg->cfg.rho_init * uni(rng));
    std::vector<std::size_t> comps;
    std::uniform_int_distribution<std::size_t> pick(0, n - 1);
    for (std::size_t i = 0; i < std::min(n_components, n); ++i) comps.push_back(pick(rng));
    const auto gc = millopt::check_gradient(problem, x, comps, step);
    *max_rel_compliance = gc.max_rel_error_compliance;
    *max_rel_volume = gc.max_rel_error_volume;
  });
}

millopt_status millopt_run(const millopt_config_t* cfg, const millopt_run_options* opts, millopt_progress_fn progress,
                           void* user, millopt_run_t** out) {
  if (!cfg || !out) return bad_argument("null argument");
  *out = nullptr;
  millopt_run_options o{};
  if (opts) o = *opts;
  if (o.snapshot_every < 0) return bad_argument("snapshot_every must be non-negative");
  if (o.snapshot_every > 0 && !o.out_dir) return bad_argument("snapshots need an output directory");

  auto run = std::make_unique<millopt_run_t>();
  const millopt_status st = guarded([&] {
    run->cfg = cfg->cfg;
    const auto& g = run->cfg.grid;
    run->grid = std::make_unique<millopt::StructuredGrid>(
        millopt::StructuredGrid::build(g.dims, g.h, g.origin, g.passive));
    std::filesystem::path snap_dir;
    if (o.snapshot_every > 0) {
      snap_dir = std::filesystem::path(o.out_dir) / "snapshots";
      std::filesystem::create_directories(snap_dir);
    }
    const millopt::RunOptions ro{o.deterministic != 0, o.threads};
    run->result = millopt::optimize(run->cfg, ro, [&](const millopt::IterationRecord& r, const millopt::FieldStack& f) {
      if (o.snapshot_every > 0 && r.iter % o.snapshot_every == 0) {
        char name[32];
        std::snprintf(name, sizeof name, "iter_%05d_", r.iter);
        millopt::write_field_vtk(millopt::expand_design_field(f.projected, *run->grid), *run->grid, "projected",
                                 snap_dir / (std::string(name) + "projected.vtk"));
      }
      if (progress) {
        const millopt_iteration it = to_c(r);
        progress(&it, user);
      }
    });
    if (!run->result.ok()) throw millopt::SolverError(run->result.failure);
  });
  if (st == MILLOPT_OK || st == MILLOPT_ERR_SOLVER) *out = run.release();
  return st;
}

void millopt_run_free(millopt_run_t* run) { delete run; }

size_t millopt_run_iteration_count(const millopt_run_t* run) { return run ? run->result.records.size() : 0; }

millopt_status millopt_run_iteration(const millopt_run_t* run, size_t i, millopt_iteration* out) {
  if (!run || !out) return bad_argument("null argument");
  if (i >= run->result.records.size()) return bad_argument("iteration index out of range");
  *out = to_c(run->result.records[i]);
  return MILLOPT_OK;
}

int millopt_run_converged(const millopt_run_t* run) { return run && run->result.converged ? 1 : 0; }

size_t millopt_run_cell_count(const millopt_run_t* run) {
  return run && run->grid ? static_cast<size_t>(run->grid->num_cells()) : 0;
}

millopt_status millopt_run_physical(const millopt_run_t* run, double* out, size_t n) {
  if (!run || !out) return bad_argument("null argument");
  if (run->result.records.empty()) return bad_argument("run has no evaluated design");
  if (n != static_cast<size_t>(run->grid->num_cells())) return bad_argument("buffer length must equal the cell count");
  const auto phys = run->result.fields.physical(*run->grid);
  std::copy(phys.begin(), phys.end(), out);
  return MILLOPT_OK;
}

millopt_status millopt_run_machinability(const millopt_run_t* run, millopt_machinability* out) {
  if (!run || !out) return bad_argument("null argument");
  if (run->result.records.empty()) return bad_argument("run has no evaluated design");
  return guarded([&] {
    const auto r = millopt::machinability_check(*run->grid, run->result.fields.projected, directions_of(run->cfg));
    *out = {r.checked ? 1 : 0, r.machinable ? 1 : 0, static_cast<long>(r.design_cells), static_cast<long>(r.void_cells),
            static_cast<long>(r.unreachable_void), r.unreachable_fraction, r.binary_fraction};
  });
}

millopt_status millopt_run_write_outputs(const millopt_run_t* run, const char* dir, int csv_sidecar) {
  if (!run || !dir) return bad_argument("null argument");
  if (run->result.records.empty()) return bad_argument("run has no evaluated design");
  return guarded([&] {
    const std::filesystem::path d(dir);
    std::filesystem::create_directories(d);
    millopt::write_field_stack(run->result.fields, *run->grid, d, "", csv_sidecar != 0);
    millopt::write_iteration_log(run->result.records, d / "iterations.csv");
    millopt::write_text_file(d / "resolved.toml", millopt::resolved_config_text(run->cfg));
    const auto r = millopt::machinability_check(*run->grid, run->result.fields.projected, directions_of(run->cfg));
    millopt::write_text_file(d / "machinability.json", millopt::machinability_json(r, *run->grid));
  });
}

}  // extern "C"
