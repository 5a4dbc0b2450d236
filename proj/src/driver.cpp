#include "millopt/driver.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <thread>

#include "millopt/errors.hpp"

namespace millopt {

namespace {

template <class Fn>
void parallel_for(std::size_t n, int threads, Fn&& fn) {
  const std::size_t workers = std::min<std::size_t>(n, static_cast<std::size_t>(std::max(threads, 1)));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::exception_ptr> errors(workers);
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (std::size_t i = w; i < n; i += workers) fn(i);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

void fail(const std::string& msg) { throw ConfigError(msg); }

}  // namespace

void validate(const RunConfig& cfg) {
  const auto& g = cfg.grid;
  if (g.dims.size() != 2 && g.dims.size() != 3) fail("grid.dims must have 2 or 3 entries");
  for (int d : g.dims) {
    if (d < 1) fail("grid.dims entries must be positive");
  }
  if (!(g.h > 0.0) || !std::isfinite(g.h)) fail("grid.h must be positive");
  if (!(cfg.filter.r_min > 0.0)) fail("filter.r_min must be positive");
  if (!cfg.reference) {
    if (cfg.directions.empty()) fail("shadow: at least one tool direction is required");
    for (const auto& d : cfg.directions) {
      if (d.dim() != static_cast<int>(g.dims.size())) fail("shadow: direction dimension does not match the grid");
    }
    if (!(cfg.peclet > 0.0)) fail("shadow.peclet must be positive");
    if (!(cfg.source_factor > 0.0)) fail("shadow.source_factor must be positive");
  }
  try {
    validate(cfg.aggregate, cfg.reference ? 1 : static_cast<int>(cfg.directions.size()));
    validate(cfg.material);
    validate(cfg.mma);
  } catch (const InvalidArgument& e) {
    fail(e.what());
  }
  if (!(cfg.v_star > 0.0 && cfg.v_star <= 1.0)) fail("run.v_star must lie in (0, 1]");
  if (!(cfg.rho_init > 0.0 && cfg.rho_init < 1.0)) fail("run.rho_init must lie in (0, 1)");
  if (cfg.max_iters < 0) fail("run.max_iters must be non-negative");
  if (!(cfg.change_tol >= 0.0)) fail("run.change_tol must be non-negative");
  if (!(cfg.e_min_schedule.factor > 0.0)) fail("material.e_min_factor must be positive");
  if (cfg.loads.supports.empty()) fail("loads.supports must not be empty");
  if (cfg.loads.loads.empty()) fail("loads: at least one load is required");
}

int resolve_thread_count(const RunOptions& opts) {
  if (opts.deterministic) return 1;
  int n = opts.threads > 0 ? opts.threads : static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  if (const char* env = std::getenv("MILLOPT_THREADS")) {
    const int cap = std::atoi(env);
    if (cap > 0) n = std::min(n, cap);
  }
  return std::max(n, 1);
}

std::vector<double> FieldStack::physical(const StructuredGrid& grid) const {
  std::vector<double> out(grid.num_cells(), 1.0);
  const auto& cells = grid.design_cells();
  for (std::size_t e = 0; e < cells.size(); ++e) out[cells[e]] = projected[e];
  return out;
}

MillingFilter::MillingFilter(const StructuredGrid& grid, const FilterSpec& filter,
                             std::span<const ToolDirection> directions, const ShadowConfig& shadow,
                             const AggregateConfig& aggregate, SolverPolicy policy, int threads)
    : grid_(&grid),
      density_(grid, filter, policy),
      aggregate_(aggregate),
      threads_(std::max(threads, 1)),
      counters_(std::make_unique<SolveCounters>()) {
  validate(aggregate_, std::max<int>(1, static_cast<int>(directions.size())));
  shadows_.resize(directions.size());
  parallel_for(directions.size(), threads_, [&](std::size_t s) {
    shadows_[s] = std::make_unique<ShadowOperator>(grid, directions[s], shadow, policy);
  });
}

MillingFilter::~MillingFilter() = default;

FieldStack MillingFilter::forward(std::span<const double> design) const {
  const auto& cells = grid_->design_cells();
  if (design.size() != cells.size()) throw InvalidArgument("design vector has wrong length");
  FieldStack f;
  f.rho.assign(grid_->num_cells(), 1.0);
  for (std::size_t e = 0; e < cells.size(); ++e) {
    if (!std::isfinite(design[e])) throw InvalidArgument("design vector contains non-finite values");
    f.rho[cells[e]] = design[e];
  }
  f.rho_tilde = density_.apply(f.rho);
  ++counters_->density_forward;

  std::vector<double> rt_design(cells.size());
  for (std::size_t e = 0; e < cells.size(); ++e) rt_design[e] = f.rho_tilde[cells[e]];

  if (shadows_.empty()) {
    f.aggregated = rt_design;
  } else {
    f.shadows.resize(shadows_.size());
    parallel_for(shadows_.size(), threads_, [&](std::size_t s) {
      SolveReport rep;
      f.shadows[s] = shadows_[s]->forward(rt_design, &rep);
      ++counters_->shadow_forward;
      counters_->shadow_forward_iters += rep.iterations;
    });
    auto agg = pmean_aggregate(f.shadows, aggregate_.p_mean);
    f.aggregated = std::move(agg.value);
    f.pmean_derivative = std::move(agg.derivative);
  }
  auto proj = heaviside_project(f.aggregated, aggregate_.beta, aggregate_.eta);
  f.projected = std::move(proj.value);
  f.projection_derivative = std::move(proj.derivative);
  return f;
}

std::vector<double> MillingFilter::backward(const FieldStack& f, std::span<const double> d_projected) const {
  const auto& cells = grid_->design_cells();
  const std::size_t n = cells.size();
  if (d_projected.size() != n) throw InvalidArgument("gradient vector has wrong length");
  std::vector<double> d_agg(n);
  for (std::size_t e = 0; e < n; ++e) d_agg[e] = d_projected[e] * f.projection_derivative[e];

  std::vector<double> d_rt(n, 0.0);
  if (shadows_.empty()) {
    d_rt = d_agg;
  } else {
    std::vector<std::vector<double>> parts(shadows_.size());
    parallel_for(shadows_.size(), threads_, [&](std::size_t s) {
      std::vector<double> g(n);
      for (std::size_t e = 0; e < n; ++e) g[e] = d_agg[e] * f.pmean_derivative[s][e];
      SolveReport rep;
      parts[s] = shadows_[s]->adjoint(g, &rep);
      ++counters_->shadow_adjoint;
      counters_->shadow_adjoint_iters += rep.iterations;
    });
    // Summed in direction order so the result does not depend on scheduling.
    for (const auto& p : parts) {
      for (std::size_t e = 0; e < n; ++e) d_rt[e] += p[e];
    }
  }

  std::vector<double> full(grid_->num_cells(), 0.0);
  for (std::size_t e = 0; e < n; ++e) full[cells[e]] = d_rt[e];
  const auto d_rho = density_.apply_adjoint(full);
  ++counters_->density_adjoint;
  std::vector<double> out(n);
  for (std::size_t e = 0; e < n; ++e) out[e] = d_rho[cells[e]];
  return out;
}

FieldStack forward_chain(const MillingFilter& chain, std::span<const double> design) {
  return chain.forward(design);
}

std::vector<double> backward_chain(const MillingFilter& chain, const FieldStack& fields,
                                   std::span<const double> d_projected) {
  return chain.backward(fields, d_projected);
}

Problem::Problem(const RunConfig& cfg, const RunOptions& opts) : cfg_(cfg) {
  validate(cfg_);
  try {
    grid_ = std::make_unique<StructuredGrid>(
        StructuredGrid::build(cfg_.grid.dims, cfg_.grid.h, cfg_.grid.origin, cfg_.grid.passive));
  } catch (const InvalidArgument& e) {
    throw ConfigError(std::string("grid: ") + e.what());
  }
  const auto dirs = active_directions();
  const ShadowConfig sc = ShadowConfig::for_grid(*grid_, cfg_.peclet, cfg_.source_factor);
  try {
    filter_ = std::make_unique<MillingFilter>(*grid_, cfg_.filter, dirs, sc, cfg_.aggregate, cfg_.solver,
                                              resolve_thread_count(opts));
    fem_ = std::make_unique<ElasticityModel>(*grid_, cfg_.loads, cfg_.material.nu, cfg_.solver);
  } catch (const InvalidArgument& e) {
    throw ConfigError(e.what());
  }
}

Problem::~Problem() = default;

std::span<const ToolDirection> Problem::active_directions() const noexcept {
  if (cfg_.reference) return {};
  return cfg_.directions;
}

Problem::Evaluation Problem::evaluate(std::span<const double> design, const MaterialConfig& material,
                                      bool gradients) {
  Evaluation ev;
  ev.fields = filter_->forward(design);
  const auto phys = ev.fields.physical(*grid_);
  ev.state = fem_->solve(phys, material);
  ev.volume = volume_and_sensitivity(ev.fields.projected, *grid_, cfg_.v_star);
  if (!gradients) return ev;

  const auto dc_full = fem_->compliance_sensitivity(ev.state, phys, material);
  const auto& cells = grid_->design_cells();
  std::vector<double> dc(cells.size());
  for (std::size_t e = 0; e < cells.size(); ++e) dc[e] = dc_full[cells[e]];
  ev.compliance_gradient = filter_->backward(ev.fields, dc);
  ev.volume_gradient = filter_->backward(ev.fields, ev.volume.gradient);
  return ev;
}

double Problem::compliance(std::span<const double> design, const MaterialConfig& material) {
  const auto f = filter_->forward(design);
  return fem_->solve(f.physical(*grid_), material).compliance;
}

double Problem::volume_constraint(std::span<const double> design) {
  const auto f = filter_->forward(design);
  return volume_and_sensitivity(f.projected, *grid_, cfg_.v_star).g;
}

OptimizationResult optimize(const RunConfig& cfg, const RunOptions& opts, const IterationCallback& on_iteration) {
  Problem problem(cfg, opts);
  const Index n = problem.grid().num_design();
  OptimizationResult res;
  std::vector<double> x(n, cfg.rho_init);
  MmaState mma(n);
  MaterialConfig mat = cfg.material;
  auto& counters = problem.filter().counters();
  double change = 0.0;

  for (int it = 0;; ++it) {
    const auto t0 = std::chrono::steady_clock::now();
    if (std::find(cfg.e_min_schedule.iterations.begin(), cfg.e_min_schedule.iterations.end(), it) !=
        cfg.e_min_schedule.iterations.end()) {
      mat.e_min *= cfg.e_min_schedule.factor;
    }
    const long solves0 = counters.filter_solves();
    const long fwd0 = counters.shadow_forward_iters;
    const long adj0 = counters.shadow_adjoint_iters;

    Problem::Evaluation ev;
    try {
      ev = problem.evaluate(x, mat);
    } catch (const SolverError& e) {
      res.failure = std::string("iteration ") + std::to_string(it) + ": " + e.what();
      break;
    }

    IterationRecord rec;
    rec.iter = it;
    rec.compliance = ev.state.compliance;
    rec.scaled_obj = rescale_objective(mma, ev.state.compliance);
    rec.volfrac = ev.volume.fraction;
    rec.g = ev.volume.g;
    rec.change = change;
    rec.fea_iters = ev.state.iterations;
    rec.shadow_iters = counters.shadow_forward_iters - fwd0;
    rec.adjoint_iters = counters.shadow_adjoint_iters - adj0;
    rec.filter_solves = counters.filter_solves() - solves0;
    rec.e_min = mat.e_min;

    const bool done = it >= cfg.max_iters || (it > 0 && change < cfg.change_tol);
    std::vector<double> xnew;
    if (!done) {
      std::vector<double> df0(ev.compliance_gradient);
      for (double& v : df0) v *= mma.obj_scale;
      xnew = mma_update(mma, x, rec.scaled_obj, df0, ev.volume.g, ev.volume_gradient, cfg.mma);
    }
    rec.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    res.records.push_back(rec);
    res.fields = std::move(ev.fields);
    res.design = x;
    if (on_iteration) on_iteration(rec, res.fields);
    if (done) {
      res.converged = it > 0 && change < cfg.change_tol;
      break;
    }
    change = 0.0;
    for (Index e = 0; e < n; ++e) change = std::max(change, std::abs(xnew[e] - x[e]));
    x = std::move(xnew);
  }
  return res;
}

GradientCheck check_gradient(Problem& problem, std::span<const double> design,
                             std::span<const std::size_t> components, double step) {
  const MaterialConfig mat = problem.config().material;
  const auto ev = problem.evaluate(design, mat);
  GradientCheck out;
  out.components.assign(components.begin(), components.end());
  std::vector<double> x(design.begin(), design.end());

  double cmax = 0.0, vmax = 0.0;
  for (double v : ev.compliance_gradient) cmax = std::max(cmax, std::abs(v));
  for (double v : ev.volume_gradient) vmax = std::max(vmax, std::abs(v));

  for (std::size_t c : components) {
    const double x0 = x[c];
    x[c] = x0 + step;
    const double cp = problem.compliance(x, mat);
    const double vp = problem.volume_constraint(x);
    x[c] = x0 - step;
    const double cm = problem.compliance(x, mat);
    const double vm = problem.volume_constraint(x);
    x[c] = x0;
    const double fc = (cp - cm) / (2.0 * step);
    const double fv = (vp - vm) / (2.0 * step);
    const double ac = ev.compliance_gradient[c];
    const double av = ev.volume_gradient[c];
    out.compliance_analytic.push_back(ac);
    out.compliance_fd.push_back(fc);
    out.volume_analytic.push_back(av);
    out.volume_fd.push_back(fv);
    out.max_rel_error_compliance =
        std::max(out.max_rel_error_compliance, std::abs(ac - fc) / std::max(std::abs(ac), 1e-6 * cmax));
    out.max_rel_error_volume =
        std::max(out.max_rel_error_volume, std::abs(av - fv) / std::max(std::abs(av), 1e-6 * vmax));
  }
  return out;
}

MachinabilityReport machinability_check(const StructuredGrid& grid, std::span<const double> projected,
                                        std::span<const ToolDirection> directions, double threshold) {
  const auto& cells = grid.design_cells();
  if (projected.size() != cells.size()) throw InvalidArgument("projected field has wrong length");
  MachinabilityReport rep;
  rep.design_cells = static_cast<Index>(cells.size());
  Index binary = 0;
  for (double v : projected) {
    if (v <= 0.05 || v >= 0.95) ++binary;
    if (v < threshold) ++rep.void_cells;
  }
  rep.binary_fraction = cells.empty() ? 1.0 : static_cast<double>(binary) / static_cast<double>(cells.size());
  for (std::size_t s = 0; s < directions.size(); ++s) {
    if (directions[s].aligned_axis() < 0) rep.oblique_directions.push_back(static_cast<int>(s));
  }
  if (directions.empty() || !rep.oblique_directions.empty()) return rep;
  rep.checked = true;

  // solid(cell): passive cells and design cells at or above the threshold.
  const Index nc = grid.num_cells();
  std::vector<char> solid(nc, 1);
  for (std::size_t e = 0; e < cells.size(); ++e) solid[cells[e]] = projected[e] >= threshold ? 1 : 0;
  std::vector<char> reached(nc, 0);

  const auto& dims = grid.dims();
  for (const auto& d : directions) {
    const int axis = d.aligned_axis();
    const bool forward = d.u()[axis] > 0.0;
    std::array<int, 3> ext = dims;
    ext[axis] = 1;
    for (int k = 0; k < ext[2]; ++k) {
      for (int j = 0; j < ext[1]; ++j) {
        for (int i = 0; i < ext[0]; ++i) {
          std::array<int, 3> p{i, j, k};
          for (int t = 0; t < dims[axis]; ++t) {
            p[axis] = forward ? t : dims[axis] - 1 - t;
            const Index c = grid.cell_index(p[0], p[1], p[2]);
            if (solid[c]) break;
            reached[c] = 1;
          }
        }
      }
    }
  }
  for (std::size_t e = 0; e < cells.size(); ++e) {
    const Index c = cells[e];
    if (solid[c] || reached[c]) continue;
    ++rep.unreachable_void;
    if (rep.unreachable_cells.size() < 64) rep.unreachable_cells.push_back(c);
  }
  rep.unreachable_fraction =
      rep.void_cells == 0 ? 0.0 : static_cast<double>(rep.unreachable_void) / static_cast<double>(rep.void_cells);
  rep.machinable = rep.unreachable_fraction <= 0.005;
  return rep;
}

}  // namespace millopt
