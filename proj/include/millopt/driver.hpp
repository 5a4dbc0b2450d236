#pragma once

#include <atomic>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "millopt/aggregate.hpp"
#include "millopt/density_filter.hpp"
#include "millopt/fem.hpp"
#include "millopt/grid.hpp"
#include "millopt/mma.hpp"
#include "millopt/shadow.hpp"

namespace millopt {

struct GridSpec {
  std::vector<int> dims;
  double h = 0.01;
  Vec3 origin{};
  std::vector<Box> passive;
  friend bool operator==(const GridSpec&, const GridSpec&) = default;
};

/// E_min is multiplied by `factor` at each listed iteration.
struct ContinuationSchedule {
  std::vector<int> iterations;
  double factor = 0.1;
  friend bool operator==(const ContinuationSchedule&, const ContinuationSchedule&) = default;
};

struct RunConfig {
  GridSpec grid;
  FilterSpec filter;
  /// 2D tool angles in degrees as configured; empty when directions were given
  /// as vectors.
  std::vector<double> angles_deg;
  std::vector<ToolDirection> directions;
  double peclet = 1e4;
  double source_factor = 1.0;
  AggregateConfig aggregate;
  MaterialConfig material;
  ContinuationSchedule e_min_schedule;
  LoadCase loads;
  MmaConfig mma;
  double v_star = 0.5;
  double rho_init = 0.5;
  int max_iters = 400;
  double change_tol = 1e-3;
  /// Bypass the shadowing stage (no-milling reference design).
  bool reference = false;
  SolverPolicy solver;

  friend bool operator==(const RunConfig&, const RunConfig&) = default;
};

/// Throws ConfigError describing the first violated constraint.
void validate(const RunConfig& cfg);

struct RunOptions {
  bool deterministic = false;
  /// Worker cap; 0 reads MILLOPT_THREADS, falling back to the hardware count.
  int threads = 0;
};

int resolve_thread_count(const RunOptions& opts);

/// All intermediate fields of the milling filter for one design.
struct FieldStack {
  std::vector<double> rho;        ///< full cells, passive = 1
  std::vector<double> rho_tilde;  ///< full cells
  std::vector<std::vector<double>> shadows;  ///< design-indexed, one per direction
  std::vector<double> aggregated;            ///< design-indexed
  std::vector<double> projected;             ///< design-indexed
  std::vector<std::vector<double>> pmean_derivative;
  std::vector<double> projection_derivative;

  /// Full-cell physical density: projected on design cells, 1 on passive ones.
  std::vector<double> physical(const StructuredGrid& grid) const;
};

struct SolveCounters {
  std::atomic<long> density_forward{0};
  std::atomic<long> density_adjoint{0};
  std::atomic<long> shadow_forward{0};
  std::atomic<long> shadow_adjoint{0};
  std::atomic<long> shadow_forward_iters{0};
  std::atomic<long> shadow_adjoint_iters{0};

  long filter_solves() const noexcept {
    return density_forward + density_adjoint + shadow_forward + shadow_adjoint;
  }
};

/// Density filter, per-direction shadowing, p-mean aggregation and Heaviside
/// projection, with the reverse-mode chain. With no directions the shadowing
/// and aggregation stages are bypassed.
class MillingFilter {
 public:
  MillingFilter(const StructuredGrid& grid, const FilterSpec& filter, std::span<const ToolDirection> directions,
                const ShadowConfig& shadow, const AggregateConfig& aggregate, SolverPolicy policy = {},
                int threads = 1);
  ~MillingFilter();

  /// `design` is design-indexed with entries in [0, 1].
  FieldStack forward(std::span<const double> design) const;
  /// Maps dF/d(projected) (design-indexed) to dF/d(design).
  std::vector<double> backward(const FieldStack& fields, std::span<const double> d_projected) const;

  std::size_t num_directions() const noexcept { return shadows_.size(); }
  const ShadowOperator& shadow(std::size_t s) const { return *shadows_[s]; }
  const DensityFilter& density_filter() const noexcept { return density_; }
  SolveCounters& counters() const noexcept { return *counters_; }

 private:
  const StructuredGrid* grid_;
  DensityFilter density_;
  std::vector<std::unique_ptr<ShadowOperator>> shadows_;
  AggregateConfig aggregate_;
  int threads_ = 1;
  std::unique_ptr<SolveCounters> counters_;
};

FieldStack forward_chain(const MillingFilter& chain, std::span<const double> design);
std::vector<double> backward_chain(const MillingFilter& chain, const FieldStack& fields,
                                   std::span<const double> d_projected);

/// Everything needed to evaluate objective and constraint for one RunConfig.
class Problem {
 public:
  Problem(const RunConfig& cfg, const RunOptions& opts = {});
  ~Problem();

  struct Evaluation {
    FieldStack fields;
    StateSolution state;
    VolumeResult volume;
    std::vector<double> compliance_gradient;  ///< design-indexed
    std::vector<double> volume_gradient;      ///< design-indexed
  };

  Evaluation evaluate(std::span<const double> design, const MaterialConfig& material, bool gradients = true);
  double compliance(std::span<const double> design, const MaterialConfig& material);
  double volume_constraint(std::span<const double> design);

  const StructuredGrid& grid() const noexcept { return *grid_; }
  const MillingFilter& filter() const noexcept { return *filter_; }
  ElasticityModel& fem() noexcept { return *fem_; }
  const RunConfig& config() const noexcept { return cfg_; }
  std::span<const ToolDirection> active_directions() const noexcept;

 private:
  RunConfig cfg_;
  std::unique_ptr<StructuredGrid> grid_;
  std::unique_ptr<MillingFilter> filter_;
  std::unique_ptr<ElasticityModel> fem_;
};

struct IterationRecord {
  int iter = 0;
  double compliance = 0.0;
  double scaled_obj = 0.0;
  double volfrac = 0.0;
  double g = 0.0;
  double change = 0.0;
  int fea_iters = 0;
  long shadow_iters = 0;
  long adjoint_iters = 0;
  double wall_ms = 0.0;
  long filter_solves = 0;
  double e_min = 0.0;
};

struct OptimizationResult {
  std::vector<double> design;
  FieldStack fields;
  std::vector<IterationRecord> records;
  bool converged = false;
  std::string failure;  ///< non-empty when a stage failed; records are kept

  bool ok() const noexcept { return failure.empty(); }
};

using IterationCallback = std::function<void(const IterationRecord&, const FieldStack&)>;

/// Filter chain, state solve, adjoints, MMA step and E_min continuation until
/// max_iters or the design change drops below change_tol.
OptimizationResult optimize(const RunConfig& cfg, const RunOptions& opts = {},
                            const IterationCallback& on_iteration = {});

struct GradientCheck {
  std::vector<std::size_t> components;
  std::vector<double> compliance_analytic, compliance_fd;
  std::vector<double> volume_analytic, volume_fd;
  double max_rel_error_compliance = 0.0;
  double max_rel_error_volume = 0.0;
};

/// Central-difference check of the full-chain gradients at `design`.
/// Relative errors use max(|analytic|, 1e-6 * max|analytic|) as denominator.
GradientCheck check_gradient(Problem& problem, std::span<const double> design,
                             std::span<const std::size_t> components, double step = 1e-6);

struct MachinabilityReport {
  bool checked = false;  ///< false when any direction is oblique or none is given
  Index design_cells = 0;
  Index void_cells = 0;
  Index unreachable_void = 0;
  double unreachable_fraction = 0.0;
  double binary_fraction = 0.0;
  std::vector<int> oblique_directions;
  std::vector<Index> unreachable_cells;  ///< first few offending cell indices
  bool machinable = false;
};

/// Thresholds the projected field at `threshold`, sweeps each axis-aligned
/// direction over the binary field and counts void cells that no direction
/// reaches from outside the domain.
MachinabilityReport machinability_check(const StructuredGrid& grid, std::span<const double> projected,
                                        std::span<const ToolDirection> directions, double threshold = 0.5);

}  // namespace millopt
