#pragma once

#include <memory>
#include <span>
#include <vector>

#include "millopt/grid.hpp"
#include "millopt/linear_solver.hpp"

namespace millopt {

enum class FilterKind { Convolution, PdeHelmholtz };

struct FilterSpec {
  FilterKind kind = FilterKind::Convolution;
  double r_min = 0.03;  ///< radius in domain units
  friend bool operator==(const FilterSpec&, const FilterSpec&) = default;
};

/// Linear density filter F acting on a full cell field (passive cells
/// included). Convolution uses normalized hat weights max(0, r_min - dist),
/// truncated and renormalized at the boundary. The PDE variant solves
/// (-r^2 lap + 1) x = rho with r = r_min / (2 sqrt 3) and zero-flux walls; its
/// Cholesky factor is built once.
class DensityFilter {
 public:
  DensityFilter(const StructuredGrid& grid, FilterSpec spec, SolverPolicy policy = {});
  ~DensityFilter();
  DensityFilter(DensityFilter&&) noexcept;
  DensityFilter& operator=(DensityFilter&&) noexcept;

  const FilterSpec& spec() const noexcept { return spec_; }

  std::vector<double> apply(std::span<const double> rho) const;
  /// F^T g.
  std::vector<double> apply_adjoint(std::span<const double> g) const;

 private:
  FilterSpec spec_;
  Index n_ = 0;
  SparseMatrix weights_;  // convolution: row-normalized F
  std::unique_ptr<SpdSolver> pde_;
};

std::vector<double> apply_density_filter(const FilterSpec& spec, const StructuredGrid& grid,
                                         std::span<const double> rho);
std::vector<double> density_filter_adjoint(const FilterSpec& spec, const StructuredGrid& grid,
                                           std::span<const double> g);

}  // namespace millopt
