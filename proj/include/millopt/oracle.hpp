#pragma once

#include <functional>
#include <span>
#include <vector>

#include "millopt/fem.hpp"
#include "millopt/grid.hpp"
#include "millopt/shadow.hpp"

namespace millopt::oracle {

/// Running-sum shadow along an axis-aligned direction: c_i = c_{i-1} + w * rho_i
/// with w = source_factor * s * h, starting from 0 at the inflow wall and
/// resetting to 1 after passive cells. Input and output are design-indexed.
/// Throws InvalidArgument for oblique directions.
std::vector<double> cumsum_shadow(const StructuredGrid& grid, const ToolDirection& direction,
                                  std::span<const double> rho_tilde, double source_scale,
                                  double source_factor = 1.0);

/// Central differences of `f` at `x` for the requested components.
std::vector<double> fd_gradient(const std::function<double(std::span<const double>)>& f,
                                std::span<const double> x, double step, std::span<const std::size_t> components);

/// Compliance by dense assembly and dense Cholesky; for grids up to a few
/// hundred elements.
double dense_compliance(const StructuredGrid& grid, const LoadCase& loads, std::span<const double> physical,
                        const MaterialConfig& m);

/// Helmholtz density filter by dense solve of the cell-centred system.
std::vector<double> dense_helmholtz_filter(const StructuredGrid& grid, double r_min, std::span<const double> rho);

}  // namespace millopt::oracle
