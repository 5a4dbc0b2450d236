#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "millopt/driver.hpp"
#include "millopt/grid.hpp"

namespace millopt {

/// Legacy VTK ASCII STRUCTURED_POINTS body with one CELL_DATA scalar array.
/// Values use 9 significant digits. `field` covers every cell.
std::string field_vtk_text(std::span<const double> field, const StructuredGrid& grid, const std::string& name);
void write_field_vtk(std::span<const double> field, const StructuredGrid& grid, const std::string& name,
                     const std::filesystem::path& path);
/// Same values, one row per grid line along x (row-major, x fastest).
void write_field_csv(std::span<const double> field, const StructuredGrid& grid, const std::filesystem::path& path);

/// Design-indexed field spread to all cells, `fill` on passive ones.
std::vector<double> expand_design_field(std::span<const double> design, const StructuredGrid& grid,
                                        double fill = 1.0);

/// Writes rho, rho_tilde, shadow_s<k>, aggregated and projected as
/// `<prefix><name>.vtk` (plus `.csv` if requested) into `dir`.
void write_field_stack(const FieldStack& fields, const StructuredGrid& grid, const std::filesystem::path& dir,
                       const std::string& prefix = "", bool csv_sidecar = false);

inline constexpr const char* kIterationLogHeader =
    "iter,compliance,scaled_obj,volfrac,g,change,fea_iters,shadow_iters,adjoint_iters,wall_ms";

std::string iteration_log_text(std::span<const IterationRecord> records);
void write_iteration_log(std::span<const IterationRecord> records, const std::filesystem::path& path);

std::string machinability_json(const MachinabilityReport& report, const StructuredGrid& grid);
void write_text_file(const std::filesystem::path& path, const std::string& text);

}  // namespace millopt
