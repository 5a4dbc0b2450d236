#include "millopt/output.hpp"

#include <cstdio>
#include <fstream>
#include "json.hpp"

#include "millopt/errors.hpp"

namespace millopt {

namespace {

std::string g9(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

std::string g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void check_length(std::span<const double> field, const StructuredGrid& grid) {
  if (static_cast<Index>(field.size()) != grid.num_cells()) {
    throw InvalidArgument("field length " + std::to_string(field.size()) + " does not match " +
                          std::to_string(grid.num_cells()) + " cells");
  }
}

}  // namespace

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << text;
  out.flush();
  if (!out) throw IoError("write failed for " + path.string());
}

std::string field_vtk_text(std::span<const double> field, const StructuredGrid& grid, const std::string& name) {
  check_length(field, grid);
  const auto& d = grid.dims();
  const auto& o = grid.origin();
  const bool three = grid.dim() == 3;
  std::string s;
  s.reserve(field.size() * 12 + 256);
  s += "# vtk DataFile Version 3.0\nmillopt " + name + "\nASCII\nDATASET STRUCTURED_POINTS\n";
  s += "DIMENSIONS " + std::to_string(d[0] + 1) + " " + std::to_string(d[1] + 1) + " " +
       std::to_string(three ? d[2] + 1 : 1) + "\n";
  s += "ORIGIN " + g9(o[0]) + " " + g9(o[1]) + " " + g9(three ? o[2] : 0.0) + "\n";
  s += "SPACING " + g9(grid.h()) + " " + g9(grid.h()) + " " + g9(grid.h()) + "\n";
  s += "CELL_DATA " + std::to_string(field.size()) + "\n";
  s += "SCALARS " + name + " double 1\nLOOKUP_TABLE default\n";
  for (double v : field) {
    s += g9(v);
    s += '\n';
  }
  return s;
}

void write_field_vtk(std::span<const double> field, const StructuredGrid& grid, const std::string& name,
                     const std::filesystem::path& path) {
  write_text_file(path, field_vtk_text(field, grid, name));
}

void write_field_csv(std::span<const double> field, const StructuredGrid& grid, const std::filesystem::path& path) {
  check_length(field, grid);
  const int nx = grid.dims()[0];
  std::string s;
  for (std::size_t i = 0; i < field.size(); ++i) {
    s += g9(field[i]);
    s += (static_cast<int>(i % nx) == nx - 1) ? '\n' : ',';
  }
  write_text_file(path, s);
}

std::vector<double> expand_design_field(std::span<const double> design, const StructuredGrid& grid, double fill) {
  const auto& cells = grid.design_cells();
  if (design.size() != cells.size()) throw InvalidArgument("design field has wrong length");
  std::vector<double> out(grid.num_cells(), fill);
  for (std::size_t e = 0; e < cells.size(); ++e) out[cells[e]] = design[e];
  return out;
}

void write_field_stack(const FieldStack& f, const StructuredGrid& grid, const std::filesystem::path& dir,
                       const std::string& prefix, bool csv_sidecar) {
  auto emit = [&](const std::vector<double>& full, const std::string& name) {
    write_field_vtk(full, grid, name, dir / (prefix + name + ".vtk"));
    if (csv_sidecar) write_field_csv(full, grid, dir / (prefix + name + ".csv"));
  };
  emit(f.rho, "rho");
  emit(f.rho_tilde, "rho_tilde");
  for (std::size_t s = 0; s < f.shadows.size(); ++s) {
    emit(expand_design_field(f.shadows[s], grid), "shadow_s" + std::to_string(s));
  }
  emit(expand_design_field(f.aggregated, grid), "aggregated");
  emit(expand_design_field(f.projected, grid), "projected");
}

std::string iteration_log_text(std::span<const IterationRecord> records) {
  std::string s = kIterationLogHeader;
  s += '\n';
  for (const auto& r : records) {
    s += std::to_string(r.iter) + "," + g17(r.compliance) + "," + g17(r.scaled_obj) + "," + g17(r.volfrac) + "," +
         g17(r.g) + "," + g17(r.change) + "," + std::to_string(r.fea_iters) + "," + std::to_string(r.shadow_iters) +
         "," + std::to_string(r.adjoint_iters) + "," + g9(r.wall_ms) + "\n";
  }
  return s;
}

void write_iteration_log(std::span<const IterationRecord> records, const std::filesystem::path& path) {
  if (records.empty()) throw InvalidArgument("iteration log needs at least one record");
  write_text_file(path, iteration_log_text(records));
}

std::string machinability_json(const MachinabilityReport& r, const StructuredGrid& grid) {
  nlohmann::ordered_json j;
  j["checked"] = r.checked;
  j["machinable"] = r.machinable;
  j["threshold_unreachable_fraction"] = 0.005;
  j["design_cells"] = r.design_cells;
  j["void_cells"] = r.void_cells;
  j["unreachable_void"] = r.unreachable_void;
  j["unreachable_fraction"] = r.unreachable_fraction;
  j["binary_fraction"] = r.binary_fraction;
  j["oblique_directions"] = r.oblique_directions;
  auto cells = nlohmann::ordered_json::array();
  for (Index c : r.unreachable_cells) {
    const auto ijk = grid.cell_coords(c);
    auto idx = nlohmann::ordered_json::array({ijk[0], ijk[1]});
    if (grid.dim() == 3) idx.push_back(ijk[2]);
    cells.push_back(idx);
  }
  j["unreachable_examples"] = cells;
  if (!r.checked) {
    j["note"] = r.oblique_directions.empty() ? "no tool directions configured"
                                             : "oblique directions present; sweep check unsupported";
  }
  return j.dump(2) + "\n";
}

}  // namespace millopt
