#include "millopt/grid.hpp"

#include <cmath>
#include <string>

#include "millopt/errors.hpp"

namespace millopt {

StructuredGrid StructuredGrid::build(std::span<const int> dims, double h, Vec3 origin,
                                     std::span<const Box> passive_regions) {
  if (dims.size() != 2 && dims.size() != 3) {
    throw InvalidArgument("grid needs 2 or 3 dimensions, got " + std::to_string(dims.size()));
  }
  for (int d : dims) {
    if (d < 1) throw InvalidArgument("grid dimensions must be >= 1");
  }
  if (!(h > 0.0) || !std::isfinite(h)) throw InvalidArgument("grid spacing h must be positive");

  StructuredGrid g;
  g.dim_ = static_cast<int>(dims.size());
  for (int a = 0; a < g.dim_; ++a) g.dims_[a] = dims[a];
  g.h_ = h;
  g.origin_ = origin;
  g.cell_volume_ = std::pow(h, g.dim_);
  g.face_area_ = std::pow(h, g.dim_ - 1);
  g.num_cells_ = static_cast<Index>(g.dims_[0]) * g.dims_[1] * g.dims_[2];

  const Vec3 len = g.domain_lengths();
  const double tol = 1e-9 * h;
  for (const Box& b : passive_regions) {
    for (int a = 0; a < g.dim_; ++a) {
      if (b.lo[a] > b.hi[a] || b.lo[a] < origin[a] - tol || b.hi[a] > origin[a] + len[a] + tol) {
        throw InvalidArgument("passive box lies outside the domain");
      }
    }
  }

  g.passive_.assign(g.num_cells_, 0);
  g.design_slot_.assign(g.num_cells_, -1);
  for (Index c = 0; c < g.num_cells_; ++c) {
    const Vec3 x = g.centroid(c);
    for (const Box& b : passive_regions) {
      bool inside = true;
      for (int a = 0; a < g.dim_; ++a) inside = inside && x[a] >= b.lo[a] && x[a] <= b.hi[a];
      if (inside) {
        g.passive_[c] = 1;
        break;
      }
    }
    if (!g.passive_[c]) {
      g.design_slot_[c] = static_cast<Index>(g.design_cells_.size());
      g.design_cells_.push_back(c);
    }
  }
  if (g.design_cells_.empty()) throw InvalidArgument("no design elements");

  // Faces normal to x, then y, then z; each family ordered lexicographically.
  for (int axis = 0; axis < g.dim_; ++axis) {
    std::array<int, 3> ext = g.dims_;
    ext[axis] += 1;
    for (int k = 0; k < ext[2]; ++k) {
      for (int j = 0; j < ext[1]; ++j) {
        for (int i = 0; i < ext[0]; ++i) {
          const std::array<int, 3> p{i, j, k};
          const int pos = p[axis];
          std::array<int, 3> lo = p;
          lo[axis] -= 1;
          Face f;
          f.axis = axis;
          if (pos == 0) {
            f.owner = g.cell_index(p[0], p[1], p[2]);
            f.neighbor = kBoundary;
            f.area_vector[axis] = -g.face_area_;
            f.centroid_offset[axis] = -0.5 * h;
          } else if (pos == g.dims_[axis]) {
            f.owner = g.cell_index(lo[0], lo[1], lo[2]);
            f.neighbor = kBoundary;
            f.area_vector[axis] = g.face_area_;
            f.centroid_offset[axis] = 0.5 * h;
          } else {
            f.owner = g.cell_index(lo[0], lo[1], lo[2]);
            f.neighbor = g.cell_index(p[0], p[1], p[2]);
            f.area_vector[axis] = g.face_area_;
            f.centroid_offset[axis] = h;
          }
          g.faces_.push_back(f);
        }
      }
    }
  }
  return g;
}

Vec3 StructuredGrid::domain_lengths() const noexcept {
  Vec3 l{};
  for (int a = 0; a < dim_; ++a) l[a] = dims_[a] * h_;
  return l;
}

std::array<int, 3> StructuredGrid::cell_coords(Index cell) const noexcept {
  const Index nx = dims_[0], ny = dims_[1];
  return {static_cast<int>(cell % nx), static_cast<int>((cell / nx) % ny),
          static_cast<int>(cell / (nx * ny))};
}

Vec3 StructuredGrid::centroid(Index cell) const noexcept {
  const auto ijk = cell_coords(cell);
  Vec3 x{};
  for (int a = 0; a < dim_; ++a) x[a] = origin_[a] + (ijk[a] + 0.5) * h_;
  return x;
}

Index StructuredGrid::neighbor(Index cell, int axis, int side) const noexcept {
  auto ijk = cell_coords(cell);
  ijk[axis] += side;
  if (ijk[axis] < 0 || ijk[axis] >= dims_[axis]) return kBoundary;
  return cell_index(ijk[0], ijk[1], ijk[2]);
}

Index StructuredGrid::num_nodes() const noexcept {
  Index n = 1;
  for (int a = 0; a < dim_; ++a) n *= dims_[a] + 1;
  return n;
}

Vec3 StructuredGrid::node_position(Index node) const noexcept {
  const Index nx = dims_[0] + 1, ny = dims_[1] + 1;
  const Index ijk[3] = {node % nx, (node / nx) % ny, node / (nx * ny)};
  Vec3 x{};
  for (int a = 0; a < dim_; ++a) x[a] = origin_[a] + ijk[a] * h_;
  return x;
}

std::vector<Index> StructuredGrid::cell_nodes(Index cell) const {
  const auto [i, j, k] = cell_coords(cell);
  if (dim_ == 2) {
    return {node_index(i, j), node_index(i + 1, j), node_index(i + 1, j + 1), node_index(i, j + 1)};
  }
  return {node_index(i, j, k),         node_index(i + 1, j, k),
          node_index(i + 1, j + 1, k), node_index(i, j + 1, k),
          node_index(i, j, k + 1),     node_index(i + 1, j, k + 1),
          node_index(i + 1, j + 1, k + 1), node_index(i, j + 1, k + 1)};
}

std::vector<BoundaryFace> classify_boundary_faces(const StructuredGrid& grid) {
  std::vector<BoundaryFace> out;
  const auto& faces = grid.faces();
  for (Index fi = 0; fi < static_cast<Index>(faces.size()); ++fi) {
    const Face& f = faces[fi];
    const int outward = f.area_vector[f.axis] > 0 ? 1 : -1;
    if (f.is_boundary()) {
      BoundaryFace b{fi, kBoundary, outward, f.axis, BoundaryKind::Robin};
      if (grid.is_passive(f.owner)) {
        b.kind = BoundaryKind::DirichletSolid;
      } else {
        b.design_cell = f.owner;
      }
      out.push_back(b);
      continue;
    }
    const bool owner_passive = grid.is_passive(f.owner);
    const bool neighbor_passive = grid.is_passive(f.neighbor);
    if (owner_passive == neighbor_passive) continue;
    // Interface between design and passive material.
    if (owner_passive) {
      out.push_back({fi, f.neighbor, -1, f.axis, BoundaryKind::DirichletSolid});
    } else {
      out.push_back({fi, f.owner, +1, f.axis, BoundaryKind::DirichletSolid});
    }
  }
  return out;
}

}  // namespace millopt
