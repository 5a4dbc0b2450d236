#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

namespace millopt {

using Index = std::int64_t;
using Vec3 = std::array<double, 3>;

/// Marker used in place of a neighbour index on the domain boundary.
inline constexpr Index kBoundary = -1;

/// Axis-aligned box in domain coordinates.
struct Box {
  Vec3 lo{};
  Vec3 hi{};
  friend bool operator==(const Box&, const Box&) = default;
};

/// A cell face. `area_vector` points from the owner towards the neighbour
/// (outward for boundary faces) and has magnitude h^(dim-1). `centroid_offset`
/// is owner-centroid to neighbour-centroid, or to the face centroid on the
/// boundary.
struct Face {
  Index owner = 0;
  Index neighbor = kBoundary;
  int axis = 0;
  Vec3 area_vector{};
  Vec3 centroid_offset{};

  bool is_boundary() const noexcept { return neighbor == kBoundary; }
};

enum class BoundaryKind { Robin, DirichletSolid };

/// A face on the boundary of the design sub-domain.
struct BoundaryFace {
  Index face = 0;
  /// Design cell that owns this boundary of the shadow domain, or kBoundary if
  /// the face only touches passive material.
  Index design_cell = kBoundary;
  /// Outward normal sign along `axis`, seen from `design_cell`.
  int side = 0;
  int axis = 0;
  BoundaryKind kind = BoundaryKind::Robin;
};

/// Uniform axis-aligned quad (2D) or hex (3D) grid. Cells are numbered
/// lexicographically with x fastest. Immutable after construction.
class StructuredGrid {
 public:
  /// Throws InvalidArgument for non-positive dims or h, boxes outside the
  /// domain, or when every cell ends up passive.
  static StructuredGrid build(std::span<const int> dims, double h, Vec3 origin = {},
                              std::span<const Box> passive_regions = {});

  int dim() const noexcept { return dim_; }
  /// Element counts; unused axes report 1.
  const std::array<int, 3>& dims() const noexcept { return dims_; }
  double h() const noexcept { return h_; }
  const Vec3& origin() const noexcept { return origin_; }
  Vec3 domain_lengths() const noexcept;
  double cell_volume() const noexcept { return cell_volume_; }
  double face_area() const noexcept { return face_area_; }

  Index num_cells() const noexcept { return num_cells_; }
  Index cell_index(int i, int j, int k = 0) const noexcept {
    return i + static_cast<Index>(dims_[0]) * (j + static_cast<Index>(dims_[1]) * k);
  }
  std::array<int, 3> cell_coords(Index cell) const noexcept;
  Vec3 centroid(Index cell) const noexcept;
  /// Face-neighbour across `axis` on `side` (+1/-1), or kBoundary.
  Index neighbor(Index cell, int axis, int side) const noexcept;

  const std::vector<Face>& faces() const noexcept { return faces_; }

  const std::vector<std::uint8_t>& passive_mask() const noexcept { return passive_; }
  bool is_passive(Index cell) const noexcept { return passive_[cell] != 0; }
  /// Cell indices of the design (non-passive) cells, ascending.
  const std::vector<Index>& design_cells() const noexcept { return design_cells_; }
  /// Position of `cell` in design_cells(), or -1 for passive cells.
  Index design_slot(Index cell) const noexcept { return design_slot_[cell]; }
  Index num_design() const noexcept { return static_cast<Index>(design_cells_.size()); }

  Index num_nodes() const noexcept;
  Index node_index(int i, int j, int k = 0) const noexcept {
    return i + static_cast<Index>(dims_[0] + 1) * (j + static_cast<Index>(dims_[1] + 1) * k);
  }
  Vec3 node_position(Index node) const noexcept;
  /// Corner nodes of a cell in the element ordering used by the FE module
  /// (counter-clockwise bottom layer, then top layer in 3D).
  std::vector<Index> cell_nodes(Index cell) const;

 private:
  int dim_ = 2;
  std::array<int, 3> dims_{1, 1, 1};
  double h_ = 1.0;
  Vec3 origin_{};
  double cell_volume_ = 1.0;
  double face_area_ = 1.0;
  Index num_cells_ = 0;
  std::vector<Face> faces_;
  std::vector<std::uint8_t> passive_;
  std::vector<Index> design_cells_;
  std::vector<Index> design_slot_;
};

/// Boundary faces of the design sub-domain: domain-boundary faces of design
/// cells are Robin; faces touching passive solid are DirichletSolid.
std::vector<BoundaryFace> classify_boundary_faces(const StructuredGrid& grid);

}  // namespace millopt
