#include <cmath>

#include "doctest.h"
#include "millopt/errors.hpp"
#include "support.hpp"

using namespace millopt;
using millopt::testing::grid2;
using millopt::testing::grid3;

TEST_CASE("two-cell grid counts faces") {
  const auto g = grid2(2, 1, 0.01);
  CHECK(g.num_cells() == 2);
  CHECK(g.faces().size() == 7);
  int interior = 0;
  for (const auto& f : g.faces()) interior += f.is_boundary() ? 0 : 1;
  CHECK(interior == 1);
  CHECK(g.cell_volume() == doctest::Approx(1e-4));
}

TEST_CASE("cantilever grid spans a 2 by 1 domain") {
  const auto g = grid2(200, 100, 0.01);
  const auto len = g.domain_lengths();
  CHECK(len[0] == doctest::Approx(2.0));
  CHECK(len[1] == doctest::Approx(1.0));
  CHECK(g.num_design() == 20000);
}

TEST_CASE("fully passive grid is rejected") {
  CHECK_THROWS_WITH_AS(grid2(1, 1, 1.0, {Box{{0, 0, 0}, {1, 1, 0}}}), "no design elements", InvalidArgument);
}

TEST_CASE("invalid dims, spacing and boxes") {
  CHECK_THROWS_AS(grid2(0, 3), InvalidArgument);
  CHECK_THROWS_AS(grid2(3, -1), InvalidArgument);
  CHECK_THROWS_AS(grid2(3, 3, 0.0), InvalidArgument);
  CHECK_THROWS_AS(grid2(3, 3, 1.0, {Box{{2, 2, 0}, {5, 5, 0}}}), InvalidArgument);
}

TEST_CASE("face geometry") {
  for (const auto& g : {grid2(4, 3, 0.5), grid3(3, 2, 2, 0.5)}) {
    const double area = std::pow(g.h(), g.dim() - 1);
    for (const auto& f : g.faces()) {
      double a2 = 0.0, d2 = 0.0;
      for (int k = 0; k < 3; ++k) {
        a2 += f.area_vector[k] * f.area_vector[k];
        d2 += f.centroid_offset[k] * f.centroid_offset[k];
      }
      CHECK(std::sqrt(a2) == doctest::Approx(area));
      if (!f.is_boundary()) CHECK(std::sqrt(d2) == doctest::Approx(g.h()));
      if (f.is_boundary()) CHECK(std::sqrt(d2) == doctest::Approx(g.h() / 2));
    }
  }
}

TEST_CASE("control volumes are closed") {
  const auto g = grid3(3, 4, 2, 0.25);
  std::vector<Vec3> sum(g.num_cells(), Vec3{});
  for (const auto& f : g.faces()) {
    for (int k = 0; k < 3; ++k) {
      sum[f.owner][k] += f.area_vector[k];
      if (!f.is_boundary()) sum[f.neighbor][k] -= f.area_vector[k];
    }
  }
  for (const auto& s : sum) {
    for (double v : s) CHECK(std::abs(v) < 1e-15);
  }
}

TEST_CASE("face enumeration is deterministic") {
  const auto a = grid2(5, 4, 0.1, {Box{{0, 0, 0}, {0.2, 0.2, 0}}});
  const auto b = grid2(5, 4, 0.1, {Box{{0, 0, 0}, {0.2, 0.2, 0}}});
  REQUIRE(a.faces().size() == b.faces().size());
  for (std::size_t i = 0; i < a.faces().size(); ++i) {
    CHECK(a.faces()[i].owner == b.faces()[i].owner);
    CHECK(a.faces()[i].neighbor == b.faces()[i].neighbor);
  }
}

TEST_CASE("boundary classification without passive cells is all Robin") {
  const auto g = grid2(6, 3);
  const auto bf = classify_boundary_faces(g);
  CHECK(bf.size() == 2 * (6 + 3));
  for (const auto& b : bf) CHECK(b.kind == BoundaryKind::Robin);
}

TEST_CASE("single cell has 2 dim Robin faces") {
  CHECK(classify_boundary_faces(grid2(1, 1)).size() == 4);
  const auto bf = classify_boundary_faces(grid3(1, 1, 1));
  CHECK(bf.size() == 6);
  for (const auto& b : bf) CHECK(b.kind == BoundaryKind::Robin);
}

TEST_CASE("passive corner block gets Dirichlet interfaces") {
  // 4x4 unit cells with a 2x2 passive block at the lower-left corner.
  const auto g = grid2(4, 4, 1.0, {Box{{0, 0, 0}, {2, 2, 0}}});
  CHECK(g.num_design() == 12);
  int dirichlet_design = 0, robin = 0;
  for (const auto& b : classify_boundary_faces(g)) {
    if (b.kind == BoundaryKind::Robin) {
      ++robin;
      CHECK(!g.is_passive(b.design_cell));
    } else if (b.design_cell != kBoundary) {
      ++dirichlet_design;
      CHECK(!g.is_passive(b.design_cell));
      CHECK(g.is_passive(g.neighbor(b.design_cell, b.axis, b.side)));
    }
  }
  // Design-facing faces of the block: two on its right, two on its top.
  CHECK(dirichlet_design == 4);
  // Domain boundary minus the four faces owned by passive cells.
  CHECK(robin == 16 - 4);
}

TEST_CASE("node numbering and element connectivity") {
  const auto g = grid2(3, 2, 0.5);
  CHECK(g.num_nodes() == 12);
  const auto n = g.cell_nodes(g.cell_index(1, 1));
  REQUIRE(n.size() == 4);
  CHECK(n[0] == g.node_index(1, 1));
  CHECK(n[1] == g.node_index(2, 1));
  CHECK(n[2] == g.node_index(2, 2));
  CHECK(n[3] == g.node_index(1, 2));
  const auto g3 = grid3(2, 2, 2);
  CHECK(g3.cell_nodes(0).size() == 8);
}
