#include <Eigen/Eigenvalues>
#include <cmath>

#include "doctest.h"
#include "millopt/errors.hpp"
#include "millopt/fem.hpp"
#include "millopt/oracle.hpp"
#include "support.hpp"

using namespace millopt;
using namespace millopt::testing;

namespace {

LoadCase cantilever_loads(int dim) {
  LoadCase lc;
  lc.supports.push_back({"xmin"});
  lc.loads.push_back({{"xmax,ymin"}, dim == 2 ? Vec3{0, -1, 0} : Vec3{0, -1, 0}});
  return lc;
}

}  // namespace

TEST_CASE("SIMP interpolation") {
  MaterialConfig m{1.0, 1e-9, 0.3, 3.0};
  CHECK(simp_modulus(0.0, m) == 1e-9);
  CHECK(simp_modulus(1.0, m) == 1.0);
  CHECK(simp_modulus(0.5, m) == doctest::Approx(0.125).epsilon(1e-8));
  m.simp_p = 5.0;
  CHECK(simp_modulus(0.5, m) == doctest::Approx(1e-9 + 0.03125 * (1.0 - 1e-9)));
  double prev = 0.0;
  for (double r = 0.0; r <= 1.0; r += 0.05) {
    CHECK(simp_modulus(r, m) >= prev);
    prev = simp_modulus(r, m);
    CHECK(simp_modulus_derivative(r, m) ==
          doctest::Approx((simp_modulus(r + 1e-7, m) - simp_modulus(r - 1e-7, m)) / 2e-7).epsilon(1e-5));
  }
}

TEST_CASE("quad stiffness equals the closed-form bilinear element") {
  const double nu = 0.3;
  const double k[8] = {0.5 - nu / 6,       0.125 + nu / 8, -0.25 - nu / 12, -0.125 + 3 * nu / 8,
                       -0.25 + nu / 12,    -0.125 - nu / 8, nu / 6,          0.125 - 3 * nu / 8};
  const int idx[8][8] = {{0, 1, 2, 3, 4, 5, 6, 7}, {1, 0, 7, 6, 5, 4, 3, 2}, {2, 7, 0, 5, 6, 3, 4, 1},
                         {3, 6, 5, 0, 7, 2, 1, 4}, {4, 5, 6, 7, 0, 1, 2, 3}, {5, 4, 3, 2, 1, 0, 7, 6},
                         {6, 3, 4, 1, 2, 7, 0, 5}, {7, 2, 1, 4, 3, 6, 5, 0}};
  for (double h : {1.0, 0.01}) {
    const auto ke = element_stiffness(2, h, nu);
    for (int i = 0; i < 8; ++i) {
      for (int j = 0; j < 8; ++j) CHECK(ke(i, j) == doctest::Approx(k[idx[i][j]] / (1 - nu * nu)).epsilon(1e-12));
    }
  }
}

TEST_CASE("element stiffness is symmetric with rigid-body null space") {
  for (int dim : {2, 3}) {
    const auto ke = element_stiffness(dim, 0.5, 0.3);
    CHECK((ke - ke.transpose()).cwiseAbs().maxCoeff() < 1e-14);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(ke);
    const auto& ev = es.eigenvalues();
    const int rigid = dim == 2 ? 3 : 6;
    for (int i = 0; i < ev.size(); ++i) {
      if (i < rigid) {
        CHECK(std::abs(ev(i)) < 1e-12 * ev(ev.size() - 1));
      } else {
        CHECK(ev(i) > 1e-6 * ev(ev.size() - 1));
      }
    }
  }
}

TEST_CASE("single solid element matches the dense oracle") {
  const auto g = grid2(1, 1, 1.0);
  const auto lc = cantilever_loads(2);
  const MaterialConfig m{1.0, 1e-9, 0.3, 3.0};
  ElasticityModel model(g, lc, m.nu);
  const std::vector<double> phys{1.0};
  const auto st = model.solve(phys, m);
  CHECK(st.compliance > 0.0);
  CHECK(st.compliance == doctest::Approx(oracle::dense_compliance(g, lc, phys, m)).epsilon(1e-10));
}

TEST_CASE("sparse and dense compliance agree on small 2D and 3D grids") {
  const MaterialConfig m{1.0, 1e-3, 0.3, 3.0};
  for (const auto& g : {grid2(10, 6, 0.1, {Box{{0.8, 0.4, 0}, {1.0, 0.6, 0}}}), grid3(4, 3, 3, 0.25)}) {
    const auto lc = cantilever_loads(g.dim());
    const auto phys0 = random_vector(g.num_cells(), 2, 0.0, 1.0);
    std::vector<double> phys(phys0);
    for (Index c = 0; c < g.num_cells(); ++c) {
      if (g.is_passive(c)) phys[c] = 1.0;
    }
    ElasticityModel model(g, lc, m.nu);
    const double c = model.solve(phys, m).compliance;
    CHECK(c == doctest::Approx(oracle::dense_compliance(g, lc, phys, m)).epsilon(1e-8));
  }
}

TEST_CASE("scaling both moduli by two halves the compliance") {
  const auto g = grid2(8, 4, 0.25);
  const auto lc = cantilever_loads(2);
  const auto phys = random_vector(g.num_cells(), 1, 0.0, 1.0);
  MaterialConfig m{1.0, 1e-4, 0.3, 3.0};
  ElasticityModel model(g, lc, m.nu);
  const double c1 = model.solve(phys, m).compliance;
  m.e_max *= 2.0;
  m.e_min *= 2.0;
  const double c2 = model.solve(phys, m).compliance;
  CHECK(c2 == doctest::Approx(0.5 * c1).epsilon(1e-12));
}

TEST_CASE("compliance sensitivity is non-positive and matches finite differences") {
  const auto g = grid2(6, 4, 0.5);
  const auto lc = cantilever_loads(2);
  const MaterialConfig m{1.0, 1e-3, 0.3, 3.0};
  ElasticityModel model(g, lc, m.nu);
  auto phys = random_vector(g.num_cells(), 3, 0.2, 1.0);
  const auto st = model.solve(phys, m);
  const auto sens = model.compliance_sensitivity(st, phys, m);
  for (double s : sens) CHECK(s <= 0.0);
  for (Index e = 0; e < g.num_cells(); ++e) {
    const double x0 = phys[e];
    phys[e] = x0 + 1e-6;
    const double cp = model.solve(phys, m).compliance;
    phys[e] = x0 - 1e-6;
    const double cm = model.solve(phys, m).compliance;
    phys[e] = x0;
    CHECK(std::abs((cp - cm) / 2e-6 - sens[e]) <= 1e-5 * std::abs(sens[e]));
  }
}

TEST_CASE("void elements have vanishing sensitivity") {
  const auto g = grid2(8, 4, 0.5);
  const MaterialConfig m{1.0, 1e-9, 0.3, 3.0};
  ElasticityModel model(g, cantilever_loads(2), m.nu);
  std::vector<double> phys(g.num_cells(), 1.0);
  phys[g.cell_index(0, 3)] = 0.0;
  const auto st = model.solve(phys, m);
  const auto sens = model.compliance_sensitivity(st, phys, m);
  double mx = 0.0;
  for (double s : sens) mx = std::max(mx, std::abs(s));
  CHECK(std::abs(sens[g.cell_index(0, 3)]) <= 1e-12 * mx);
}

TEST_CASE("adding material never increases compliance") {
  const auto g = grid2(8, 5, 0.2);
  const MaterialConfig m{1.0, 1e-3, 0.3, 3.0};
  ElasticityModel model(g, cantilever_loads(2), m.nu);
  auto phys = random_vector(g.num_cells(), 8, 0.0, 0.9);
  const double c0 = model.solve(phys, m).compliance;
  std::mt19937 rng(4);
  for (int trial = 0; trial < 20; ++trial) {
    const Index e = static_cast<Index>(rng() % g.num_cells());
    auto bumped = phys;
    bumped[e] += 0.1;
    CHECK(model.solve(bumped, m).compliance <= c0 * (1.0 + 1e-12));
  }
}

TEST_CASE("passive cells enter at full stiffness") {
  const auto g = grid2(6, 4, 0.25, {Box{{1.0, 0.0, 0}, {1.5, 0.5, 0}}});
  const MaterialConfig m{1.0, 1e-3, 0.3, 3.0};
  ElasticityModel model(g, cantilever_loads(2), m.nu);
  std::vector<double> phys(g.num_cells(), 0.5);
  const double c1 = model.solve(phys, m).compliance;
  for (Index c = 0; c < g.num_cells(); ++c) {
    if (g.is_passive(c)) phys[c] = 1.0;
  }
  CHECK(model.solve(phys, m).compliance == doctest::Approx(c1).epsilon(1e-14));
  const auto sens = model.compliance_sensitivity(model.solve(phys, m), phys, m);
  for (Index c = 0; c < g.num_cells(); ++c) {
    if (g.is_passive(c)) CHECK(sens[c] == 0.0);
  }
}

TEST_CASE("conjugate gradients agree with the direct path") {
  const auto g = grid2(30, 15, 0.1);
  const MaterialConfig m{1.0, 1e-3, 0.3, 3.0};
  const auto phys = random_vector(g.num_cells(), 6, 0.2, 1.0);
  SolverPolicy it;
  it.kind = SolverKind::Iterative;
  it.rel_tol = 1e-10;
  ElasticityModel direct(g, cantilever_loads(2), m.nu);
  ElasticityModel iterative(g, cantilever_loads(2), m.nu, it);
  const auto sd = direct.solve(phys, m);
  const auto si = iterative.solve(phys, m);
  CHECK(si.residual <= 1e-8);
  CHECK(si.iterations > 0);
  CHECK(si.compliance == doctest::Approx(sd.compliance).epsilon(1e-7));
}

TEST_CASE("volume constraint and gradient") {
  const auto g = grid2(5, 4, 0.1);
  const std::vector<double> at_target(g.num_design(), 0.5);
  auto v = volume_and_sensitivity(at_target, g, 0.5);
  CHECK(v.g == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(v.fraction == doctest::Approx(0.5));
  const std::vector<double> full(g.num_design(), 1.0);
  v = volume_and_sensitivity(full, g, 0.5);
  CHECK(v.g == doctest::Approx(1.0));
  for (double d : v.gradient) CHECK(d == doctest::Approx(1.0 / (0.5 * g.num_design())));
  CHECK_THROWS_AS(volume_and_sensitivity(full, g, 0.0), InvalidArgument);
}

TEST_CASE("node selectors") {
  const auto g = grid2(4, 2, 0.5);
  CHECK(select_nodes(g, {"xmin"}).size() == 3);
  const auto corner = select_nodes(g, {"xmax,ymin"});
  REQUIRE(corner.size() == 1);
  CHECK(corner[0] == g.node_index(4, 0));
  CHECK(select_nodes(g, {"x=1.0"}).size() == 3);
  CHECK(select_nodes(g, {"x=1.0, y=0.5"}).size() == 1);
  CHECK_THROWS_AS(select_nodes(g, {"x=0.3"}), InvalidArgument);
  CHECK_THROWS_AS(select_nodes(g, {"zmax"}), InvalidArgument);
  CHECK_THROWS_AS(select_nodes(g, {"left"}), InvalidArgument);
}

TEST_CASE("load cases without supports or loads are rejected") {
  const auto g = grid2(3, 3);
  LoadCase none;
  none.loads.push_back({{"xmax"}, {0, -1, 0}});
  CHECK_THROWS_AS(ElasticityModel(g, none, 0.3), InvalidArgument);
  LoadCase unloaded;
  unloaded.supports.push_back({"xmin"});
  CHECK_THROWS_AS(ElasticityModel(g, unloaded, 0.3), InvalidArgument);
  CHECK_THROWS_AS(validate(MaterialConfig{1.0, 2.0, 0.3, 3.0}), InvalidArgument);
  CHECK_THROWS_AS(validate(MaterialConfig{1.0, 1e-9, 0.5, 3.0}), InvalidArgument);
}
