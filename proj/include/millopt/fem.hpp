#pragma once

#include <memory>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "millopt/grid.hpp"
#include "millopt/linear_solver.hpp"

namespace millopt {

struct MaterialConfig {
  double e_max = 1.0;
  double e_min = 1e-9;
  double nu = 0.3;
  double simp_p = 3.0;
  friend bool operator==(const MaterialConfig&, const MaterialConfig&) = default;
};

void validate(const MaterialConfig& m);

/// E = E_min + rho^p (E_max - E_min).
double simp_modulus(double rho, const MaterialConfig& m) noexcept;
double simp_modulus_derivative(double rho, const MaterialConfig& m) noexcept;

/// Node selection by bounding-box planes, e.g. "xmin", "xmax,ymin" or
/// "x=1.5,y=0". Terms are intersected.
struct NodeSelector {
  std::string expr;
  friend bool operator==(const NodeSelector&, const NodeSelector&) = default;
};

/// Nodes matching `sel`. Throws InvalidArgument on malformed expressions or
/// empty selections.
std::vector<Index> select_nodes(const StructuredGrid& grid, const NodeSelector& sel);

/// Total force spread in equal parts over the selected nodes.
struct NodalLoad {
  NodeSelector at;
  Vec3 force{};
  friend bool operator==(const NodalLoad&, const NodalLoad&) = default;
};

struct LoadCase {
  std::vector<NodeSelector> supports;  ///< all DOFs of these nodes are clamped
  std::vector<NodalLoad> loads;
  friend bool operator==(const LoadCase&, const LoadCase&) = default;
};

struct StateSolution {
  Vector u;  ///< full nodal displacement vector (zeros on supports)
  double compliance = 0.0;
  double residual = 0.0;
  int iterations = 0;
};

/// Unit-modulus element stiffness for a bilinear quad (plane stress, unit
/// thickness) or trilinear hex of side h, full Gauss quadrature.
Eigen::MatrixXd element_stiffness(int dim, double h, double nu);

/// Linear elasticity on the structured grid with supports eliminated from the
/// system. The sparsity pattern and its symbolic factorization are built once.
class ElasticityModel {
 public:
  ElasticityModel(const StructuredGrid& grid, const LoadCase& loads, double nu, SolverPolicy policy = {});
  ~ElasticityModel();
  ElasticityModel(ElasticityModel&&) noexcept;
  ElasticityModel& operator=(ElasticityModel&&) noexcept;

  /// `physical` is a full cell field; passive cells must hold 1.
  StateSolution solve(std::span<const double> physical, const MaterialConfig& m);

  /// dc/d(physical) per cell; zero on passive cells.
  std::vector<double> compliance_sensitivity(const StateSolution& state, std::span<const double> physical,
                                             const MaterialConfig& m) const;

  const Eigen::MatrixXd& unit_stiffness() const noexcept { return ke_; }
  const Vector& load_vector() const noexcept { return load_; }
  Index num_dofs() const noexcept { return load_.size(); }
  Index num_free_dofs() const noexcept { return static_cast<Index>(free_dofs_.size()); }
  /// Element DOF numbers (dim * nodes per element).
  std::vector<Index> element_dofs(Index cell) const;

  /// Assembled reduced stiffness (lower triangle) for the last solve.
  const SparseMatrix& reduced_matrix() const noexcept { return k_; }
  const std::vector<Index>& free_dofs() const noexcept { return free_dofs_; }

 private:
  const StructuredGrid* grid_;
  int nd_ = 8;
  Eigen::MatrixXd ke_;
  Vector load_;
  std::vector<Index> free_dofs_;
  std::vector<int> reduced_;          // dof -> reduced index or -1
  std::vector<int> edofs_;            // cell-major element dofs
  std::vector<int> scatter_;          // per cell, per lower-triangle pair: value slot or -1
  SparseMatrix k_;
  std::unique_ptr<SpdSolver> solver_;
};

/// Volume constraint g = sum(rho v_e) / (v_star V_design) - 1 over design cells,
/// with its constant gradient. `physical_design` is design-indexed.
struct VolumeResult {
  double g = 0.0;
  double fraction = 0.0;
  std::vector<double> gradient;
};
VolumeResult volume_and_sensitivity(std::span<const double> physical_design, const StructuredGrid& grid,
                                    double v_star);

}  // namespace millopt
