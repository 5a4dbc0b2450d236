#pragma once

#include <memory>
#include <span>
#include <vector>

#include "millopt/grid.hpp"
#include "millopt/linear_solver.hpp"

namespace millopt {

/// Unit advection vector along which material casts its shadow. A tool
/// approaching from angle theta (degrees, 2D) travels along -(cos, sin).
class ToolDirection {
 public:
  ToolDirection() = default;
  /// Normalizes `v`; throws InvalidArgument for NaN or zero vectors.
  static ToolDirection from_vector(const Vec3& v, int dim);
  static ToolDirection from_angle_deg(double theta_deg);

  const Vec3& u() const noexcept { return u_; }
  int dim() const noexcept { return dim_; }
  /// Axis index if the direction is aligned with a coordinate axis, else -1.
  int aligned_axis() const noexcept;
  friend bool operator==(const ToolDirection&, const ToolDirection&) = default;

 private:
  Vec3 u_{1.0, 0.0, 0.0};
  int dim_ = 2;
};

struct ShadowConfig {
  double peclet = 1e4;
  double source_scale = 1.0;   ///< s = 1 / h
  double source_factor = 1.0;  ///< optional multiplier on the source term

  static ShadowConfig for_grid(const StructuredGrid& grid, double peclet, double source_factor = 1.0);
};

/// Rule-of-thumb Peclet number for a characteristic length l_c.
double peclet_rule_of_thumb(double characteristic_length);

/// Ghost-to-cell value ratio of the Robin boundary elimination,
/// -(1/2 - k) / (1/2 + k) with k = 1 / (s Pe h). Tends to -1 for large s Pe.
double robin_ghost_ratio(double source_scale, double peclet, double h);

/// Upwind finite-volume advection-diffusion operator for one tool direction on
/// the design cells. Unknowns are indexed by design slot. The matrix, the
/// Dirichlet right-hand side and the factorization are fixed at construction.
class ShadowOperator {
 public:
  ShadowOperator(const StructuredGrid& grid, const ToolDirection& direction,
                 const ShadowConfig& config, SolverPolicy policy = {});
  ~ShadowOperator();
  ShadowOperator(ShadowOperator&&) noexcept;
  ShadowOperator& operator=(ShadowOperator&&) noexcept;

  const SparseMatrix& matrix() const noexcept { return matrix_; }
  const Vector& rhs_dirichlet() const noexcept { return rhs_dirichlet_; }
  const ToolDirection& direction() const noexcept { return direction_; }
  /// Multiplier from filtered density to right-hand side: factor * s * h^dim.
  double source_weight() const noexcept { return source_weight_; }
  Index size() const noexcept { return matrix_.rows(); }

  /// Solves A x = w * rho_tilde + rhs_dirichlet; `rho_tilde` is design-indexed.
  std::vector<double> forward(std::span<const double> rho_tilde, SolveReport* report = nullptr) const;
  /// Solves A^T lambda = g and returns w * lambda.
  std::vector<double> adjoint(std::span<const double> g, SolveReport* report = nullptr) const;

 private:
  ToolDirection direction_;
  double source_weight_ = 1.0;
  SparseMatrix matrix_;
  Vector rhs_dirichlet_;
  std::unique_ptr<NonsymmetricSolver> solver_;
};

}  // namespace millopt
