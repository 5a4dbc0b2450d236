#include "millopt/shadow.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "millopt/errors.hpp"

namespace millopt {

ToolDirection ToolDirection::from_vector(const Vec3& v, int dim) {
  if (dim != 2 && dim != 3) throw InvalidArgument("tool direction dimension must be 2 or 3");
  double n2 = 0.0;
  for (int a = 0; a < dim; ++a) {
    if (!std::isfinite(v[a])) throw InvalidArgument("tool direction contains NaN");
    n2 += v[a] * v[a];
  }
  if (!(n2 > 0.0)) throw InvalidArgument("tool direction must be non-zero");
  ToolDirection d;
  d.dim_ = dim;
  d.u_ = {};
  const double n = std::sqrt(n2);
  for (int a = 0; a < dim; ++a) d.u_[a] = std::abs(n - 1.0) <= 1e-15 ? v[a] : v[a] / n;
  return d;
}

ToolDirection ToolDirection::from_angle_deg(double theta_deg) {
  if (!std::isfinite(theta_deg)) throw InvalidArgument("tool angle must be finite");
  const double t = theta_deg * std::numbers::pi / 180.0;
  ToolDirection d = from_vector({-std::cos(t), -std::sin(t), 0.0}, 2);
  // Snap round-off so that axis-aligned angles give exact unit vectors.
  for (int a = 0; a < 2; ++a) {
    if (std::abs(d.u_[a]) < 1e-14) d.u_[a] = 0.0;
    if (std::abs(std::abs(d.u_[a]) - 1.0) < 1e-14) d.u_[a] = std::copysign(1.0, d.u_[a]);
  }
  return d;
}

int ToolDirection::aligned_axis() const noexcept {
  for (int a = 0; a < dim_; ++a) {
    if (std::abs(std::abs(u_[a]) - 1.0) <= 1e-12) return a;
  }
  return -1;
}

ShadowConfig ShadowConfig::for_grid(const StructuredGrid& grid, double peclet, double source_factor) {
  return {peclet, 1.0 / grid.h(), source_factor};
}

double peclet_rule_of_thumb(double characteristic_length) { return 1e4 / characteristic_length; }

double robin_ghost_ratio(double source_scale, double peclet, double h) {
  const double k = 1.0 / (source_scale * peclet * h);
  return -(0.5 - k) / (0.5 + k);
}

ShadowOperator::ShadowOperator(const StructuredGrid& grid, const ToolDirection& direction,
                               const ShadowConfig& config, SolverPolicy policy)
    : direction_(direction) {
  if (direction.dim() != grid.dim()) throw InvalidArgument("tool direction dimension mismatch");
  for (double c : direction.u()) {
    if (std::isnan(c)) throw InvalidArgument("tool direction contains NaN");
  }
  if (!(config.peclet > 0.0)) throw InvalidArgument("Peclet number must be positive");
  if (!(config.source_scale > 0.0)) throw InvalidArgument("source scale must be positive");

  const Index n = grid.num_design();
  const double h = grid.h();
  const double area = grid.face_area();
  if (!(area > 0.0)) throw InvalidArgument("zero-area faces");
  const Vec3& u = direction.u();
  const double diff = area / (config.peclet * h);

  // ghost = -ratio * cell, ghost centre one spacing out.
  const double ratio = -robin_ghost_ratio(config.source_scale, config.peclet, h);

  source_weight_ = config.source_factor * config.source_scale * grid.cell_volume();
  rhs_dirichlet_ = Vector::Zero(n);
  std::vector<Eigen::Triplet<double, int>> trip;
  trip.reserve(static_cast<std::size_t>(n) * (2 * grid.dim() + 1) * 2);
  auto add = [&](Index r, Index c, double v) {
    trip.emplace_back(static_cast<int>(r), static_cast<int>(c), v);
  };

  for (const Face& f : grid.faces()) {
    if (f.is_boundary()) continue;
    const Index p = grid.design_slot(f.owner);
    const Index q = grid.design_slot(f.neighbor);
    if (p < 0 || q < 0) continue;  // passive interfaces handled below
    const double flux = u[f.axis] * f.area_vector[f.axis];  // from owner to neighbour
    // Upwind: the face carries the value of the cell the flow comes from.
    if (flux > 0.0) {
      add(p, p, flux);
      add(q, p, -flux);
    } else if (flux < 0.0) {
      add(p, q, flux);
      add(q, q, -flux);
    }
    add(p, p, diff);
    add(p, q, -diff);
    add(q, q, diff);
    add(q, p, -diff);
  }

  for (const BoundaryFace& b : classify_boundary_faces(grid)) {
    if (b.design_cell == kBoundary) continue;
    const Index p = grid.design_slot(b.design_cell);
    const double flux = u[b.axis] * b.side * area;  // outward
    if (b.kind == BoundaryKind::Robin) {
      if (flux > 0.0) {
        add(p, p, flux);
      } else if (flux < 0.0) {
        // Inflow face value from linear interpolation with the ghost cell.
        add(p, p, flux * 0.5 * (1.0 - ratio));
      }
      add(p, p, diff * (1.0 + ratio));
    } else {
      // Face value fixed to 1. Advective inflow carries the prescribed value;
      // diffusion eliminates the mirrored ghost 2 - phi_P, which moves
      // -2 a_f (a_f = -diff) to the right-hand side.
      if (flux > 0.0) {
        add(p, p, flux);
      } else if (flux < 0.0) {
        rhs_dirichlet_(p) -= flux;
      }
      const double a_f = -diff;
      add(p, p, diff - a_f);
      rhs_dirichlet_(p) += -2.0 * a_f;
    }
  }

  matrix_.resize(n, n);
  matrix_.setFromTriplets(trip.begin(), trip.end());
  matrix_.makeCompressed();
  for (Index i = 0; i < n; ++i) {
    if (!(matrix_.coeff(i, i) > 0.0)) {
      throw InvalidArgument("shadow operator has a non-positive diagonal at row " + std::to_string(i));
    }
  }
  solver_ = std::make_unique<NonsymmetricSolver>(matrix_, policy);
}

ShadowOperator::~ShadowOperator() = default;
ShadowOperator::ShadowOperator(ShadowOperator&&) noexcept = default;
ShadowOperator& ShadowOperator::operator=(ShadowOperator&&) noexcept = default;

std::vector<double> ShadowOperator::forward(std::span<const double> rho_tilde, SolveReport* report) const {
  const Index n = size();
  if (static_cast<Index>(rho_tilde.size()) != n) throw InvalidArgument("shadow input has wrong length");
  const Vector b = source_weight_ * Eigen::Map<const Vector>(rho_tilde.data(), n) + rhs_dirichlet_;
  Vector x;
  const SolveReport rep = solver_->solve(b, x);
  if (report) *report = rep;
  return {x.data(), x.data() + n};
}

std::vector<double> ShadowOperator::adjoint(std::span<const double> g, SolveReport* report) const {
  const Index n = size();
  if (static_cast<Index>(g.size()) != n) throw InvalidArgument("shadow adjoint input has wrong length");
  Vector lambda;
  const SolveReport rep = solver_->solve_transposed(Eigen::Map<const Vector>(g.data(), n), lambda);
  if (report) *report = rep;
  lambda *= source_weight_;
  return {lambda.data(), lambda.data() + n};
}

}  // namespace millopt
