#include "millopt/fem.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "millopt/errors.hpp"

namespace millopt {

void validate(const MaterialConfig& m) {
  if (!(m.e_min > 0.0 && m.e_min < m.e_max)) throw InvalidArgument("require 0 < e_min < e_max");
  if (!(m.nu > 0.0 && m.nu < 0.5)) throw InvalidArgument("Poisson ratio must lie in (0, 0.5)");
  if (!(m.simp_p >= 1.0)) throw InvalidArgument("SIMP exponent must be >= 1");
}

double simp_modulus(double rho, const MaterialConfig& m) noexcept {
  return m.e_min + std::pow(rho, m.simp_p) * (m.e_max - m.e_min);
}

double simp_modulus_derivative(double rho, const MaterialConfig& m) noexcept {
  return m.simp_p * std::pow(rho, m.simp_p - 1.0) * (m.e_max - m.e_min);
}

// ---------------------------------------------------------------------------

std::vector<Index> select_nodes(const StructuredGrid& grid, const NodeSelector& sel) {
  struct Plane {
    int axis;
    double value;
  };
  std::vector<Plane> planes;
  const Vec3 len = grid.domain_lengths();
  const Vec3& org = grid.origin();
  std::stringstream ss(sel.expr);
  std::string term;
  while (std::getline(ss, term, ',')) {
    term.erase(std::remove_if(term.begin(), term.end(), ::isspace), term.end());
    if (term.empty()) continue;
    const char c = term[0];
    const int axis = c == 'x' ? 0 : c == 'y' ? 1 : c == 'z' ? 2 : -1;
    if (axis < 0 || axis >= grid.dim()) throw InvalidArgument("bad node selector term '" + term + "'");
    const std::string rest = term.substr(1);
    if (rest == "min") {
      planes.push_back({axis, org[axis]});
    } else if (rest == "max") {
      planes.push_back({axis, org[axis] + len[axis]});
    } else if (!rest.empty() && rest[0] == '=') {
      try {
        std::size_t used = 0;
        const double v = std::stod(rest.substr(1), &used);
        if (used != rest.size() - 1) throw std::invalid_argument("trailing");
        planes.push_back({axis, v});
      } catch (const std::exception&) {
        throw InvalidArgument("bad node selector term '" + term + "'");
      }
    } else {
      throw InvalidArgument("bad node selector term '" + term + "'");
    }
  }
  if (planes.empty()) throw InvalidArgument("empty node selector");

  std::vector<Index> out;
  const double tol = 1e-6 * grid.h();
  for (Index n = 0; n < grid.num_nodes(); ++n) {
    const Vec3 x = grid.node_position(n);
    bool ok = true;
    for (const Plane& p : planes) ok = ok && std::abs(x[p.axis] - p.value) <= tol;
    if (ok) out.push_back(n);
  }
  if (out.empty()) throw InvalidArgument("node selector '" + sel.expr + "' matches no nodes");
  return out;
}

// ---------------------------------------------------------------------------

Eigen::MatrixXd element_stiffness(int dim, double h, double nu) {
  const int nn = dim == 2 ? 4 : 8;
  const int nd = nn * dim;
  const int ns = dim == 2 ? 3 : 6;
  static constexpr int sign[8][3] = {{-1, -1, -1}, {1, -1, -1}, {1, 1, -1}, {-1, 1, -1},
                                     {-1, -1, 1},  {1, -1, 1},  {1, 1, 1},  {-1, 1, 1}};
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(ns, ns);
  if (dim == 2) {
    const double c = 1.0 / (1.0 - nu * nu);
    d << c, c * nu, 0, c * nu, c, 0, 0, 0, c * (1.0 - nu) / 2.0;
  } else {
    const double lam = nu / ((1.0 + nu) * (1.0 - 2.0 * nu));
    const double mu = 1.0 / (2.0 * (1.0 + nu));
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 3; ++j) d(i, j) = lam;
      d(i, i) = lam + 2.0 * mu;
      d(i + 3, i + 3) = mu;
    }
  }
  const double gp = 1.0 / std::sqrt(3.0);
  const double jac = h / 2.0;  // dx/dxi
  const double det = std::pow(jac, dim);
  Eigen::MatrixXd ke = Eigen::MatrixXd::Zero(nd, nd);
  const int ngz = dim == 2 ? 1 : 2;
  for (int gz = 0; gz < ngz; ++gz) {
    for (int gy = 0; gy < 2; ++gy) {
      for (int gx = 0; gx < 2; ++gx) {
        const double xi[3] = {gx ? gp : -gp, gy ? gp : -gp, dim == 3 ? (gz ? gp : -gp) : 0.0};
        Eigen::MatrixXd b = Eigen::MatrixXd::Zero(ns, nd);
        for (int a = 0; a < nn; ++a) {
          double dn[3] = {};
          for (int k = 0; k < dim; ++k) {
            double v = sign[a][k] / (dim == 2 ? 4.0 : 8.0);
            for (int l = 0; l < dim; ++l) {
              if (l != k) v *= 1.0 + sign[a][l] * xi[l];
            }
            dn[k] = v / jac;
          }
          if (dim == 2) {
            b(0, 2 * a) = dn[0];
            b(1, 2 * a + 1) = dn[1];
            b(2, 2 * a) = dn[1];
            b(2, 2 * a + 1) = dn[0];
          } else {
            b(0, 3 * a) = dn[0];
            b(1, 3 * a + 1) = dn[1];
            b(2, 3 * a + 2) = dn[2];
            b(3, 3 * a) = dn[1];
            b(3, 3 * a + 1) = dn[0];
            b(4, 3 * a + 1) = dn[2];
            b(4, 3 * a + 2) = dn[1];
            b(5, 3 * a) = dn[2];
            b(5, 3 * a + 2) = dn[0];
          }
        }
        ke += b.transpose() * d * b * det;
      }
    }
  }
  return ke;
}

// ---------------------------------------------------------------------------

ElasticityModel::ElasticityModel(const StructuredGrid& grid, const LoadCase& loads, double nu,
                                 SolverPolicy policy)
    : grid_(&grid), solver_(std::make_unique<SpdSolver>(policy)) {
  if (loads.supports.empty()) throw InvalidArgument("load case needs at least one support");
  if (loads.loads.empty()) throw InvalidArgument("load case needs at least one load");
  const int dim = grid.dim();
  nd_ = (dim == 2 ? 4 : 8) * dim;
  ke_ = element_stiffness(dim, grid.h(), nu);

  const Index ndof = grid.num_nodes() * dim;
  std::vector<char> fixed(ndof, 0);
  for (const NodeSelector& s : loads.supports) {
    for (Index n : select_nodes(grid, s)) {
      for (int a = 0; a < dim; ++a) fixed[n * dim + a] = 1;
    }
  }
  load_ = Vector::Zero(ndof);
  for (const NodalLoad& l : loads.loads) {
    const auto nodes = select_nodes(grid, l.at);
    for (Index n : nodes) {
      for (int a = 0; a < dim; ++a) load_(n * dim + a) += l.force[a] / static_cast<double>(nodes.size());
    }
  }
  reduced_.assign(ndof, -1);
  for (Index d = 0; d < ndof; ++d) {
    if (!fixed[d]) {
      reduced_[d] = static_cast<int>(free_dofs_.size());
      free_dofs_.push_back(d);
    }
  }
  double free_load = 0.0;
  for (Index d : free_dofs_) free_load += std::abs(load_(d));
  if (free_load == 0.0) throw InvalidArgument("load case has no non-zero load on free DOFs");

  const Index ncell = grid.num_cells();
  edofs_.resize(static_cast<std::size_t>(ncell) * nd_);
  for (Index c = 0; c < ncell; ++c) {
    const auto nodes = grid.cell_nodes(c);
    for (int a = 0; a < static_cast<int>(nodes.size()); ++a) {
      for (int k = 0; k < dim; ++k) edofs_[c * nd_ + a * dim + k] = static_cast<int>(nodes[a] * dim + k);
    }
  }

  // Lower-triangle pattern and per-element scatter slots.
  const Index nfree = num_free_dofs();
  std::vector<Eigen::Triplet<double, int>> trip;
  trip.reserve(static_cast<std::size_t>(ncell) * nd_ * (nd_ + 1) / 2);
  for (Index c = 0; c < ncell; ++c) {
    for (int a = 0; a < nd_; ++a) {
      const int ra = reduced_[edofs_[c * nd_ + a]];
      if (ra < 0) continue;
      for (int b = 0; b <= a; ++b) {
        const int rb = reduced_[edofs_[c * nd_ + b]];
        if (rb < 0) continue;
        trip.emplace_back(std::max(ra, rb), std::min(ra, rb), 1.0);
      }
    }
  }
  k_.resize(nfree, nfree);
  k_.setFromTriplets(trip.begin(), trip.end());
  k_.makeCompressed();
  trip.clear();
  trip.shrink_to_fit();

  const int npair = nd_ * (nd_ + 1) / 2;
  scatter_.assign(static_cast<std::size_t>(ncell) * npair, -1);
  const int* outer = k_.outerIndexPtr();
  const int* inner = k_.innerIndexPtr();
  for (Index c = 0; c < ncell; ++c) {
    int slot = 0;
    for (int a = 0; a < nd_; ++a) {
      for (int b = 0; b <= a; ++b, ++slot) {
        const int ra = reduced_[edofs_[c * nd_ + a]];
        const int rb = reduced_[edofs_[c * nd_ + b]];
        if (ra < 0 || rb < 0) continue;
        const int row = std::max(ra, rb), col = std::min(ra, rb);
        const int* first = inner + outer[col];
        const int* last = inner + outer[col + 1];
        const int* it = std::lower_bound(first, last, row);
        scatter_[c * npair + slot] = static_cast<int>(it - inner);
      }
    }
  }
}

ElasticityModel::~ElasticityModel() = default;
ElasticityModel::ElasticityModel(ElasticityModel&&) noexcept = default;
ElasticityModel& ElasticityModel::operator=(ElasticityModel&&) noexcept = default;

std::vector<Index> ElasticityModel::element_dofs(Index cell) const {
  return {edofs_.begin() + cell * nd_, edofs_.begin() + (cell + 1) * nd_};
}

StateSolution ElasticityModel::solve(std::span<const double> physical, const MaterialConfig& m) {
  const Index ncell = grid_->num_cells();
  if (static_cast<Index>(physical.size()) != ncell) throw InvalidArgument("physical field has wrong length");
  double* val = k_.valuePtr();
  std::fill(val, val + k_.nonZeros(), 0.0);
  const int npair = nd_ * (nd_ + 1) / 2;
  for (Index c = 0; c < ncell; ++c) {
    const double e = grid_->is_passive(c) ? m.e_max : simp_modulus(physical[c], m);
    const int* sc = scatter_.data() + c * npair;
    int slot = 0;
    for (int a = 0; a < nd_; ++a) {
      for (int b = 0; b <= a; ++b, ++slot) {
        if (sc[slot] >= 0) val[sc[slot]] += e * ke_(a, b);
      }
    }
  }
  solver_->factorize(k_);

  const Index nfree = num_free_dofs();
  Vector f(nfree);
  for (Index i = 0; i < nfree; ++i) f(i) = load_(free_dofs_[i]);
  Vector uf;
  const SolveReport rep = solver_->solve(f, uf);
  if (!std::isfinite(rep.residual) || !uf.allFinite()) {
    throw SolverError("elasticity solve produced non-finite displacements");
  }

  StateSolution s;
  s.u = Vector::Zero(load_.size());
  for (Index i = 0; i < nfree; ++i) s.u(free_dofs_[i]) = uf(i);
  s.compliance = f.dot(uf);
  s.residual = rep.residual;
  s.iterations = rep.iterations;
  return s;
}

std::vector<double> ElasticityModel::compliance_sensitivity(const StateSolution& state,
                                                            std::span<const double> physical,
                                                            const MaterialConfig& m) const {
  const Index ncell = grid_->num_cells();
  std::vector<double> out(ncell, 0.0);
  Eigen::VectorXd ue(nd_);
  for (Index c = 0; c < ncell; ++c) {
    if (grid_->is_passive(c)) continue;
    for (int a = 0; a < nd_; ++a) ue(a) = state.u(edofs_[c * nd_ + a]);
    const double energy = ue.dot(ke_ * ue);
    out[c] = -simp_modulus_derivative(physical[c], m) * energy;
  }
  return out;
}

// ---------------------------------------------------------------------------

VolumeResult volume_and_sensitivity(std::span<const double> physical_design, const StructuredGrid& grid,
                                    double v_star) {
  if (!(v_star > 0.0 && v_star <= 1.0)) throw InvalidArgument("volume fraction must lie in (0, 1]");
  if (static_cast<Index>(physical_design.size()) != grid.num_design()) {
    throw InvalidArgument("design field has wrong length");
  }
  const double ve = grid.cell_volume();
  const double vdomain = ve * static_cast<double>(grid.num_design());
  double vol = 0.0;
  for (double r : physical_design) vol += r * ve;
  VolumeResult out;
  out.fraction = vol / vdomain;
  out.g = vol / (v_star * vdomain) - 1.0;
  out.gradient.assign(physical_design.size(), ve / (v_star * vdomain));
  return out;
}

}  // namespace millopt
