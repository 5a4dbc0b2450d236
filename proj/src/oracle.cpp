#include "millopt/oracle.hpp"

#include <Eigen/Dense>
#include <cmath>

#include "millopt/errors.hpp"

namespace millopt::oracle {

std::vector<double> cumsum_shadow(const StructuredGrid& grid, const ToolDirection& direction,
                                  std::span<const double> rho_tilde, double source_scale,
                                  double source_factor) {
  const int axis = direction.aligned_axis();
  if (axis < 0) throw InvalidArgument("cumulative-sum oracle needs an axis-aligned direction");
  if (static_cast<Index>(rho_tilde.size()) != grid.num_design()) {
    throw InvalidArgument("oracle input has wrong length");
  }
  const int step = direction.u()[axis] > 0.0 ? 1 : -1;
  const double w = source_factor * source_scale * grid.h();
  const auto& dims = grid.dims();
  std::vector<double> out(grid.num_design(), 0.0);

  // One line per combination of the two transverse indices.
  std::array<int, 3> ext = dims;
  ext[axis] = 1;
  for (int k = 0; k < ext[2]; ++k) {
    for (int j = 0; j < ext[1]; ++j) {
      for (int i = 0; i < ext[0]; ++i) {
        std::array<int, 3> p{i, j, k};
        double c = 0.0;
        for (int t = 0; t < dims[axis]; ++t) {
          p[axis] = step > 0 ? t : dims[axis] - 1 - t;
          const Index cell = grid.cell_index(p[0], p[1], p[2]);
          if (grid.is_passive(cell)) {
            c = 1.0;
            continue;
          }
          const Index slot = grid.design_slot(cell);
          c += w * rho_tilde[slot];
          out[slot] = c;
        }
      }
    }
  }
  return out;
}

std::vector<double> fd_gradient(const std::function<double(std::span<const double>)>& f,
                                std::span<const double> x, double step, std::span<const std::size_t> components) {
  std::vector<double> xp(x.begin(), x.end());
  std::vector<double> out;
  out.reserve(components.size());
  for (std::size_t c : components) {
    const double x0 = xp[c];
    xp[c] = x0 + step;
    const double fp = f(xp);
    xp[c] = x0 - step;
    const double fm = f(xp);
    xp[c] = x0;
    out.push_back((fp - fm) / (2.0 * step));
  }
  return out;
}

double dense_compliance(const StructuredGrid& grid, const LoadCase& loads, std::span<const double> physical,
                        const MaterialConfig& m) {
  const int dim = grid.dim();
  const Index ndof = grid.num_nodes() * dim;
  const Eigen::MatrixXd ke = element_stiffness(dim, grid.h(), m.nu);
  Eigen::MatrixXd k = Eigen::MatrixXd::Zero(ndof, ndof);
  for (Index c = 0; c < grid.num_cells(); ++c) {
    const double e = grid.is_passive(c) ? m.e_max : simp_modulus(physical[c], m);
    const auto nodes = grid.cell_nodes(c);
    std::vector<Index> dofs;
    for (Index n : nodes) {
      for (int a = 0; a < dim; ++a) dofs.push_back(n * dim + a);
    }
    for (std::size_t a = 0; a < dofs.size(); ++a) {
      for (std::size_t b = 0; b < dofs.size(); ++b) k(dofs[a], dofs[b]) += e * ke(a, b);
    }
  }
  Eigen::VectorXd f = Eigen::VectorXd::Zero(ndof);
  for (const NodalLoad& l : loads.loads) {
    const auto nodes = select_nodes(grid, l.at);
    for (Index n : nodes) {
      for (int a = 0; a < dim; ++a) f(n * dim + a) += l.force[a] / static_cast<double>(nodes.size());
    }
  }
  std::vector<char> fixed(ndof, 0);
  for (const NodeSelector& s : loads.supports) {
    for (Index n : select_nodes(grid, s)) {
      for (int a = 0; a < dim; ++a) fixed[n * dim + a] = 1;
    }
  }
  std::vector<Index> free;
  for (Index d = 0; d < ndof; ++d) {
    if (!fixed[d]) free.push_back(d);
  }
  const Index nf = static_cast<Index>(free.size());
  Eigen::MatrixXd kf(nf, nf);
  Eigen::VectorXd ff(nf);
  for (Index i = 0; i < nf; ++i) {
    ff(i) = f(free[i]);
    for (Index j = 0; j < nf; ++j) kf(i, j) = k(free[i], free[j]);
  }
  const Eigen::VectorXd u = kf.ldlt().solve(ff);
  return ff.dot(u);
}

std::vector<double> dense_helmholtz_filter(const StructuredGrid& grid, double r_min, std::span<const double> rho) {
  const Index n = grid.num_cells();
  const double r = r_min / (2.0 * std::sqrt(3.0));
  const double h = grid.h();
  Eigen::MatrixXd a = Eigen::MatrixXd::Identity(n, n);
  // Second differences per axis, no flux through the walls.
  for (Index c = 0; c < n; ++c) {
    for (int axis = 0; axis < grid.dim(); ++axis) {
      for (int side : {-1, 1}) {
        const Index nb = grid.neighbor(c, axis, side);
        if (nb == kBoundary) continue;
        a(c, c) += r * r / (h * h);
        a(c, nb) -= r * r / (h * h);
      }
    }
  }
  const Eigen::VectorXd x = a.fullPivLu().solve(Eigen::Map<const Eigen::VectorXd>(rho.data(), n));
  return {x.data(), x.data() + n};
}

}  // namespace millopt::oracle
