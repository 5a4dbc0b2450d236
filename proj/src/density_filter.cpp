#include "millopt/density_filter.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "millopt/errors.hpp"

namespace millopt {

namespace {

void require_finite(std::span<const double> v, const char* what) {
  for (double x : v) {
    if (!std::isfinite(x)) throw InvalidArgument(std::string(what) + " contains non-finite entries");
  }
}

}  // namespace

DensityFilter::DensityFilter(const StructuredGrid& grid, FilterSpec spec, SolverPolicy policy)
    : spec_(spec), n_(grid.num_cells()) {
  if (!(spec.r_min > 0.0)) throw InvalidArgument("filter radius must be positive");
  const double h = grid.h();

  if (spec.kind == FilterKind::Convolution) {
    if (spec.r_min / h < 1.0) {
      throw InvalidArgument("convolution filter radius must span at least one element");
    }
    const int reach = static_cast<int>(std::ceil(spec.r_min / h)) - 1;
    const auto& dims = grid.dims();
    std::vector<Eigen::Triplet<double, int>> trip;
    std::vector<double> row_sum(n_, 0.0);
    for (Index c = 0; c < n_; ++c) {
      const auto ijk = grid.cell_coords(c);
      int lo[3], hi[3];
      for (int a = 0; a < 3; ++a) {
        const int r = a < grid.dim() ? reach : 0;
        lo[a] = std::max(ijk[a] - r, 0);
        hi[a] = std::min(ijk[a] + r, dims[a] - 1);
      }
      for (int k = lo[2]; k <= hi[2]; ++k) {
        for (int j = lo[1]; j <= hi[1]; ++j) {
          for (int i = lo[0]; i <= hi[0]; ++i) {
            const double di = i - ijk[0], dj = j - ijk[1], dk = k - ijk[2];
            const double w = std::max(0.0, spec.r_min - h * std::sqrt(di * di + dj * dj + dk * dk));
            if (w <= 0.0) continue;
            trip.emplace_back(static_cast<int>(c), static_cast<int>(grid.cell_index(i, j, k)), w);
            row_sum[c] += w;
          }
        }
      }
    }
    for (auto& t : trip) t = Eigen::Triplet<double, int>(t.row(), t.col(), t.value() / row_sum[t.row()]);
    weights_.resize(n_, n_);
    weights_.setFromTriplets(trip.begin(), trip.end());
    return;
  }

  // Helmholtz filter: cell-centred finite volumes, scaled by 1/h^dim.
  const double r = spec.r_min / (2.0 * std::sqrt(3.0));
  const double coupling = (r * r) / (h * h);
  std::vector<Eigen::Triplet<double, int>> trip;
  std::vector<double> diag(n_, 1.0);
  for (const Face& f : grid.faces()) {
    if (f.is_boundary()) continue;
    diag[f.owner] += coupling;
    diag[f.neighbor] += coupling;
    // Lower triangle only.
    const int lo = static_cast<int>(std::min(f.owner, f.neighbor));
    const int hi = static_cast<int>(std::max(f.owner, f.neighbor));
    trip.emplace_back(hi, lo, -coupling);
  }
  for (Index c = 0; c < n_; ++c) trip.emplace_back(static_cast<int>(c), static_cast<int>(c), diag[c]);
  SparseMatrix m(n_, n_);
  m.setFromTriplets(trip.begin(), trip.end());
  pde_ = std::make_unique<SpdSolver>(policy);
  pde_->factorize(m);
}

DensityFilter::~DensityFilter() = default;
DensityFilter::DensityFilter(DensityFilter&&) noexcept = default;
DensityFilter& DensityFilter::operator=(DensityFilter&&) noexcept = default;

std::vector<double> DensityFilter::apply(std::span<const double> rho) const {
  if (static_cast<Index>(rho.size()) != n_) throw InvalidArgument("filter input has wrong length");
  require_finite(rho, "density field");
  const Eigen::Map<const Vector> in(rho.data(), n_);
  Vector out;
  if (pde_) {
    pde_->solve(in, out);
  } else {
    out = weights_ * in;
  }
  return {out.data(), out.data() + n_};
}

std::vector<double> DensityFilter::apply_adjoint(std::span<const double> g) const {
  if (static_cast<Index>(g.size()) != n_) throw InvalidArgument("filter adjoint input has wrong length");
  const Eigen::Map<const Vector> in(g.data(), n_);
  Vector out;
  if (pde_) {
    pde_->solve(in, out);
  } else {
    out = weights_.transpose() * in;
  }
  return {out.data(), out.data() + n_};
}

std::vector<double> apply_density_filter(const FilterSpec& spec, const StructuredGrid& grid,
                                         std::span<const double> rho) {
  return DensityFilter(grid, spec).apply(rho);
}

std::vector<double> density_filter_adjoint(const FilterSpec& spec, const StructuredGrid& grid,
                                           std::span<const double> g) {
  return DensityFilter(grid, spec).apply_adjoint(g);
}

}  // namespace millopt
