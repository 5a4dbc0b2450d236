#pragma once

#include <random>
#include <vector>

#include "millopt/grid.hpp"

namespace millopt::testing {

inline StructuredGrid grid2(int nx, int ny, double h = 1.0, std::vector<Box> passive = {}) {
  const int d[2] = {nx, ny};
  return StructuredGrid::build(d, h, {}, passive);
}

inline StructuredGrid grid3(int nx, int ny, int nz, double h = 1.0, std::vector<Box> passive = {}) {
  const int d[3] = {nx, ny, nz};
  return StructuredGrid::build(d, h, {}, passive);
}

inline std::vector<double> random_vector(std::size_t n, unsigned seed, double lo = -1.0, double hi = 1.0) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> u(lo, hi);
  std::vector<double> v(n);
  for (double& x : v) x = u(rng);
  return v;
}

inline double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double norm(const std::vector<double>& a) { return std::sqrt(dot(a, a)); }

}  // namespace millopt::testing
