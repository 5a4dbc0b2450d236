#include <algorithm>
#include <cmath>
#include <numeric>

#include "doctest.h"
#include "millopt/errors.hpp"
#include "millopt/mma.hpp"

using namespace millopt;

TEST_CASE("initial asymptote spacing for beta = 8") {
  CHECK(MmaConfig::asyinit_for_beta(8.0) == doctest::Approx(0.5 / 17.0).epsilon(1e-15));
  CHECK(MmaConfig{}.asyinit == MmaConfig::asyinit_for_beta(8.0));
  CHECK(MmaConfig::asyinit_for_beta(1.0) == doctest::Approx(0.5 / 3.0));
}

TEST_CASE("objective rescaling") {
  MmaState st(1);
  CHECK(rescale_objective(st, 250.0) == doctest::Approx(10.0));
  CHECK(st.obj_scale == doctest::Approx(0.04));
  // 12.5 * 0.04 = 0.5 stays above the trigger.
  CHECK(rescale_objective(st, 12.5) == doctest::Approx(0.5));
  CHECK(st.obj_scale == doctest::Approx(0.04));
  // 2.25 * 0.04 = 0.09 falls below 0.1 and is lifted tenfold.
  CHECK(rescale_objective(st, 2.25) == doctest::Approx(0.9));
  CHECK(st.obj_scale == doctest::Approx(0.4));
  CHECK_THROWS_AS(rescale_objective(st, 0.0), InvalidArgument);
  CHECK_THROWS_AS(rescale_objective(st, std::nan("")), InvalidArgument);
}

TEST_CASE("unconstrained quadratic converges") {
  MmaConfig cfg;
  std::vector<double> x{0.5};
  MmaState st(1);
  int iters = 0;
  for (; iters < 30; ++iters) {
    const double df = 2.0 * (x[0] - 0.3);
    const std::vector<double> d0{df}, d1{0.0};
    x = mma_update(st, x, (x[0] - 0.3) * (x[0] - 0.3), d0, -1.0, d1, cfg);
    if (std::abs(x[0] - 0.3) < 1e-4) break;
  }
  CHECK(iters < 30);
  CHECK(x[0] == doctest::Approx(0.3).epsilon(1e-4));
}

TEST_CASE("decreasing objective stops at the constraint bound") {
  MmaConfig cfg;
  std::vector<double> x{0.1};
  MmaState st(1);
  const std::vector<double> df{-1.0}, dg{1.0};
  for (int it = 0; it < 30; ++it) x = mma_update(st, x, 1.0 - x[0], df, x[0] - 0.5, dg, cfg);
  CHECK(x[0] == doctest::Approx(0.5).epsilon(1e-4));
  CHECK(x[0] <= 0.5 + 1e-9);
  CHECK(st.last_multiplier > 0.0);
  CHECK(st.last_kkt_residual <= 1e-9);
}

TEST_CASE("active volume-type constraint drives the mean to its bound") {
  const std::size_t n = 10;
  MmaConfig cfg;
  std::vector<double> x(n);
  for (std::size_t j = 0; j < n; ++j) x[j] = 0.1 + 0.08 * static_cast<double>(j);
  MmaState st(n);
  for (int it = 0; it < 100; ++it) {
    std::vector<double> df(n), dg(n, 1.0 / (0.5 * n));
    double f = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      f += (x[j] - 1.0) * (x[j] - 1.0);
      df[j] = 2.0 * (x[j] - 1.0);
    }
    const double g = std::accumulate(x.begin(), x.end(), 0.0) / (0.5 * n) - 1.0;
    x = mma_update(st, x, f, df, g, dg, cfg);
  }
  for (double v : x) CHECK(v == doctest::Approx(0.5).epsilon(1e-4));
  CHECK(st.last_multiplier > 0.0);
}

TEST_CASE("iterates respect move limit, bounds and asymptotes") {
  const std::size_t n = 6;
  MmaConfig cfg;
  cfg.move_limit = 0.05;
  std::vector<double> x{0.0, 0.2, 0.4, 0.6, 0.8, 1.0};
  MmaState st(n);
  for (int it = 0; it < 8; ++it) {
    std::vector<double> df(n), dg(n, 0.3);
    for (std::size_t j = 0; j < n; ++j) df[j] = (j % 2 ? 1.0 : -1.0) * (1.0 + it);
    const auto xn = mma_update(st, x, 1.0, df, 0.2, dg, cfg);
    for (std::size_t j = 0; j < n; ++j) {
      CHECK(xn[j] >= 0.0);
      CHECK(xn[j] <= 1.0);
      CHECK(std::abs(xn[j] - x[j]) <= cfg.move_limit + 1e-15);
      CHECK(st.lower[j] < xn[j]);
      CHECK(xn[j] < st.upper[j]);
      if (it < 2) {
        CHECK(st.upper[j] - x[j] == doctest::Approx(cfg.asyinit));
        CHECK(x[j] - st.lower[j] == doctest::Approx(cfg.asyinit));
      }
    }
    x = xn;
  }
  CHECK(st.iteration == 8);
}

TEST_CASE("oscillation contracts the asymptotes") {
  MmaConfig cfg;
  MmaState st(1);
  std::vector<double> x{0.5};
  const std::vector<double> dg{0.0};
  double spacing = 0.0;
  for (int it = 0; it < 4; ++it) {
    const std::vector<double> df{it % 2 ? 1.0 : -1.0};
    const auto xn = mma_update(st, x, 1.0, df, -1.0, dg, cfg);
    const double s = st.upper[0] - x[0];
    if (it >= 2) CHECK(s < spacing);
    spacing = s;
    x = xn;
  }
}

TEST_CASE("validation") {
  MmaConfig cfg;
  cfg.asyincr = 0.9;
  CHECK_THROWS_AS(validate(cfg), InvalidArgument);
  cfg = {};
  cfg.move_limit = 0.0;
  CHECK_THROWS_AS(validate(cfg), InvalidArgument);
  cfg = {};
  cfg.asyinit = -1.0;
  CHECK_THROWS_AS(validate(cfg), InvalidArgument);
  cfg = {};
  cfg.asymin = 0.5;
  CHECK_THROWS_AS(validate(cfg), InvalidArgument);
  CHECK_NOTHROW(validate(MmaConfig{}));
  MmaState st(2);
  const std::vector<double> x{0.5}, d{1.0};
  CHECK_THROWS_AS(mma_update(st, x, 1.0, d, 0.0, d, MmaConfig{}), InvalidArgument);
}
