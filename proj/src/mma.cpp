#include "millopt/mma.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>

#include "millopt/errors.hpp"

namespace millopt {

namespace {

// Constants of the classic MMA implementation.
constexpr double kAlbefa = 0.1;
constexpr double kRaa0 = 1e-5;
constexpr double kLowFactorMin = 10.0;

struct Subproblem {
  std::span<const double> low, upp, alpha, beta;
  std::vector<double> p0, q0, p1, q1;
  double b = 0.0;

  double primal(std::size_t j, double lambda) const {
    const double p = p0[j] + lambda * p1[j];
    const double q = q0[j] + lambda * q1[j];
    const double sp = std::sqrt(p), sq = std::sqrt(q);
    const double x = (sp * low[j] + sq * upp[j]) / (sp + sq);
    return std::clamp(x, alpha[j], beta[j]);
  }

  double constraint(const std::vector<double>& x) const {
    double g = -b;
    for (std::size_t j = 0; j < x.size(); ++j) g += p1[j] / (upp[j] - x[j]) + q1[j] / (x[j] - low[j]);
    return g;
  }

  void fill(double lambda, std::vector<double>& x) const {
    for (std::size_t j = 0; j < x.size(); ++j) x[j] = primal(j, lambda);
  }
};

}  // namespace

void validate(const MmaConfig& cfg) {
  if (!(cfg.asydecr > 0.0 && cfg.asydecr < 1.0 && cfg.asyincr > 1.0)) {
    throw InvalidArgument("MMA requires 0 < asydecr < 1 < asyincr");
  }
  if (!(cfg.move_limit > 0.0 && cfg.move_limit <= 1.0)) throw InvalidArgument("move limit must lie in (0, 1]");
  if (!(cfg.asyinit > 0.0)) throw InvalidArgument("initial asymptote spacing must be positive");
  if (!(cfg.asymin > 0.0 && cfg.asymin <= cfg.asyinit)) {
    throw InvalidArgument("minimum asymptote spacing must lie in (0, asyinit]");
  }
  if (!(cfg.xmin < cfg.xmax)) throw InvalidArgument("MMA bounds must satisfy xmin < xmax");
}

double rescale_objective(MmaState& state, double f_raw) {
  if (!(f_raw > 0.0) || !std::isfinite(f_raw)) throw InvalidArgument("objective must be positive and finite");
  if (state.obj_scale == 0.0) {
    state.obj_scale = 10.0 / f_raw;
  } else if (state.obj_scale * f_raw < 0.1) {
    state.obj_scale *= 10.0;
  }
  return state.obj_scale * f_raw;
}

std::vector<double> mma_update(MmaState& state, std::span<const double> x, double f0,
                               std::span<const double> df0, double g, std::span<const double> dg,
                               const MmaConfig& cfg) {
  const std::size_t n = x.size();
  if (df0.size() != n || dg.size() != n || state.lower.size() != n) {
    throw InvalidArgument("MMA vectors have inconsistent lengths");
  }
  (void)f0;
  const double range = std::max(cfg.xmax - cfg.xmin, 1e-5);
  const int k = state.iteration + 1;

  for (std::size_t j = 0; j < n; ++j) {
    if (k <= 2) {
      state.lower[j] = x[j] - cfg.asyinit * range;
      state.upper[j] = x[j] + cfg.asyinit * range;
      continue;
    }
    // Oscillating variables contract, monotone ones expand.
    const double trend = (x[j] - state.x_prev[j]) * (state.x_prev[j] - state.x_prev2[j]);
    const double factor = trend > 0.0 ? cfg.asyincr : trend < 0.0 ? cfg.asydecr : 1.0;
    double lo = x[j] - factor * (state.x_prev[j] - state.lower[j]);
    double up = x[j] + factor * (state.upper[j] - state.x_prev[j]);
    lo = std::clamp(lo, x[j] - kLowFactorMin * range, x[j] - cfg.asymin * range);
    up = std::clamp(up, x[j] + cfg.asymin * range, x[j] + kLowFactorMin * range);
    state.lower[j] = lo;
    state.upper[j] = up;
  }

  std::vector<double> alpha(n), beta(n);
  for (std::size_t j = 0; j < n; ++j) {
    alpha[j] = std::max({state.lower[j] + kAlbefa * (x[j] - state.lower[j]), x[j] - cfg.move_limit * range,
                         cfg.xmin});
    beta[j] = std::min({state.upper[j] - kAlbefa * (state.upper[j] - x[j]), x[j] + cfg.move_limit * range,
                        cfg.xmax});
    if (alpha[j] > beta[j]) alpha[j] = beta[j] = std::clamp(x[j], cfg.xmin, cfg.xmax);
  }

  Subproblem sub{state.lower, state.upper, alpha, beta, {}, {}, {}, {}, 0.0};
  sub.p0.resize(n);
  sub.q0.resize(n);
  sub.p1.resize(n);
  sub.q1.resize(n);
  double b = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    const double ux = state.upper[j] - x[j];
    const double xl = x[j] - state.lower[j];
    const double ux2 = ux * ux, xl2 = xl * xl;
    const double reg = kRaa0 / range;
    sub.p0[j] = ux2 * (1.001 * std::max(df0[j], 0.0) + 0.001 * std::max(-df0[j], 0.0) + reg);
    sub.q0[j] = xl2 * (0.001 * std::max(df0[j], 0.0) + 1.001 * std::max(-df0[j], 0.0) + reg);
    sub.p1[j] = ux2 * (1.001 * std::max(dg[j], 0.0) + 0.001 * std::max(-dg[j], 0.0) + reg);
    sub.q1[j] = xl2 * (0.001 * std::max(dg[j], 0.0) + 1.001 * std::max(-dg[j], 0.0) + reg);
    b += sub.p1[j] / ux + sub.q1[j] / xl;
  }
  sub.b = b - g;

  // Dual of the single-constraint subproblem: the approximate constraint is
  // non-increasing in the multiplier, so bracket and bisect.
  std::vector<double> xnew(n);
  double lambda = 0.0;
  sub.fill(0.0, xnew);
  double gsub = sub.constraint(xnew);
  if (gsub > 0.0) {
    double lo = 0.0, hi = 1.0;
    sub.fill(hi, xnew);
    while (sub.constraint(xnew) > 0.0 && hi < 1e30) {
      lo = hi;
      hi *= 10.0;
      sub.fill(hi, xnew);
    }
    for (int it = 0; it < 300 && hi - lo > 1e-14 * hi; ++it) {
      const double mid = 0.5 * (lo + hi);
      sub.fill(mid, xnew);
      const double gm = sub.constraint(xnew);
      if (gm > 0.0) {
        lo = mid;
      } else {
        hi = mid;
      }
      if (gm == 0.0) break;
    }
    lambda = hi;
    sub.fill(lambda, xnew);
    gsub = sub.constraint(xnew);
  }
  state.last_multiplier = lambda;
  state.last_kkt_residual = std::max(std::max(gsub, 0.0), lambda * std::abs(gsub));

  for (std::size_t j = 0; j < n; ++j) {
    assert(state.lower[j] < xnew[j] && xnew[j] < state.upper[j]);
    state.x_prev2[j] = state.x_prev[j];
    state.x_prev[j] = x[j];
  }
  state.iteration = k;
  return xnew;
}

}  // namespace millopt
