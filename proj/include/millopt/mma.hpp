#pragma once

#include <span>
#include <vector>

namespace millopt {

struct MmaConfig {
  double asyinit = 0.5 / 17.0;  ///< initial asymptote spacing, fraction of the variable range
  double asyincr = 1.05;
  double asydecr = 0.65;
  double asymin = 1e-5;  ///< smallest asymptote spacing, fraction of the variable range
  double move_limit = 0.1;
  double xmin = 0.0;
  double xmax = 1.0;

  /// Tightened initial spacing 0.5 / (2 beta + 1) for a fixed projection sharpness.
  static double asyinit_for_beta(double beta) noexcept { return 0.5 / (2.0 * beta + 1.0); }
  friend bool operator==(const MmaConfig&, const MmaConfig&) = default;
};

void validate(const MmaConfig& cfg);

/// Asymptotes, iterate history and objective scaling of one MMA run with a
/// single inequality constraint.
struct MmaState {
  explicit MmaState(std::size_t n = 0) : lower(n), upper(n), x_prev(n), x_prev2(n) {}

  std::vector<double> lower;
  std::vector<double> upper;
  std::vector<double> x_prev;
  std::vector<double> x_prev2;
  int iteration = 0;
  double obj_scale = 0.0;       ///< 0 until the first rescale_objective call
  double last_kkt_residual = 0.0;
  double last_multiplier = 0.0;
};

/// Scales the raw objective so that it reads 10 on the first call and is
/// multiplied by 10 whenever the scaled value drops below 0.1. Returns the
/// scaled value; multiply gradients by `state.obj_scale` afterwards.
double rescale_objective(MmaState& state, double f_raw);

/// One MMA step. `f0` and `df0` must already be scaled. `g <= 0` is the
/// constraint. Returns the new iterate inside the move-limit box.
std::vector<double> mma_update(MmaState& state, std::span<const double> x, double f0,
                               std::span<const double> df0, double g, std::span<const double> dg,
                               const MmaConfig& cfg);

}  // namespace millopt
