#pragma once

#include <span>
#include <vector>

namespace millopt {

struct AggregateConfig {
  double p_mean = -4.0;
  double beta = 8.0;
  double eta = 0.5;
  friend bool operator==(const AggregateConfig&, const AggregateConfig&) = default;
};

/// Inputs below this floor are clamped before negative-power means.
inline constexpr double kPMeanFloor = 1e-9;

/// Throws InvalidArgument for p == 0, beta <= 0, eta outside (0,1), or
/// p == 1 with more than one field.
void validate(const AggregateConfig& cfg, int n_fields);

struct PMeanResult {
  std::vector<double> value;
  /// derivative[s][e] = d value[e] / d fields[s][e]
  std::vector<std::vector<double>> derivative;
};

/// Elementwise power mean ((1/n) sum_s f_s^p)^(1/p) of the fields.
PMeanResult pmean_aggregate(std::span<const std::vector<double>> fields, double p);

double heaviside(double x, double beta, double eta) noexcept;
double heaviside_derivative(double x, double beta, double eta) noexcept;

struct Projection {
  std::vector<double> value;
  std::vector<double> derivative;
};

Projection heaviside_project(std::span<const double> x, double beta, double eta);

}  // namespace millopt
