#include "millopt/aggregate.hpp"

#include <algorithm>
#include <cmath>

#include "millopt/errors.hpp"

namespace millopt {

void validate(const AggregateConfig& cfg, int n_fields) {
  if (cfg.p_mean == 0.0 || !std::isfinite(cfg.p_mean)) throw InvalidArgument("p-mean exponent must be non-zero");
  if (!(cfg.beta > 0.0)) throw InvalidArgument("projection sharpness beta must be positive");
  if (!(cfg.eta > 0.0 && cfg.eta < 1.0)) throw InvalidArgument("projection threshold eta must lie in (0,1)");
  if (cfg.p_mean == 1.0 && n_fields > 1) {
    throw InvalidArgument("p-mean exponent 1 is only allowed with a single tool direction");
  }
}

PMeanResult pmean_aggregate(std::span<const std::vector<double>> fields, double p) {
  if (fields.empty()) throw InvalidArgument("p-mean needs at least one field");
  if (p == 0.0) throw InvalidArgument("p-mean exponent must be non-zero");
  const std::size_t n = fields.front().size();
  const std::size_t ns = fields.size();
  for (const auto& f : fields) {
    if (f.size() != n) throw InvalidArgument("p-mean fields differ in length");
  }

  PMeanResult out;
  out.value.resize(n);
  out.derivative.assign(ns, std::vector<double>(n, 0.0));
  const double inv_n = 1.0 / static_cast<double>(ns);
  std::vector<double> v(ns);
  std::vector<char> clamped(ns);
  for (std::size_t e = 0; e < n; ++e) {
    std::fill(clamped.begin(), clamped.end(), 0);
    double vmin = INFINITY;
    double vmax = 0.0;
    for (std::size_t s = 0; s < ns; ++s) {
      double x = fields[s][e];
      if (std::isnan(x)) throw InvalidArgument("p-mean input contains NaN");
      if (p < 0.0 && x < kPMeanFloor) {
        x = kPMeanFloor;
        clamped[s] = 1;
      }
      v[s] = x;
      vmin = std::min(vmin, x);
      vmax = std::max(vmax, std::abs(x));
    }
    if (ns == 1) {
      out.value[e] = v[0];
      out.derivative[0][e] = (p < 0.0 && clamped[0]) ? 0.0 : 1.0;
      continue;
    }
    // Factor out an extreme value so large shadows neither overflow nor
    // underflow the power sum.
    const double scale = p < 0.0 ? vmin : std::max(vmax, 1e-300);
    double acc = 0.0;
    for (std::size_t s = 0; s < ns; ++s) acc += std::pow(v[s] / scale, p);
    const double mean = scale * std::pow(acc * inv_n, 1.0 / p);
    out.value[e] = mean;
    for (std::size_t s = 0; s < ns; ++s) {
      if (clamped[s]) continue;
      out.derivative[s][e] = inv_n * std::pow(mean / v[s], 1.0 - p);
    }
  }
  return out;
}

double heaviside(double x, double beta, double eta) noexcept {
  const double den = std::tanh(beta * eta) + std::tanh(beta * (1.0 - eta));
  return (std::tanh(beta * eta) + std::tanh(beta * (x - eta))) / den;
}

double heaviside_derivative(double x, double beta, double eta) noexcept {
  const double den = std::tanh(beta * eta) + std::tanh(beta * (1.0 - eta));
  const double t = std::tanh(beta * (x - eta));
  return beta * (1.0 - t * t) / den;
}

Projection heaviside_project(std::span<const double> x, double beta, double eta) {
  Projection out;
  out.value.resize(x.size());
  out.derivative.resize(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    out.value[i] = heaviside(x[i], beta, eta);
    out.derivative[i] = heaviside_derivative(x[i], beta, eta);
  }
  return out;
}

}  // namespace millopt
