#include "tdbsde/asian_smoothing.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "tdbsde/errors.hpp"
#include "tdbsde/stats.hpp"

namespace tdbsde {

const char* to_string(SmoothingVariant v) { return v == SmoothingVariant::Scaled ? "scaled" : "fixed"; }

void validate(const SmoothingSpec& spec) {
  validate(spec.benchmark);
  if (!(spec.beta >= 0.0) || !std::isfinite(spec.beta)) throw InvalidInput("smoothing: beta must be >= 0");
  if (!(spec.gamma >= 0.0) || !std::isfinite(spec.gamma)) throw InvalidInput("smoothing: gamma must be >= 0");
  if (spec.variant == SmoothingVariant::Scaled) {
    // E^Q[S~] = S~(0) = 1 for a constant-mix benchmark.
    const double condition = spec.beta * 1.0 + spec.gamma;
    if (std::abs(condition - 1.0) > kConditionTolerance) {
      std::ostringstream msg;
      msg.precision(12);
      msg << "smoothing: condition betaE[S~]+gamma=1 fails (beta + gamma = " << condition
          << "); only the zero solution Y = Z = 0 exists";
      throw ZeroSolutionOnly(msg.str());
    }
  } else {
    if (spec.gamma >= 1.0) throw NoSolution("smoothing: gamma >= 1, there exists no solution");
    if (!(spec.beta > 0.0)) throw InvalidInput("smoothing: the fixed claim needs beta > 0");
  }
}

std::vector<double> discounted_benchmark(const BenchmarkSpec& spec, const MarketPaths& market) {
  std::vector<double> s = simulate_benchmark(spec, market);
  for (std::size_t i = 0; i < s.size(); ++i) s[i] *= market.discount[i];
  return s;
}

std::vector<double> martingale_integrand(const std::vector<double>& discounted_benchmark, double weight,
                                         const MarketPaths& market, double scale) {
  std::vector<double> m(discounted_benchmark.size());
  for (std::size_t i = 0; i < m.size(); ++i) m[i] = scale * discounted_benchmark[i] * weight * market.bond_vol[i];
  return m;
}

double reconstruction_residual(const std::vector<double>& discounted_benchmark, const std::vector<double>& M,
                               const MarketPaths& market, double scale) {
  double integral = 0.0;
  double worst = 0.0;
  for (std::size_t i = 0; i < market.steps(); ++i) {
    integral += M[i] * market.q_increments[i];
    const double target = scale * (discounted_benchmark[i + 1] - discounted_benchmark[0]);
    worst = std::max(worst, std::abs(target - integral));
  }
  return worst;
}

double smoothing_weight(double t, double maturity, double gamma) {
  return (maturity - t) / (maturity - gamma * maturity + gamma * t);
}

double smoothing_weight_derivative(double t, double maturity, double gamma) {
  const double d = maturity + gamma * t - gamma * maturity;
  return -maturity / (d * d);
}

namespace {

SmoothingSolution integrate(double y0, double scale, const SmoothingSpec& spec, const MarketPaths& market) {
  const std::size_t n = market.steps();
  const double T = market.grid.maturity();
  SmoothingSolution out;
  out.y0 = y0;
  out.scale = scale;
  out.benchmark = discounted_benchmark(spec.benchmark, market);
  out.M = martingale_integrand(out.benchmark, spec.benchmark.weight, market, scale);
  out.Z.assign(n + 1, 0.0);
  out.Y.assign(n + 1, y0);
  out.running_avg.assign(n + 1, 0.0);
  for (std::size_t i = 0; i <= n; ++i) {
    const double denom = 1.0 - spec.gamma + spec.gamma * market.grid.time(i) / T;
    out.Z[i] = out.M[i] == 0.0 ? 0.0 : out.M[i] / denom;
  }
  const double dt = market.grid.dt();
  for (std::size_t i = 0; i < n; ++i) {
    out.Y[i + 1] = out.Y[i] + out.Z[i] * market.q_increments[i];
    out.running_avg[i + 1] = out.running_avg[i] + 0.5 * (out.Y[i] + out.Y[i + 1]) * dt / T;
  }
  return out;
}

}  // namespace

SmoothingSolution solve_scaled(double y0, const SmoothingSpec& spec, const MarketPaths& market) {
  if (spec.variant != SmoothingVariant::Scaled) throw InvalidInput("smoothing: spec is not the scaled claim");
  validate(spec);
  if (!(y0 >= 0.0) || !std::isfinite(y0)) throw InvalidInput("smoothing: Y(0) must be >= 0");
  // beta = 0 forces gamma = 1: Z = 0 and Y stays at Y(0).
  return integrate(y0, spec.beta * y0, spec, market);
}

SmoothingSolution solve_fixed(const SmoothingSpec& spec, const MarketPaths& market) {
  if (spec.variant != SmoothingVariant::Fixed) throw InvalidInput("smoothing: spec is not the fixed claim");
  validate(spec);
  return integrate(spec.beta / (1.0 - spec.gamma), spec.beta, spec, market);
}

SmoothingSolution solve_smoothing(double y0, const SmoothingSpec& spec, const MarketPaths& market) {
  return spec.variant == SmoothingVariant::Scaled ? solve_scaled(y0, spec, market) : solve_fixed(spec, market);
}

AverageIdentities verify_average_identities(const SmoothingSolution& s, const SmoothingSpec& spec,
                                            const MarketPaths& market) {
  const std::size_t n = market.steps();
  const double T = market.grid.maturity();
  const double dt = market.grid.dt();
  const double norm = s.y0 > 0.0 ? s.y0 : 1.0;
  AverageIdentities out;

  const double claim = s.scale * s.benchmark[n] + spec.gamma * s.running_avg[n];
  out.terminal_residual = (s.Y[n] - claim) / norm;

  CompensatedSum fubini;
  CompensatedSum parts;
  for (std::size_t j = 0; j < n; ++j) {
    const double t = market.grid.time(j);
    fubini.add((1.0 - t / T) * s.Z[j] * market.q_increments[j]);
    parts.add(smoothing_weight(t, T, spec.gamma) * s.M[j] * market.q_increments[j]);
    // V^ = c S~; trapezoid on the dt-integral.
    const double f0 = (s.scale * (s.benchmark[j] - s.benchmark[0])) *
                      smoothing_weight_derivative(t, T, spec.gamma);
    const double f1 = (s.scale * (s.benchmark[j + 1] - s.benchmark[0])) *
                      smoothing_weight_derivative(market.grid.time(j + 1), T, spec.gamma);
    parts.add(0.5 * (f0 + f1) * dt);
  }
  out.fubini_residual = (s.running_avg[n] - s.y0 - fubini.value()) / norm;
  out.parts_residual = parts.value() / norm;

  if (s.y0 > 0.0) {
    for (std::size_t i = 0; i <= n; ++i) {
      if (!(s.Y[i] > 0.0)) out.value_positive = false;
      if (i > 0 && !(s.running_avg[i] > 0.0)) out.average_positive = false;
    }
  }
  return out;
}

double bonus_decomposition_gap(const SmoothingSolution& s, const SmoothingSpec& spec, const MarketPaths& market) {
  if (spec.variant != SmoothingVariant::Scaled) throw InvalidInput("bonus decomposition: scaled claim only");
  const std::size_t n = market.steps();
  const double T = market.grid.maturity();
  // G(T) = (gamma / T) int (beta Y0 S~ + G) ds: an average claim with
  // integrand gamma (1 - t/T) beta Y0 S~ w sigma and G(0) = gamma Y0.
  const double g0 = spec.gamma * s.y0;
  double g = g0;
  double worst = std::abs(s.scale * s.benchmark[0] + g - s.Y[0]);
  for (std::size_t i = 0; i < n; ++i) {
    const double t = market.grid.time(i);
    const double denom = 1.0 - spec.gamma + spec.gamma * t / T;
    const double mg = spec.gamma * (1.0 - t / T) * s.M[i];
    g += mg / denom * market.q_increments[i];
    worst = std::max(worst, std::abs(s.scale * s.benchmark[i + 1] + g - s.Y[i + 1]));
  }
  return s.y0 > 0.0 ? worst / s.y0 : worst;
}

}  // namespace tdbsde
