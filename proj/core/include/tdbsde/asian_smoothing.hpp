#pragma once

#include <string>
#include <vector>

#include "tdbsde/market.hpp"
#include "tdbsde/obpi.hpp"

namespace tdbsde {

/// Average-value bonus claims on a constant-mix benchmark S:
///   scaled: Y(T) = beta Y(0) S~(T) + (gamma / T) int_0^T Y ds
///   fixed:  Y(T) = beta S~(T)      + (gamma / T) int_0^T Y ds
enum class SmoothingVariant { Scaled, Fixed };

const char* to_string(SmoothingVariant v);

struct SmoothingSpec {
  double beta = 0.0;
  double gamma = 0.0;
  BenchmarkSpec benchmark;
  SmoothingVariant variant = SmoothingVariant::Scaled;
};

inline constexpr double kConditionTolerance = 1e-12;

// Throws with the violated condition. For the scaled claim beta E[S~] + gamma
// must equal 1 (E[S~] = 1 for constant-mix benchmarks); otherwise only the
// zero solution exists. For the fixed claim gamma >= 1 has no solution.
void validate(const SmoothingSpec& spec);

struct SmoothingSolution {
  double y0 = 0.0;
  double scale = 0.0;              // c in M = c S~ w sigma
  std::vector<double> Y;           // discounted value
  std::vector<double> Z;           // per unit dW^Q
  std::vector<double> M;           // integrand of c S~
  std::vector<double> benchmark;   // S~(t_i)
  std::vector<double> running_avg; // (1/T) int_0^{t_i} Y ds, trapezoid
};

// M(t_i) = c S~(t_i) w sigma(t_i).
std::vector<double> martingale_integrand(const std::vector<double>& discounted_benchmark, double weight,
                                         const MarketPaths& market, double scale);

// Discounted benchmark S~ = e^{-int r} S.
std::vector<double> discounted_benchmark(const BenchmarkSpec& spec, const MarketPaths& market);

// max_i |c S~(t_i) - c S~(0) - sum_{j<i} M_j dW_j|.
double reconstruction_residual(const std::vector<double>& discounted_benchmark, const std::vector<double>& M,
                               const MarketPaths& market, double scale);

// Weight h(t) = (T - t) / (T - gamma T + gamma t) and its derivative.
double smoothing_weight(double t, double maturity, double gamma);
double smoothing_weight_derivative(double t, double maturity, double gamma);

SmoothingSolution solve_scaled(double y0, const SmoothingSpec& spec, const MarketPaths& market);
SmoothingSolution solve_fixed(const SmoothingSpec& spec, const MarketPaths& market);
SmoothingSolution solve_smoothing(double y0, const SmoothingSpec& spec, const MarketPaths& market);

struct AverageIdentities {
  double terminal_residual = 0.0;  // Y(T) - claim, relative to Y(0)
  double fubini_residual = 0.0;    // (1/T) int Y - Y0 - sum (1 - t_j/T) Z_j dW_j, relative
  double parts_residual = 0.0;     // sum h M dW + int (V^ - V^(0)) h' dt, relative
  bool average_positive = true;    // running average > 0 after t = 0 when Y0 > 0
  bool value_positive = true;      // Y > 0 at every node when Y0 > 0
};

AverageIdentities verify_average_identities(const SmoothingSolution& solution, const SmoothingSpec& spec,
                                            const MarketPaths& market);

// Splits the scaled claim into the benchmark position beta Y0 S~ and a bonus
// G solved as its own average claim; returns max_i |beta Y0 S~ + G - Y|
// relative to Y0.
double bonus_decomposition_gap(const SmoothingSolution& solution, const SmoothingSpec& spec,
                               const MarketPaths& market);

}  // namespace tdbsde
