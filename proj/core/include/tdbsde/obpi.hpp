#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "tdbsde/market.hpp"
#include "tdbsde/stats.hpp"

namespace tdbsde {

/// Constant-mix benchmark: a fraction `weight` of value in the bond D and the
/// rest in the bank account, rebalanced every step. S(0) = 1.
struct BenchmarkSpec {
  double weight = 0.0;
};

void validate(const BenchmarkSpec& spec);

// S(t_i) along one market path:
//   S_{i+1} = S_i [w D_{i+1}/D_i + (1-w) B_{i+1}/B_i],
// exact for w = 0 and w = 1 and positive for every w in [0, 1].
std::vector<double> simulate_benchmark(const BenchmarkSpec& spec, const MarketPaths& market);

// exp(-int_0^T r) and S(T) for one path: everything a European claim on S(T)
// needs.
struct BenchmarkTerminal {
  double discount = 0.0;
  double value = 0.0;
};

std::vector<BenchmarkTerminal> sample_benchmark_terminals(const ShortRateModel& model, const BenchmarkSpec& spec,
                                                          const EnsembleConfig& config);

struct Estimate {
  double value = 0.0;
  double standard_error = 0.0;
};

// E^Q[exp(-int r) (scale S(T) - strike)^+] and the matching put. With
// `antithetic` the standard error is computed over pairs.
Estimate price_call(std::span<const BenchmarkTerminal> sample, double strike, double scale, bool antithetic);
Estimate price_put(std::span<const BenchmarkTerminal> sample, double strike, double scale, bool antithetic);

struct ObpiOptions {
  double bracket = 2.0;  // search lambda in (0, bracket / S(0)]
  double tolerance = 1e-8;
  std::size_t max_iterations = 200;
};

/// Participation factor per unit capital and its by-products.
struct ObpiSolution {
  double lambda = 0.0;
  double bond_price = 0.0;  // D(0)
  Estimate call;            // C(lambda S(T) - 1)
  Estimate put;             // P(1 - lambda S(T))
  double fee = 0.0;         // -ln(lambda) / T
  double residual = 0.0;    // D(0) + C - 1
  Estimate parity;          // lambda S(0) + P - 1
  double bracket_lo = 0.0;
  double bracket_hi = 0.0;
  std::size_t iterations = 0;
};

// Solves D(0) + C(lambda S(T) - 1) = 1 by bisection on a fixed (common random
// numbers) sample. The capital never enters.
ObpiSolution solve_participation(double bond_price, double maturity, std::span<const BenchmarkTerminal> sample,
                                 bool antithetic, const ObpiOptions& options = {});

double hedging_fee(double lambda, double maturity);

// Positions for capital x: x D(0) in the zero bond and x calls on lambda S(T).
struct ObpiPositions {
  double lambda = 0.0;
  double bond_amount = 0.0;
  double call_amount = 0.0;
};

ObpiPositions scale_to_capital(const ObpiSolution& solution, double capital);

}  // namespace tdbsde
