#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <vector>

#include "tdbsde/noise.hpp"
#include "tdbsde/short_rate.hpp"

namespace tdbsde {

/// Joint path of rate, bank-account discount, bond price and bond volatility.
///
/// D(t_i) = exp(n(t_i) - m(t_i) r(t_i)) is read off the rate through the
/// affine formula, so D(t_n) = 1 exactly. Integrated rate uses the trapezoid
/// rule; every module discounts through `integrated_rate` so identities hold
/// exactly at grid resolution.
struct MarketPaths {
  TimeGrid grid;
  Measure measure;
  std::vector<double> rate;
  std::vector<double> integrated_rate;  // int_0^{t_i} r ds
  std::vector<double> discount;         // exp(-integrated_rate)
  std::vector<double> bond;             // D(t_i)
  std::vector<double> bond_vol;         // sigma(t_i), dD/D = ... + sigma dW
  std::vector<double> q_increments;     // dW^Q = dW + theta dt (= dW under Q)

  std::size_t steps() const { return grid.steps(); }
  double discounted_bond(std::size_t i) const { return discount[i] * bond[i]; }
  // exp(-int_{t_k}^{t_m} r ds)
  double discount_between(std::size_t k, std::size_t m) const;
  // B(t_{i+1}) / B(t_i) for the bank account.
  double bank_growth(std::size_t i) const;
};

MarketPaths simulate_rate(const ShortRateModel& model, const BrownianPath& noise, Measure measure);

struct EnsembleConfig {
  TimeGrid grid;
  Measure measure = Measure::Q;
  std::size_t paths = 1;
  std::uint64_t seed = 0;
  std::uint64_t first_path = 0;  // offset into the seed's path sequence
  bool antithetic = false;       // paths (2k, 2k+1) share negated noise
};

// Noise for ensemble member `index` (relative to first_path).
BrownianPath ensemble_noise(const EnsembleConfig& config, std::size_t index);

// Streams ensemble members through `fn(index, paths)` in parallel. `fn` must
// only write to per-index state.
void for_each_path(const ShortRateModel& model, const EnsembleConfig& config,
                   const std::function<void(std::size_t, const MarketPaths&)>& fn);

std::vector<MarketPaths> simulate_ensemble(const ShortRateModel& model, const EnsembleConfig& config);

struct AnnuityValue {
  double value = 0.0;
  // Rough size of the neglected tail beyond the horizon: P(T, T+H) / y with
  // y the average yield over the horizon (infinite when y <= 0).
  double tail_estimate = 0.0;
};

// int_T^{T+H} P(T, s; r_T) ds by composite Simpson. Models are
// time-homogeneous, so only r_T and H matter.
AnnuityValue annuity_factor(const ShortRateModel& model, double rate, double horizon,
                            std::size_t intervals = 512);

// Annuity starting `delay` years from now: int_{delay}^{delay+H} P(0, s; r) ds.
double deferred_annuity(const ShortRateModel& model, double rate, double delay, double horizon,
                        std::size_t intervals = 512);

// Largest |Y_{i+1} - Y_i - (pi_i / D_i)(P~_{i+1} - P~_i)| over the path, with
// Y the discounted value, pi the amount in the bond and P~ = e^{-int r} D.
double self_financing_residual(const std::vector<double>& y, const std::vector<double>& pi,
                               const MarketPaths& market);

struct AssumptionReport {
  std::size_t paths = 0;
  std::size_t rate_samples = 0;
  double negative_rate_fraction = 0.0;
  double min_bond = 0.0;
  double max_bond_before_maturity = 0.0;
  std::size_t bond_at_or_above_one = 0;  // nodes t < T with D >= 1
  bool terminal_bond_exact = true;       // D(T) == 1 on every path
  double max_abs_bond_vol = 0.0;
  bool risk_premium_bounded = true;
};

// Real-world (P) diagnostics for non-negativity of r, 0 < D < 1 before T
// with D(T) = 1, and boundedness of the risk premium.
AssumptionReport check_assumptions(const ShortRateModel& model, const TimeGrid& grid,
                                   std::size_t sample_size, std::uint64_t seed);

// Long-format CSV: path_id,t,r,discount,D,sigma
void write_market_csv_header(std::ostream& out);
void write_market_csv(std::ostream& out, std::size_t path_id, const MarketPaths& paths);

}  // namespace tdbsde
