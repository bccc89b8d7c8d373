#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "tdbsde/market.hpp"
#include "tdbsde/skorohod.hpp"

namespace tdbsde {

/// Continuously ratcheted guarantee X(T) = gamma sup_s X(s) e^{g (T - s)},
/// hedged with a drawdown-constrained portfolio plus an auxiliary fund S that
/// keeps `fund_bond_weight` of its value in the bond.
struct DrawdownSpec {
  double gamma = 1.0;
  double g = 0.0;
  double fund_initial = 1.0;
  double fund_bond_weight = 0.5;
  double sigma_cap = 1.0;  // bound on |sigma(t)| checked along each path
};

void validate(const DrawdownSpec& spec);

struct FeasibilityReport {
  double initial_product = 0.0;      // gamma e^{gT} D(0)
  double deterministic_bound = 0.0;  // gamma sup_t e^{g(T-t)} sup D(t), may be +inf
  bool shortfall_excluded = false;   // bound <= 1
  bool shortfall_certain = false;    // gamma > 1 (terminal point alone)
  bool lock_in_certain = false;      // gamma = 1 and g = 0, since D(T) = 1
  std::size_t paths = 0;
  // Fractions of paths with sup_t gamma e^{g(T-t)} D(t) > 1 and >= 1, with
  // 95% Wilson intervals.
  double shortfall_probability = 0.0;
  double shortfall_lo = 0.0;
  double shortfall_hi = 0.0;
  double lock_in_probability = 0.0;
  double lock_in_lo = 0.0;
  double lock_in_hi = 0.0;
};

FeasibilityReport check_feasibility(const ShortRateModel& model, const DrawdownSpec& spec, const TimeGrid& grid,
                                    std::size_t sample_size, std::uint64_t seed);

/// Result of searching for a path on which e^{-gt} D(t) / D(0) > 1 at an
/// interior node, i.e. r(t) falls below the barrier h(t).
struct WitnessSearch {
  bool found = false;
  double gamma = 0.0;  // 1 / (e^{gT} D(0))
  std::uint64_t seed = 0;
  std::uint64_t path_index = 0;
  std::size_t node = 0;
  double time = 0.0;
  double rate = 0.0;
  double barrier = 0.0;
  std::size_t paths_tried = 0;
  double min_margin = std::numeric_limits<double>::infinity();  // min over nodes of r(t) - h(t)
};

// h(t) = (g t - n(t) + n(0) - m(0) r0) / (-m(t)) with n, m the affine bond
// coefficients at time to maturity T - t.
double witness_barrier(const ShortRateModel& model, double g, double maturity, double t);

WitnessSearch cir_infeasibility_witness(const ShortRateModel& model, double g, const TimeGrid& grid,
                                        std::size_t max_tries, std::uint64_t seed, Measure measure = Measure::P);

inline constexpr std::size_t kNotLocked = std::numeric_limits<std::size_t>::max();

struct DrawdownPath {
  std::vector<double> X;
  std::vector<double> pi;
  std::vector<double> V;  // X / D
  std::vector<double> M;
  std::vector<double> K;
  std::vector<double> L;  // +inf from the lock-in node on
  std::vector<double> R;  // S / D
  std::vector<double> psi;
  std::vector<double> slack;
  std::size_t locked_at = kNotLocked;  // node where the reserve covers everything
  std::size_t frozen_at = kNotLocked;  // node where the fund was exhausted
};

DrawdownPath construct_drawdown_portfolio(double x, const DrawdownSpec& spec, const MarketPaths& market);

// X(t_i) - gamma max_{k <= i} X(t_k) e^{g (T - t_k)} D(t_i).
std::vector<double> constraint_slack(const std::vector<double>& X, const MarketPaths& market, double gamma,
                                     double g);

struct DrawdownVerification {
  std::size_t violations = 0;  // slack < -1e-10 x
  double min_slack = 0.0;      // relative to x
  double terminal_residual = 0.0;  // X(T) - gamma max_{k <= n} X(t_k) e^{g(T-t_k)}
  double lock_in_gap = 0.0;        // X(T) - gamma max_{k < n} X(t_k) e^{g(T-t_k)}
  double relative_gap = 0.0;       // |lock_in_gap| / x
  bool skorohod_ok = true;
  std::string skorohod_failure;
  bool running_max_bound_ok = true;  // M <= V(0) e^K
  bool psi_bound_ok = true;          // 0 <= psi <= (1 - c0) V(0) R / R(0)
  double max_abs_sigma = 0.0;
  bool sigma_within_cap = true;
  double self_financing_max = 0.0;  // relative to x
};

DrawdownVerification verify_drawdown(const DrawdownPath& path, const MarketPaths& market, const DrawdownSpec& spec);

}  // namespace tdbsde
