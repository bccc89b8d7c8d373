#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "tdbsde/asian_smoothing.hpp"
#include "tdbsde/continuous_ratchet.hpp"
#include "tdbsde/discrete_ratchet.hpp"
#include "tdbsde/market.hpp"

namespace tdbsde {

inline constexpr int kReportSchemaVersion = 1;

struct ResidualStats {
  double mean = 0.0;
  double max = 0.0;
  double q50 = 0.0;
  double q90 = 0.0;
  double q99 = 0.0;
};

// Statistics of non-negative residuals; the mean uses compensated summation.
ResidualStats residual_stats(const std::vector<double>& values);

struct Check {
  std::string name;
  double value = 0.0;
  double limit = 0.0;
  bool passed = false;
};

struct HedgeReport {
  std::string strategy;
  std::size_t paths = 0;
  double y0 = 0.0;
  ResidualStats terminal;             // |terminal residual| / Y(0)
  std::size_t constraint_violations = 0;
  double martingale_drift = 0.0;      // max over checkpoints of |mean increment| / SE
  double self_financing_max = 0.0;    // relative to Y(0)
  std::vector<Check> checks;
  nlohmann::ordered_json details = nlohmann::ordered_json::object();

  bool passed() const;
  nlohmann::ordered_json to_json() const;
};

/// Per-node values of a discounted price process across paths, used to test
/// the martingale property increment by increment.
class MartingaleSampler {
 public:
  MartingaleSampler(std::size_t paths, std::vector<std::size_t> checkpoints);
  // Thread-safe for distinct path indices.
  void record(std::size_t path, const std::vector<double>& values);
  // max over checkpoints of |mean(V_{c+1} - V_c)| / SE, antithetic-aware.
  double max_drift(bool antithetic) const;

 private:
  std::size_t paths_;
  std::vector<std::size_t> checkpoints_;
  std::vector<double> data_;
};

// All nodes when steps <= max_points, otherwise an even stride plus T.
std::vector<std::size_t> default_checkpoints(std::size_t steps, std::size_t max_points = 512);

struct Tolerances {
  double terminal_relative = 1e-10;
  double martingale_z = 4.0;
  double self_financing = 1e-10;
  double budget = 1e-12;
  double slack = 1e-10;
  double lock_in_gap = 0.02;  // median relative terminal gap, continuous ratchet
  double asian_terminal = 1e-3;
};

// Default tolerances; tightened for the exact fixed-return construction.
Tolerances default_tolerances(const std::string& strategy);

HedgeReport run_market_report(const ShortRateModel& model, const EnsembleConfig& config,
                              const Tolerances& tol = {});

HedgeReport run_discrete_ratchet_report(const ShortRateModel& model, const RatchetSpec& spec, double y0,
                                        const SurplusPolicy& policy, const EnsembleConfig& config,
                                        const Tolerances& tol);

HedgeReport run_continuous_ratchet_report(const ShortRateModel& model, const DrawdownSpec& spec, double x,
                                          const EnsembleConfig& config, const Tolerances& tol);

HedgeReport run_asian_report(const ShortRateModel& model, const SmoothingSpec& spec, double y0,
                             const EnsembleConfig& config, const Tolerances& tol);

struct ConvergenceRow {
  std::size_t steps = 0;
  double metric = 0.0;
  std::optional<double> order;  // log2(e_prev / e_this), from the second row on
};

struct ConvergenceTable {
  std::string metric_name;
  std::vector<ConvergenceRow> rows;
  double monotone_fraction = 0.0;  // paths whose metric falls at every refinement

  nlohmann::ordered_json to_json() const;
  std::string to_csv() const;
};

enum class Aggregate { Mean, Median, Max };

using PathMetric = std::function<double(const MarketPaths&)>;

// Samples each path once on the coarsest grid and refines it by Brownian
// bridges, so all rows see the same underlying noise.
ConvergenceTable run_convergence_study(const ShortRateModel& model, double maturity,
                                       const std::vector<std::size_t>& steps, std::size_t paths,
                                       std::uint64_t seed, const std::string& metric_name, const PathMetric& metric,
                                       Aggregate aggregate, double memory_budget_bytes = 4e9);

// Metrics used by the CLI and the acceptance suite.
PathMetric asian_fubini_metric(const SmoothingSpec& spec, double y0);
PathMetric asian_terminal_metric(const SmoothingSpec& spec, double y0);
PathMetric drawdown_gap_metric(const DrawdownSpec& spec, double x);
PathMetric discrete_ratchet_metric(const ShortRateModel& model, const RatchetSpec& spec, double y0);

struct NegativeControl {
  std::string module;
  std::string description;
  double statistic = 0.0;
  double threshold = 0.0;
  bool detected = false;
};

// One deliberately broken construction per module; every one must be caught
// by the corresponding verifier.
std::vector<NegativeControl> run_negative_controls(std::uint64_t seed);

nlohmann::ordered_json to_json(const NegativeControl& c);

}  // namespace tdbsde
