#pragma once

#include <cstddef>
#include <memory>
#include <string>
#include <vector>

#include "tdbsde/market.hpp"

namespace tdbsde {

/// Ratchet on anniversaries 0 = t_0 < ... < t_n = T: the terminal value must
/// equal gamma * max_k X(t_k) e^{g (T - t_k)}.
struct RatchetSpec {
  double gamma = 1.0;
  double g = 0.0;
  std::vector<double> anniversaries;
};

void validate(const RatchetSpec& spec, double maturity);

// Grid indices of the anniversaries; throws InvalidInput for off-grid dates.
std::vector<std::size_t> anniversary_indices(const RatchetSpec& spec, const TimeGrid& grid);

enum class RatchetCase { Shortfall, FixedReturn, Surplus, Unfair };

const char* to_string(RatchetCase c);

struct Classification {
  RatchetCase label = RatchetCase::Unfair;
  std::string binding_condition;
  // sup over outcomes of gamma e^{g (T - t_m)} D(t_m), per anniversary.
  std::vector<double> sup_bounds;
  double initial_product = 0.0;  // gamma e^{gT} D(0)
  bool zero_solution_only() const { return label == RatchetCase::Shortfall || label == RatchetCase::Unfair; }
};

inline constexpr double kExactTolerance = 1e-12;

// Decided from the affine support of D(t_m); no simulation involved.
Classification classify(const ShortRateModel& model, const RatchetSpec& spec, double maturity);

// Smallest g that puts a CIR (or deterministic) model into the fixed-return
// case, together with gamma = e^{-gT} / D(0).
struct FixedReturnParameters {
  double g = 0.0;
  double gamma = 0.0;
};
FixedReturnParameters fixed_return_parameters(const ShortRateModel& model, std::vector<double> anniversaries,
                                              double maturity);

/// How the surplus above the ratchet reserve is invested until the next
/// anniversary. Amounts are undiscounted values at the allocation node.
struct SurplusAllocation {
  double bond_units = 0.0;
  double cash = 0.0;
};

class SurplusPolicy {
 public:
  virtual ~SurplusPolicy() = default;
  virtual std::string name() const = 0;
  virtual SurplusAllocation allocate(double surplus, std::size_t node, const MarketPaths& market) const = 0;
};

// Buy-and-hold split of the surplus: `bond_fraction` in the zero bond, the
// rest in the bank account. The default puts all of it in the bond.
class SplitSurplusPolicy final : public SurplusPolicy {
 public:
  explicit SplitSurplusPolicy(double bond_fraction = 1.0);
  std::string name() const override;
  SurplusAllocation allocate(double surplus, std::size_t node, const MarketPaths& market) const override;

 private:
  double bond_fraction_;
};

// Throws the surplus away. Breaks the budget identity; used as a negative
// control.
class DiscardSurplusPolicy final : public SurplusPolicy {
 public:
  std::string name() const override { return "discard"; }
  SurplusAllocation allocate(double, std::size_t, const MarketPaths&) const override { return {}; }
};

/// One simulated ratchet portfolio. Values at every grid node.
struct RatchetPath {
  std::vector<double> Y;        // discounted value
  std::vector<double> X;        // undiscounted value
  std::vector<double> pi;       // amount held in the bond
  std::vector<double> reserve;  // ratchet level * D
  std::vector<double> surplus;  // X - reserve
  std::vector<double> level;    // gamma max_{t_k <= t} X(t_k) e^{g (T - t_k)}
  std::vector<std::size_t> anniversaries;
  double max_budget_residual = 0.0;  // |cost of allocation - surplus|
};

// Fixed-return case: the whole initial value goes into the bond.
RatchetPath solve_fixed_return(double y0, const MarketPaths& market, const RatchetSpec& spec,
                               const Classification& label);

// Surplus case: forward recursion over anniversaries with the given policy.
RatchetPath solve_surplus(double y0, const SurplusPolicy& policy, const MarketPaths& market,
                          const RatchetSpec& spec, const Classification& label);

// Dispatches on the label; the zero-solution cases throw ZeroSolutionOnly for
// y0 > 0 and return the zero path for y0 = 0.
RatchetPath solve_ratchet(double y0, const SurplusPolicy& policy, const MarketPaths& market,
                          const RatchetSpec& spec, const Classification& label);

struct TerminalResidual {
  double residual = 0.0;  // Y(T) - gamma max_k Y(t_k) e^{-int_{t_k}^T r} e^{g (T - t_k)}
  double relative = 0.0;  // |residual| / Y(0)
};

TerminalResidual verify_terminal(const RatchetPath& path, const MarketPaths& market, const RatchetSpec& spec);

// Re-integrates the discounted value from the strategy with the bond position
// at `step` scaled by (1 + bump). Negative control for the verifier.
RatchetPath perturb_strategy(const RatchetPath& path, const MarketPaths& market, std::size_t step, double bump);

}  // namespace tdbsde
