#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "tdbsde/market.hpp"

namespace tdbsde {

/// Minimum-withdrawal claim: the discounted value solves
///   Y(t) = E^Q[ L a~(T) + int_t^T gamma sup_{u <= s} Y(u) e^{-int_u^s r} ds | F_t ]
/// with a~(T) = e^{-int_0^T r} a(T) and a the annuity factor over `horizon`.
struct WithdrawalSpec {
  double gamma = 0.05;
  double consumption = 1.0;
  double horizon = 40.0;
  double maturity = 1.0;
  std::size_t quadrature_intervals = 256;
};

void validate(const WithdrawalSpec& spec);

inline constexpr std::size_t kDefaultDepthCap = 16;

/// Non-recombining symmetric random-walk tree in heap layout: node id
/// 2^k - 1 + j sits at level k, its children are 2 id + 1 (down move) and
/// 2 id + 2 (up move).
struct WalkTree {
  TimeGrid grid;
  std::size_t depth = 0;
  std::vector<double> state;
  std::vector<double> rate;
  std::vector<double> integrated_rate;  // along the node's prefix
  std::vector<double> leaf_annuity;     // a~(T) per leaf, in level order

  std::size_t node_count() const { return state.size(); }
  static std::size_t level_start(std::size_t level) { return (std::size_t{1} << level) - 1; }
  static std::size_t parent(std::size_t id) { return (id - 1) / 2; }
};

// Throws InvalidInput for depth 0 and BudgetExceeded above the cap.
WalkTree build_tree(const ShortRateModel& model, const WithdrawalSpec& spec, std::size_t depth,
                    std::size_t depth_cap = kDefaultDepthCap);

// Q(node) = max over the prefix u of Y(u) e^{-int_u^{node} r}.
std::vector<double> running_sup(const WalkTree& tree, const std::vector<double>& values);

// One Picard update from `previous` (empty means Y^0 = 0): exact conditional
// expectations by backward accumulation, left-endpoint generator sums.
std::vector<double> picard_step(const WalkTree& tree, const WithdrawalSpec& spec,
                                const std::vector<double>& previous);

struct PicardSolution {
  std::vector<double> values;
  std::vector<double> running_sup;
  std::vector<double> deltas;        // sup-norm change per iteration
  std::vector<double> root_history;  // Y^k(root), k = 0, 1, ...
  double contraction_ratio = 0.0;    // largest delta_k / delta_{k-1} observed
  std::size_t iterations = 0;
  bool converged = false;
  double root() const { return values.front(); }
};

// Iterates from Y^0 = 0. Throws NonConvergence when max_iterations is hit or
// the deltas stop contracting (three successive ratios >= 1).
PicardSolution solve_picard(const WalkTree& tree, const WithdrawalSpec& spec, double tolerance,
                            std::size_t max_iterations);

// sup-norm of picard_step(values) - values.
double fixed_point_residual(const WalkTree& tree, const WithdrawalSpec& spec, const std::vector<double>& values);

struct NestedMcOptions {
  std::size_t iteration = 2;  // estimate Y^iteration(0); 1, 2 or 3
  std::size_t steps = 12;
  std::size_t paths = 20000;
  std::size_t inner_paths = 64;  // used for iteration 3 only
  std::uint64_t seed = 0;
  double budget = 2e9;           // cap on simulated rate steps
};

struct NestedMcEstimate {
  double value = 0.0;
  double standard_error = 0.0;
  std::size_t iteration = 0;
  double work = 0.0;
};

// Independent Monte-Carlo estimate of the Picard iterate at t = 0 on a
// Gaussian grid with the tree's time step. Y^1 along a path is available in
// closed form; iteration 3 estimates Y^2 with inner simulations.
NestedMcEstimate nested_mc_oracle(const ShortRateModel& model, const WithdrawalSpec& spec,
                                  const NestedMcOptions& options);

// The variant that also locks the final withdrawal into a life annuity has no
// known non-zero solution method; always throws ZeroSolutionOnly.
[[noreturn]] void solve_locked_in_withdrawal(const ShortRateModel& model, const WithdrawalSpec& spec);

}  // namespace tdbsde
