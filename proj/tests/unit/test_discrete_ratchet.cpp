#include <doctest.h>

#include <cmath>

#include "tdbsde/discrete_ratchet.hpp"
#include "tdbsde/errors.hpp"

using namespace tdbsde;

namespace {

const ShortRateModel kCir = ShortRateModel::cir(0.5, 0.04, 0.1, 0.04);
const TimeGrid kGrid(1.0, 64);

MarketPaths path(const ShortRateModel& m, std::uint64_t index) {
  return simulate_rate(m, BrownianPath::sample(kGrid, 42, index), Measure::Q);
}

RatchetSpec quarterly(double gamma, double g = 0.0) { return {gamma, g, {0.0, 0.25, 0.5, 0.75, 1.0}}; }

}  // namespace

TEST_CASE("classification of the four cases") {
  CHECK(classify(kCir, quarterly(1.0), 1.0).label == RatchetCase::Surplus);
  CHECK(classify(kCir, {1.0, 0.0, {0.0, 1.0}}, 1.0).label == RatchetCase::Surplus);
  for (double g : {0.0, 0.03}) CHECK(classify(kCir, quarterly(1.05, g), 1.0).label == RatchetCase::Shortfall);
  const Classification unfair = classify(kCir, quarterly(0.5), 1.0);
  CHECK(unfair.label == RatchetCase::Unfair);
  CHECK(unfair.zero_solution_only());

  const ShortRateModel flat = ShortRateModel::constant(0.05);
  const Classification fixed = classify(flat, {1.0, 0.05, {0.0, 0.5, 1.0}}, 1.0);
  CHECK(fixed.label == RatchetCase::FixedReturn);
  CHECK(fixed.initial_product == doctest::Approx(1.0).epsilon(1e-15));

  // Vasicek bonds are unbounded above at interior dates, so only {0, T} is safe.
  const ShortRateModel vas = ShortRateModel::vasicek(0.1, 0.05, 0.01, 0.05);
  CHECK(classify(vas, quarterly(1.0), 1.0).label == RatchetCase::Shortfall);
  CHECK(classify(vas, {1.0, 0.0, {0.0, 1.0}}, 1.0).label == RatchetCase::Surplus);
}

TEST_CASE("anniversaries must be grid nodes") {
  CHECK_THROWS_AS(anniversary_indices({1.0, 0.0, {0.0, 0.3, 1.0}}, kGrid), InvalidInput);
  CHECK_THROWS_AS(anniversary_indices({1.0, 0.0, {0.1, 1.0}}, kGrid), InvalidInput);
  CHECK(anniversary_indices(quarterly(1.0), kGrid) == std::vector<std::size_t>{0, 16, 32, 48, 64});
}

TEST_CASE("fixed return on a flat curve pays the guaranteed rate") {
  const ShortRateModel flat = ShortRateModel::constant(0.05);
  const RatchetSpec spec{1.0, 0.05, {0.0, 0.5, 1.0}};
  const Classification label = classify(flat, spec, 1.0);
  const MarketPaths m = path(flat, 0);
  const RatchetPath p = solve_ratchet(100.0, SplitSurplusPolicy(), m, spec, label);
  CHECK(p.X.back() == doctest::Approx(100.0 * std::exp(0.05)).epsilon(1e-14));
  CHECK(verify_terminal(p, m, spec).relative < 1e-12);

  const RatchetPath zero = solve_ratchet(0.0, SplitSurplusPolicy(), m, spec, label);
  for (std::size_t i = 0; i <= m.steps(); ++i) CHECK((zero.Y[i] == 0.0 && zero.pi[i] == 0.0));
}

TEST_CASE("fixed return under CIR is exact pathwise") {
  const std::vector<double> dates{0.0, 0.25, 0.5, 0.75, 1.0};
  const FixedReturnParameters fr = fixed_return_parameters(kCir, dates, 1.0);
  CHECK(fr.g > 0.0);
  const RatchetSpec spec{fr.gamma, fr.g, dates};
  const Classification label = classify(kCir, spec, 1.0);
  REQUIRE(label.label == RatchetCase::FixedReturn);
  for (std::uint64_t i = 0; i < 50; ++i) {
    const MarketPaths m = path(kCir, i);
    const RatchetPath p = solve_ratchet(1.0, SplitSurplusPolicy(), m, spec, label);
    CHECK(verify_terminal(p, m, spec).relative < 1e-12);
    CHECK(self_financing_residual(p.Y, p.pi, m) < 1e-14);
  }
}

TEST_CASE("surplus case meets the terminal condition and keeps surplus non-negative") {
  const RatchetSpec spec = quarterly(1.0);
  const Classification label = classify(kCir, spec, 1.0);
  std::size_t positive = 0;
  for (std::uint64_t i = 0; i < 200; ++i) {
    const MarketPaths m = path(kCir, i);
    const RatchetPath p = solve_ratchet(1.0, SplitSurplusPolicy(), m, spec, label);
    CHECK(verify_terminal(p, m, spec).relative < 1e-10);
    CHECK(self_financing_residual(p.Y, p.pi, m) < 1e-13);
    bool any = false;
    for (std::size_t k : p.anniversaries) {
      CHECK(p.surplus[k] >= -1e-12);
      if (k > 0 && k < m.steps() && p.surplus[k] > 1e-12) any = true;
    }
    // All-bond surplus leaves nothing above the reserve at T.
    CHECK(std::abs(p.surplus.back()) <= 1e-12 * p.X.back());
    positive += any;
  }
  CHECK(positive > 20);
}

TEST_CASE("split policy with cash also meets the terminal condition") {
  const RatchetSpec spec{1.0, 0.0, {0.0, 0.5, 1.0}};
  const Classification label = classify(kCir, spec, 1.0);
  for (std::uint64_t i = 0; i < 50; ++i) {
    const MarketPaths m = path(kCir, i);
    const RatchetPath p = solve_ratchet(1.0, SplitSurplusPolicy(0.3), m, spec, label);
    CHECK(verify_terminal(p, m, spec).relative < 1e-10);
    CHECK(p.max_budget_residual < 1e-15);
  }
}

TEST_CASE("zero-solution cases refuse positive capital") {
  for (const RatchetSpec& spec : {quarterly(1.05), quarterly(0.5)}) {
    const Classification label = classify(kCir, spec, 1.0);
    const MarketPaths m = path(kCir, 0);
    CHECK_THROWS_AS(solve_ratchet(1.0, SplitSurplusPolicy(), m, spec, label), ZeroSolutionOnly);
    const RatchetPath zero = solve_ratchet(0.0, SplitSurplusPolicy(), m, spec, label);
    CHECK(zero.Y.back() == 0.0);
  }
}

TEST_CASE("verifier catches a perturbed strategy and a discarded surplus") {
  const std::vector<double> dates{0.0, 0.5, 1.0};
  const FixedReturnParameters fr = fixed_return_parameters(kCir, dates, 1.0);
  const RatchetSpec spec{fr.gamma, fr.g, dates};
  const MarketPaths m = path(kCir, 3);
  const RatchetPath p = solve_ratchet(1.0, SplitSurplusPolicy(), m, spec, classify(kCir, spec, 1.0));
  const RatchetPath bad = perturb_strategy(p, m, 10, 0.01);
  CHECK(verify_terminal(bad, m, spec).relative > 1e-12);

  const RatchetSpec s3 = quarterly(1.0);
  const Classification label = classify(kCir, s3, 1.0);
  double worst = 0.0;
  for (std::uint64_t i = 0; i < 50; ++i) {
    worst = std::max(worst, solve_ratchet(1.0, DiscardSurplusPolicy(), path(kCir, i), s3, label).max_budget_residual);
  }
  CHECK(worst > 1e-12);
}

TEST_CASE("construction is linear in the initial value") {
  const RatchetSpec spec = quarterly(1.0);
  const Classification label = classify(kCir, spec, 1.0);
  const MarketPaths m = path(kCir, 7);
  const RatchetPath a = solve_ratchet(1.0, SplitSurplusPolicy(), m, spec, label);
  const RatchetPath b = solve_ratchet(3.0, SplitSurplusPolicy(), m, spec, label);
  for (std::size_t i = 0; i <= m.steps(); ++i) CHECK(b.Y[i] == doctest::Approx(3.0 * a.Y[i]).epsilon(1e-14));
}
