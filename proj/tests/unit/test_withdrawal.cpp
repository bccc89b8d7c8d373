#include <doctest.h>

#include <cmath>

#include "tdbsde/errors.hpp"
#include "tdbsde/withdrawal.hpp"

using namespace tdbsde;

namespace {

const ShortRateModel kCir = ShortRateModel::cir(0.5, 0.04, 0.1, 0.04);

WithdrawalSpec spec(double gamma, double horizon = 20.0) {
  WithdrawalSpec s;
  s.gamma = gamma;
  s.horizon = horizon;
  return s;
}

}  // namespace

TEST_CASE("tree layout") {
  const ShortRateModel flat = ShortRateModel::constant(0.05);
  const WalkTree t1 = build_tree(flat, spec(0.05), 1);
  CHECK(t1.node_count() == 3);
  const double leaf = std::exp(-0.05) * (1.0 - std::exp(-1.0)) / 0.05;
  CHECK(t1.leaf_annuity.size() == 2);
  for (double a : t1.leaf_annuity) CHECK(a == doctest::Approx(leaf).epsilon(1e-10));
  CHECK(build_tree(kCir, spec(0.05), 10).node_count() == 2047);
  CHECK_THROWS_AS(build_tree(kCir, spec(0.05), 0), InvalidInput);
  CHECK_THROWS_AS(build_tree(kCir, spec(0.05), 17), BudgetExceeded);
}

TEST_CASE("without the delay term one step is exact") {
  const WalkTree t = build_tree(kCir, spec(0.0), 6);
  const PicardSolution s = solve_picard(t, spec(0.0), 1e-12, 10);
  double mean = 0.0;
  for (double a : t.leaf_annuity) mean += a;
  mean /= static_cast<double>(t.leaf_annuity.size());
  CHECK(s.root() == doctest::Approx(mean).epsilon(1e-14));
  CHECK(s.iterations <= 2);
}

TEST_CASE("zero rate: scalar fixed point") {
  const ShortRateModel zero = ShortRateModel::constant(0.0);
  const WithdrawalSpec sp = spec(0.1, 10.0);
  const WalkTree t = build_tree(zero, sp, 4);
  const PicardSolution s = solve_picard(t, sp, 1e-13, 100);
  const double y0 = 10.0 / (1.0 - 0.1);
  CHECK(s.root() == doctest::Approx(y0).epsilon(1e-12));
  // Later nodes carry the remaining part of the delay term.
  for (std::size_t level = 0; level <= 4; ++level) {
    const double expected = 10.0 + 0.1 * t.grid.remaining(level) * y0;
    CHECK(s.values[WalkTree::level_start(level)] == doctest::Approx(expected).epsilon(1e-12));
  }
  for (std::size_t i = 1; i < s.deltas.size(); ++i) {
    if (s.deltas[i - 1] > 1e-6) CHECK(s.deltas[i] / s.deltas[i - 1] <= doctest::Approx(0.1).epsilon(1e-6));
  }
}

TEST_CASE("flat positive rate: closed form at depth 10") {
  const double r = 0.02, gamma = 0.05;
  const ShortRateModel flat = ShortRateModel::constant(r);
  const WithdrawalSpec sp = spec(gamma);
  const WalkTree t = build_tree(flat, sp, 10);
  const PicardSolution s = solve_picard(t, sp, 1e-13, 100);
  const double leaf = std::exp(-r) * (1.0 - std::exp(-r * sp.horizon)) / r;
  double factor = 0.0;
  for (std::size_t j = 0; j < 10; ++j) factor += t.grid.dt() * std::exp(-r * t.grid.time(j));
  CHECK(std::abs(s.root() - leaf / (1.0 - gamma * factor)) < 1e-10 * s.root());
}

TEST_CASE("contraction and non-contraction") {
  const WalkTree t = build_tree(kCir, spec(0.05), 10);
  const PicardSolution s = solve_picard(t, spec(0.05), 1e-10, 100);
  CHECK(s.converged);
  CHECK(s.iterations <= 10);
  CHECK(s.contraction_ratio <= 0.06);
  CHECK(fixed_point_residual(t, spec(0.05), s.values) < 1e-9);

  const ShortRateModel flat = ShortRateModel::constant(0.0);
  const WalkTree f = build_tree(flat, spec(1.5), 6);
  try {
    solve_picard(f, spec(1.5), 1e-10, 200);
    FAIL("expected non-contraction");
  } catch (const NonConvergence& e) {
    CHECK(e.contraction_ratio >= 1.0);
    CHECK(e.deltas.size() >= 3);
  }
}

TEST_CASE("running sup carries the discounted maximum") {
  const WalkTree t = build_tree(kCir, spec(0.05), 3);
  std::vector<double> v(t.node_count(), 1.0);
  v[0] = 5.0;
  const auto q = running_sup(t, v);
  for (std::size_t id = 1; id < q.size(); ++id) {
    CHECK(q[id] == doctest::Approx(std::max(1.0, 5.0 * std::exp(-t.integrated_rate[id]))).epsilon(1e-14));
  }
}

TEST_CASE("nested Monte Carlo matches the tree iterate") {
  const WithdrawalSpec sp = spec(0.05);
  const WalkTree coarse = build_tree(kCir, sp, 7);
  const WalkTree fine = build_tree(kCir, sp, 8);
  const PicardSolution a = solve_picard(coarse, sp, 1e-10, 50);
  const PicardSolution b = solve_picard(fine, sp, 1e-10, 50);
  for (std::size_t it : {1, 2}) {
    NestedMcOptions opt;
    opt.iteration = it;
    opt.steps = 8;
    opt.paths = 20000;
    opt.seed = 3;
    const NestedMcEstimate mc = nested_mc_oracle(kCir, sp, opt);
    const double band = 3.0 * mc.standard_error + std::abs(b.root_history[it] - a.root_history[it]);
    CHECK(std::abs(b.root_history[it] - mc.value) <= band);
  }
  NestedMcOptions huge;
  huge.iteration = 3;
  huge.paths = 1000000;
  CHECK_THROWS_AS(nested_mc_oracle(kCir, sp, huge), BudgetExceeded);
}

TEST_CASE("locked-in variant only has the zero solution") {
  CHECK_THROWS_AS(solve_locked_in_withdrawal(kCir, spec(0.05)), ZeroSolutionOnly);
}
