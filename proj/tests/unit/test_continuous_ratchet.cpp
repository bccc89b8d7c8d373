#include <doctest.h>

#include <cmath>

#include "tdbsde/continuous_ratchet.hpp"
#include "tdbsde/errors.hpp"
#include "tdbsde/stats.hpp"

using namespace tdbsde;

namespace {

const ShortRateModel kCir = ShortRateModel::cir(0.5, 0.04, 0.1, 0.04);

MarketPaths path(const ShortRateModel& m, const TimeGrid& g, std::uint64_t index) {
  return simulate_rate(m, BrownianPath::sample(g, 42, index), Measure::Q);
}

}  // namespace

TEST_CASE("feasibility extremes") {
  const TimeGrid g(1.0, 64);
  const FeasibilityReport lock = check_feasibility(kCir, DrawdownSpec{}, g, 500, 1);
  CHECK(lock.lock_in_certain);
  CHECK(lock.shortfall_probability == 0.0);
  CHECK(lock.lock_in_probability == 1.0);

  DrawdownSpec over;
  over.gamma = 1.01;
  const FeasibilityReport s = check_feasibility(kCir, over, g, 500, 1);
  CHECK(s.shortfall_certain);
  CHECK(s.shortfall_probability == 1.0);

  DrawdownSpec mid;
  mid.gamma = 0.9;
  mid.g = 0.02;
  const FeasibilityReport m = check_feasibility(kCir, mid, g, 20000, 1);
  CHECK(m.shortfall_lo <= m.shortfall_probability);
  CHECK(m.shortfall_probability <= m.shortfall_hi);
  CHECK(m.shortfall_hi - m.shortfall_lo < 0.02);
}

TEST_CASE("CIR infeasibility witness") {
  const TimeGrid g(1.0, 256);
  const WitnessSearch w = cir_infeasibility_witness(kCir, 0.0, g, 10000, 42);
  REQUIRE(w.found);
  CHECK(w.rate < w.barrier);
  CHECK(w.gamma == doctest::Approx(1.0 / kCir.bond_price(1.0, 0.04)));
  // Reproducible from the reported seed and path index.
  const MarketPaths m = simulate_rate(kCir, BrownianPath::sample(g, w.seed, w.path_index), Measure::P);
  CHECK(m.rate[w.node] == w.rate);
  CHECK(w.gamma * m.bond[w.node] > 1.0);

  // A frozen rate accretes the bond surely unless g covers it.
  const ShortRateModel frozen = ShortRateModel::cir(0.5, 0.04, 0.0, 0.04);
  CHECK(cir_infeasibility_witness(frozen, 0.0, g, 1, 1).found);
  CHECK_FALSE(cir_infeasibility_witness(frozen, 0.05, g, 100, 1).found);
  const WitnessSearch steep = cir_infeasibility_witness(kCir, 1.0, g, 200, 1);
  CHECK_FALSE(steep.found);
  CHECK(steep.min_margin > 0.0);
}

TEST_CASE("drawdown constraint and Skorohod invariants hold pathwise") {
  const TimeGrid g(1.0, 512);
  for (double u : {0.5, 1.0}) {
    DrawdownSpec spec;
    spec.fund_bond_weight = u;
    for (std::uint64_t i = 0; i < 40; ++i) {
      const MarketPaths m = path(kCir, g, i);
      const DrawdownPath p = construct_drawdown_portfolio(1.0, spec, m);
      const DrawdownVerification v = verify_drawdown(p, m, spec);
      CHECK(v.violations == 0);
      CHECK_MESSAGE(v.skorohod_ok, v.skorohod_failure);
      CHECK(v.running_max_bound_ok);
      CHECK(v.psi_bound_ok);
      CHECK(v.terminal_residual <= 1e-12);
    }
  }
}

TEST_CASE("doubling the capital doubles the portfolio") {
  const TimeGrid g(1.0, 256);
  const MarketPaths m = path(kCir, g, 5);
  const DrawdownPath a = construct_drawdown_portfolio(1.0, DrawdownSpec{}, m);
  const DrawdownPath b = construct_drawdown_portfolio(2.0, DrawdownSpec{}, m);
  for (std::size_t i = 0; i <= g.steps(); ++i) CHECK(b.X[i] == doctest::Approx(2.0 * a.X[i]).epsilon(1e-13));
}

TEST_CASE("deterministic rate, bank-account fund") {
  // R is constant, K = L, and V = M rho; M(T) solves
  //   log M(T) = log V(0) + int (1 - gamma D(t)) dK(t).
  const double r = 0.05, gamma = 0.5;
  const ShortRateModel flat = ShortRateModel::constant(r);
  const TimeGrid g(1.0, 4096);
  DrawdownSpec spec;
  spec.gamma = gamma;
  spec.fund_bond_weight = 0.0;
  const MarketPaths m = path(flat, g, 0);
  const DrawdownPath p = construct_drawdown_portfolio(1.0, spec, m);
  const double d0 = std::exp(-r);
  const double c0 = gamma * d0;
  for (std::size_t i = 0; i <= g.steps(); i += 256) {
    const double rho = d0 / m.bond[i];
    CHECK(p.V[i] == doctest::Approx(p.M[i] * rho).epsilon(1e-12));
  }
  const std::size_t q = 200000;
  double integral = 0.0;
  for (std::size_t k = 0; k < q; ++k) {
    const double t = (k + 0.5) / q;
    const double dk = r * std::exp(-r * t) / (std::exp(-r * t) - c0);
    integral += (1.0 - gamma * std::exp(-r * (1.0 - t))) * dk / q;
  }
  const double expected = std::exp(integral) / d0;
  CHECK(p.M.back() == doctest::Approx(expected).epsilon(1e-3));
  CHECK(p.locked_at == kNotLocked);
}

TEST_CASE("reserve-only portfolio satisfies the constraint") {
  const TimeGrid g(1.0, 128);
  const MarketPaths m = path(kCir, g, 1);
  const double d0 = m.bond[0];
  std::vector<double> X(g.steps() + 1);
  for (std::size_t i = 0; i <= g.steps(); ++i) X[i] = m.bond[i] / d0;
  const auto slack = constraint_slack(X, m, d0, 0.0);
  for (double s : slack) CHECK(s >= -1e-14);
}

TEST_CASE("lock-in gap shrinks under refinement") {
  DrawdownSpec spec;
  std::vector<double> medians;
  for (std::size_t n : {256, 1024, 4096}) {
    const TimeGrid g(1.0, n);
    std::vector<double> gaps;
    for (std::uint64_t i = 0; i < 60; ++i) {
      const BrownianPath coarse = BrownianPath::sample(TimeGrid(1.0, 256), 42, i);
      BrownianPath noise = coarse;
      for (unsigned level = 0; noise.grid().steps() < n; ++level) noise = noise.refined(42, i, level);
      const MarketPaths m = simulate_rate(kCir, noise, Measure::Q);
      gaps.push_back(verify_drawdown(construct_drawdown_portfolio(1.0, spec, m), m, spec).relative_gap);
    }
    medians.push_back(quantile(gaps, 0.5));
  }
  CHECK(medians[1] < medians[0]);
  CHECK(medians[2] < medians[1]);
}

TEST_CASE("unfair parameters fail the terminal condition") {
  const TimeGrid g(1.0, 512);
  DrawdownSpec spec;
  spec.gamma = 0.5;
  std::size_t off = 0;
  for (std::uint64_t i = 0; i < 50; ++i) {
    const MarketPaths m = path(kCir, g, i);
    off += verify_drawdown(construct_drawdown_portfolio(1.0, spec, m), m, spec).relative_gap > 0.05;
  }
  CHECK(off > 0);
}

TEST_CASE("spec validation") {
  DrawdownSpec bad;
  bad.fund_bond_weight = 1.5;
  CHECK_THROWS_AS(validate(bad), InvalidInput);
  bad = DrawdownSpec{};
  bad.gamma = 0.0;
  CHECK_THROWS_AS(validate(bad), InvalidInput);
}
