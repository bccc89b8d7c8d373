#include <doctest.h>

#include <cmath>

#include "tdbsde/errors.hpp"
#include "tdbsde/obpi.hpp"
#include "tdbsde/stats.hpp"

using namespace tdbsde;

namespace {

const ShortRateModel kCir = ShortRateModel::cir(0.5, 0.04, 0.1, 0.04);

EnsembleConfig config(std::size_t paths, std::uint64_t seed, bool antithetic = false) {
  return {TimeGrid(1.0, 64), Measure::Q, paths, seed, 0, antithetic};
}

}  // namespace

TEST_CASE("benchmark extremes") {
  const MarketPaths m = simulate_rate(kCir, BrownianPath::sample(TimeGrid(1.0, 64), 1, 0), Measure::Q);
  const auto bank = simulate_benchmark({0.0}, m);
  const auto bond = simulate_benchmark({1.0}, m);
  for (std::size_t i = 0; i <= m.steps(); ++i) {
    CHECK(bank[i] * m.discount[i] == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(bond[i] == doctest::Approx(m.bond[i] / m.bond[0]).epsilon(1e-13));
  }
  CHECK_THROWS_AS(simulate_benchmark({1.5}, m), InvalidInput);
}

TEST_CASE("discounted benchmark has unit expectation") {
  const auto sample = sample_benchmark_terminals(kCir, {0.6}, config(100000, 3));
  std::vector<double> x(sample.size());
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = sample[i].discount * sample[i].value;
  const SampleSummary s = summarize(x);
  CHECK(std::abs(s.mean - 1.0) < 3.0 * s.standard_error);
}

TEST_CASE("option pricing edge cases") {
  const auto sample = sample_benchmark_terminals(kCir, {0.6}, config(20000, 4));
  CHECK(price_call(sample, 1.0, 0.0, false).value == 0.0);
  const Estimate forward = price_call(sample, 0.0, 1.0, false);
  CHECK(std::abs(forward.value - 1.0) < 4.0 * forward.standard_error);
}

TEST_CASE("call price agrees with an independent second-seed estimate") {
  const auto a = sample_benchmark_terminals(kCir, {0.6}, config(100000, 10));
  const auto b = sample_benchmark_terminals(kCir, {0.6}, config(400000, 11));
  const Estimate ca = price_call(a, 1.0, 1.2, false);
  const Estimate cb = price_call(b, 1.0, 1.2, false);
  CHECK(std::abs(ca.value - cb.value) < 3.0 * std::hypot(ca.standard_error, cb.standard_error));
}

TEST_CASE("deterministic all-bond benchmark gives full participation") {
  const ShortRateModel flat = ShortRateModel::constant(0.05);
  const auto sample = sample_benchmark_terminals(flat, {1.0}, config(16, 1));
  const ObpiSolution s = solve_participation(flat.bond_price(1.0, 0.05), 1.0, sample, false);
  CHECK(s.lambda == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(std::abs(s.residual) < 1e-14);
}

TEST_CASE("participation does not depend on capital") {
  const auto sample = sample_benchmark_terminals(kCir, {0.6}, config(4000, 5, true));
  const double d0 = kCir.bond_price(1.0, 0.04);
  const ObpiSolution s = solve_participation(d0, 1.0, sample, true);
  const ObpiPositions one = scale_to_capital(s, 1.0);
  const ObpiPositions hundred = scale_to_capital(s, 100.0);
  CHECK(one.lambda == hundred.lambda);
  CHECK(hundred.bond_amount == doctest::Approx(100.0 * one.bond_amount));
  CHECK(std::abs(s.parity.value) < 4.0 * s.parity.standard_error + 1e-12);
  CHECK(s.fee == -std::log(s.lambda));
  CHECK(s.lambda > 0.0);
}

TEST_CASE("participation falls as rate volatility rises") {
  double previous = std::numeric_limits<double>::infinity();
  for (double sigma : {0.02, 0.1, 0.2}) {
    const ShortRateModel m = ShortRateModel::cir(0.5, 0.04, sigma, 0.04);
    const auto sample = sample_benchmark_terminals(m, {0.6}, config(20000, 8));
    const double lambda = solve_participation(m.bond_price(1.0, 0.04), 1.0, sample, false).lambda;
    CHECK(lambda < previous);
    previous = lambda;
  }
}

TEST_CASE("hedging fee identity") {
  CHECK(hedging_fee(std::exp(-0.02 * 5.0), 5.0) == doctest::Approx(0.02).epsilon(1e-15));
  CHECK_THROWS_AS(hedging_fee(0.0, 1.0), InvalidInput);
}

TEST_CASE("solver preconditions") {
  const auto sample = sample_benchmark_terminals(kCir, {0.6}, config(100, 5));
  CHECK_THROWS_AS(solve_participation(1.0, 1.0, sample, false), InvalidInput);
  ObpiOptions narrow;
  narrow.bracket = 0.5;
  CHECK_THROWS_AS(solve_participation(0.96, 1.0, sample, false, narrow), BracketError);
}
