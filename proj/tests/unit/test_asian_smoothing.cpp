#include <doctest.h>

#include <cmath>
#include <string>

#include "tdbsde/asian_smoothing.hpp"
#include "tdbsde/errors.hpp"
#include "tdbsde/stats.hpp"

using namespace tdbsde;

namespace {

const ShortRateModel kCir = ShortRateModel::cir(0.5, 0.04, 0.1, 0.04);
const ShortRateModel kVas = ShortRateModel::vasicek(0.1, 0.05, 0.01, 0.05);

MarketPaths path(const ShortRateModel& m, std::size_t n, std::uint64_t index) {
  return simulate_rate(m, BrownianPath::sample(TimeGrid(1.0, n), 42, index), Measure::Q);
}

SmoothingSpec scaled(double beta, double gamma, double w = 0.5) {
  return {beta, gamma, BenchmarkSpec{w}, SmoothingVariant::Scaled};
}

SmoothingSpec fixed(double beta, double gamma, double w = 0.5) {
  return {beta, gamma, BenchmarkSpec{w}, SmoothingVariant::Fixed};
}

}  // namespace

TEST_CASE("solvability conditions") {
  CHECK_NOTHROW(validate(scaled(0.6, 0.4)));
  try {
    validate(scaled(0.6, 0.5));
    FAIL("expected a condition error");
  } catch (const ZeroSolutionOnly& e) {
    CHECK(std::string(e.what()).find("betaE[S~]+gamma=1") != std::string::npos);
  }
  try {
    validate(fixed(0.5, 1.0));
    FAIL("expected no solution");
  } catch (const NoSolution& e) {
    CHECK(std::string(e.what()).find("no solution") != std::string::npos);
  }
}

TEST_CASE("integrand of a pure bank benchmark vanishes") {
  const MarketPaths m = path(kCir, 64, 0);
  const auto s = discounted_benchmark({0.0}, m);
  const auto M = martingale_integrand(s, 0.0, m, 1.0);
  for (std::size_t i = 0; i <= m.steps(); ++i) {
    CHECK(s[i] == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(M[i] == 0.0);
  }
  CHECK(reconstruction_residual(s, M, m, 1.0) < 1e-14);
}

TEST_CASE("integrand is linear in the scale") {
  const MarketPaths m = path(kVas, 64, 1);
  const auto s = discounted_benchmark({1.0}, m);
  const auto one = martingale_integrand(s, 1.0, m, 1.0);
  const auto two = martingale_integrand(s, 1.0, m, 2.0);
  for (std::size_t i = 0; i < one.size(); ++i) CHECK(two[i] == 2.0 * one[i]);
}

TEST_CASE("martingale representation converges under refinement") {
  std::vector<double> err;
  for (std::size_t n : {256, 1024, 4096}) {
    std::vector<double> r;
    for (std::uint64_t i = 0; i < 100; ++i) {
      BrownianPath noise = BrownianPath::sample(TimeGrid(1.0, 256), 42, i);
      for (unsigned level = 0; noise.grid().steps() < n; ++level) noise = noise.refined(42, i, level);
      const MarketPaths m = simulate_rate(kVas, noise, Measure::Q);
      const auto s = discounted_benchmark({1.0}, m);
      r.push_back(reconstruction_residual(s, martingale_integrand(s, 1.0, m, 1.0), m, 1.0));
    }
    err.push_back(summarize(r).max);
  }
  CHECK(empirical_order(err[0], err[2]) / 2.0 >= 0.5);
}

TEST_CASE("smoothing weight derivative matches finite differences") {
  for (double gamma : {0.0, 0.4, 0.9}) {
    for (double t : {0.0, 0.2, 0.5, 0.9}) {
      const double h = 1e-6;
      const double fd = (smoothing_weight(t + h, 1.0, gamma) - smoothing_weight(t - h, 1.0, gamma)) / (2.0 * h);
      CHECK(std::abs(fd - smoothing_weight_derivative(t, 1.0, gamma)) < 1e-6);
      CHECK(smoothing_weight_derivative(t, 1.0, gamma) < 0.0);
    }
  }
}

TEST_CASE("zero initial value gives the zero solution") {
  const MarketPaths m = path(kCir, 64, 2);
  const SmoothingSolution s = solve_scaled(0.0, scaled(0.6, 0.4), m);
  for (std::size_t i = 0; i <= m.steps(); ++i) CHECK((s.Y[i] == 0.0 && s.Z[i] == 0.0));
}

TEST_CASE("pure averaging claim keeps a constant value") {
  const MarketPaths m = path(kCir, 64, 3);
  const SmoothingSolution s = solve_scaled(2.0, scaled(0.0, 1.0), m);
  for (std::size_t i = 0; i <= m.steps(); ++i) {
    CHECK(s.Y[i] == 2.0);
    CHECK(s.Z[i] == 0.0);
  }
  CHECK(s.running_avg.back() == doctest::Approx(2.0).epsilon(1e-14));
  CHECK(verify_average_identities(s, scaled(0.0, 1.0), m).terminal_residual < 1e-14);
}

TEST_CASE("fixed claim initial values") {
  const MarketPaths m = path(kCir, 64, 4);
  CHECK(solve_fixed(fixed(0.5, 0.5), m).y0 == 1.0);
  const SmoothingSolution plain = solve_fixed(fixed(0.7, 0.0), m);
  CHECK(plain.y0 == 0.7);
  // gamma = 0: replication of beta S~(T), Z = M.
  for (std::size_t i = 0; i <= m.steps(); ++i) CHECK(plain.Z[i] == doctest::Approx(plain.M[i]).epsilon(1e-14));
}

TEST_CASE("scaled claim identities on Vasicek paths") {
  const SmoothingSpec spec = scaled(0.6, 0.4);
  std::vector<double> terminal, fubini;
  for (std::uint64_t i = 0; i < 200; ++i) {
    const MarketPaths m = path(kVas, 1024, i);
    const SmoothingSolution s = solve_scaled(1.0, spec, m);
    const AverageIdentities id = verify_average_identities(s, spec, m);
    terminal.push_back(id.terminal_residual);
    fubini.push_back(id.fubini_residual);
    CHECK(id.average_positive);
    CHECK(id.value_positive);
    // Exact against the Ito-sum benchmark, so the gap is the benchmark's own
    // discretisation residual.
    CHECK(bonus_decomposition_gap(s, spec, m) <= reconstruction_residual(s.benchmark, s.M, m, s.scale) + 1e-12);
  }
  CHECK(summarize(terminal).mean < 1e-3);
  CHECK(summarize(fubini).mean < 1e-3);
}

TEST_CASE("discounted value is a martingale") {
  const SmoothingSpec spec = scaled(0.6, 0.4);
  std::vector<double> yT(4000);
  for (std::uint64_t i = 0; i < yT.size(); ++i) yT[i] = solve_scaled(1.0, spec, path(kCir, 64, i)).Y.back();
  const SampleSummary s = summarize(yT);
  CHECK(std::abs(s.mean - 1.0) < 4.0 * s.standard_error);
}
