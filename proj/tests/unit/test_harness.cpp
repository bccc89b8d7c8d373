#include <doctest.h>

#include <cmath>

#include "tdbsde/errors.hpp"
#include "tdbsde/harness.hpp"

using namespace tdbsde;

namespace {

const ShortRateModel kCir = ShortRateModel::cir(0.5, 0.04, 0.1, 0.04);

}  // namespace

TEST_CASE("residual statistics") {
  const ResidualStats s = residual_stats({1.0, 2.0, 3.0, 4.0, 5.0});
  CHECK(s.mean == 3.0);
  CHECK(s.max == 5.0);
  CHECK(s.q50 == 3.0);
  CHECK(s.q90 == doctest::Approx(4.6));
}

TEST_CASE("checkpoints") {
  CHECK(default_checkpoints(4, 512) == std::vector<std::size_t>{0, 1, 2, 3, 4});
  const auto c = default_checkpoints(1024, 64);
  CHECK(c.front() == 0);
  CHECK(c.back() == 1024);
  CHECK(c.size() == 65);
}

TEST_CASE("martingale sampler flags a drift") {
  MartingaleSampler flat(400, {0, 1});
  MartingaleSampler drift(400, {0, 1});
  for (std::size_t p = 0; p < 400; ++p) {
    const double noise = (p % 2 == 0 ? 1.0 : -1.0) * 0.01 * static_cast<double>(p % 7);
    flat.record(p, {1.0, 1.0 + noise});
    drift.record(p, {1.0, 1.01 + noise});
  }
  CHECK(flat.max_drift(false) < 1.0);
  CHECK(drift.max_drift(false) > 4.0);
}

TEST_CASE("market report passes on risk-neutral paths") {
  EnsembleConfig cfg{TimeGrid(1.0, 64), Measure::Q, 2000, 1, 0, true};
  const HedgeReport r = run_market_report(kCir, cfg);
  CHECK(r.passed());
  CHECK(r.constraint_violations == 0);
  const auto j = r.to_json();
  CHECK(j["schema_version"] == kReportSchemaVersion);
  CHECK(j.dump() == run_market_report(kCir, cfg).to_json().dump());
}

TEST_CASE("tolerance defaults") {
  CHECK(default_tolerances("ratchet-discrete-fixed-return").terminal_relative == 1e-12);
  CHECK(default_tolerances("asian").asian_terminal == 1e-3);
}

TEST_CASE("convergence study orders are per doubling") {
  // Metric 1/n has order exactly 1 per doubling.
  const PathMetric inverse = [](const MarketPaths& m) { return 1.0 / static_cast<double>(m.steps()); };
  const ConvergenceTable t = run_convergence_study(kCir, 1.0, {16, 64, 128}, 4, 1, "inverse", inverse, Aggregate::Max);
  REQUIRE(t.rows.size() == 3);
  CHECK_FALSE(t.rows[0].order.has_value());
  CHECK(*t.rows[1].order == doctest::Approx(1.0));
  CHECK(*t.rows[2].order == doctest::Approx(1.0));
  CHECK(t.monotone_fraction == 1.0);
  CHECK(t.to_csv().rfind("steps,metric,order\n16,", 0) == 0);
  CHECK_THROWS_AS(run_convergence_study(kCir, 1.0, {16, 24}, 4, 1, "x", inverse, Aggregate::Max), InvalidInput);
  CHECK_THROWS_AS(run_convergence_study(kCir, 1.0, {16, 1 << 20}, 4, 1, "x", inverse, Aggregate::Max, 1e3),
                  BudgetExceeded);
}

TEST_CASE("coupled refinement shrinks the Asian residual") {
  const SmoothingSpec spec{0.6, 0.4, BenchmarkSpec{0.5}, SmoothingVariant::Scaled};
  const ConvergenceTable t = run_convergence_study(kCir, 1.0, {128, 256, 512}, 100, 2, "asian",
                                                   asian_terminal_metric(spec, 1.0), Aggregate::Mean);
  CHECK(t.rows[2].metric < t.rows[0].metric);
  CHECK(*t.rows[2].order >= 0.5);
}

TEST_CASE("every negative control is detected") {
  const auto controls = run_negative_controls(7);
  CHECK(controls.size() >= 6);
  for (const auto& c : controls) CHECK_MESSAGE(c.detected, c.module << ": " << c.description);
}
