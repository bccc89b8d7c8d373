#include <benchmark/benchmark.h>

#include <random>

#include "tdbsde/continuous_ratchet.hpp"
#include "tdbsde/market.hpp"
#include "tdbsde/skorohod.hpp"
#include "tdbsde/withdrawal.hpp"

using namespace tdbsde;

namespace {

const ShortRateModel kCir = ShortRateModel::cir(0.5, 0.04, 0.1, 0.04);

void BM_SimulateRate(benchmark::State& state) {
  const TimeGrid grid(1.0, static_cast<std::size_t>(state.range(0)));
  std::uint64_t p = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(simulate_rate(kCir, BrownianPath::sample(grid, 42, p++), Measure::Q));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_SimulateRate)->Arg(256)->Arg(4096);

void BM_Skorohod(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  std::mt19937_64 rng(7);
  std::normal_distribution<double> normal(0.0, 0.01);
  std::vector<double> x(n + 1, 0.0);
  for (std::size_t i = 1; i <= n; ++i) x[i] = x[i - 1] + normal(rng);
  for (auto _ : state) benchmark::DoNotOptimize(skorohod_map(x));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Skorohod)->Arg(1 << 14);

void BM_DrawdownConstruction(benchmark::State& state) {
  const TimeGrid grid(1.0, static_cast<std::size_t>(state.range(0)));
  const MarketPaths m = simulate_rate(kCir, BrownianPath::sample(grid, 42, 0), Measure::Q);
  const DrawdownSpec spec;
  for (auto _ : state) benchmark::DoNotOptimize(construct_drawdown_portfolio(1.0, spec, m));
}
BENCHMARK(BM_DrawdownConstruction)->Arg(1 << 14);

void BM_Picard(benchmark::State& state) {
  WithdrawalSpec spec;
  const WalkTree tree = build_tree(kCir, spec, static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(solve_picard(tree, spec, 1e-10, 100));
}
BENCHMARK(BM_Picard)->Arg(10)->Arg(12)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
