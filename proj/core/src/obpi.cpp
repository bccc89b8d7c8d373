#include "tdbsde/obpi.hpp"

#include <algorithm>
#include <cmath>

#include "tdbsde/errors.hpp"

namespace tdbsde {

void validate(const BenchmarkSpec& spec) {
  if (!(spec.weight >= 0.0 && spec.weight <= 1.0)) {
    throw InvalidInput("benchmark: bond weight must lie in [0, 1] (no leverage)");
  }
}

std::vector<double> simulate_benchmark(const BenchmarkSpec& spec, const MarketPaths& market) {
  validate(spec);
  const double w = spec.weight;
  std::vector<double> s(market.steps() + 1);
  s[0] = 1.0;
  for (std::size_t i = 0; i < market.steps(); ++i) {
    const double bond_growth = market.bond[i + 1] / market.bond[i];
    if (w == 1.0) {
      s[i + 1] = s[i] * bond_growth;
    } else if (w == 0.0) {
      s[i + 1] = s[i] * market.bank_growth(i);
    } else {
      s[i + 1] = s[i] * (w * bond_growth + (1.0 - w) * market.bank_growth(i));
    }
  }
  return s;
}

std::vector<BenchmarkTerminal> sample_benchmark_terminals(const ShortRateModel& model, const BenchmarkSpec& spec,
                                                          const EnsembleConfig& config) {
  validate(spec);
  std::vector<BenchmarkTerminal> out(config.paths);
  for_each_path(model, config, [&](std::size_t i, const MarketPaths& m) {
    out[i] = {m.discount.back(), simulate_benchmark(spec, m).back()};
  });
  return out;
}

namespace {

template <class Payoff>
Estimate discounted_mean(std::span<const BenchmarkTerminal> sample, bool antithetic, Payoff&& payoff) {
  if (sample.empty()) throw InvalidInput("option pricing: empty ensemble");
  std::vector<double> xs(sample.size());
  for (std::size_t i = 0; i < sample.size(); ++i) xs[i] = sample[i].discount * payoff(sample[i].value);
  const SampleSummary s = antithetic ? summarize_pairs(xs) : summarize(xs);
  return {s.mean, s.standard_error};
}

}  // namespace

Estimate price_call(std::span<const BenchmarkTerminal> sample, double strike, double scale, bool antithetic) {
  return discounted_mean(sample, antithetic, [&](double s) { return std::max(scale * s - strike, 0.0); });
}

Estimate price_put(std::span<const BenchmarkTerminal> sample, double strike, double scale, bool antithetic) {
  return discounted_mean(sample, antithetic, [&](double s) { return std::max(strike - scale * s, 0.0); });
}

double hedging_fee(double lambda, double maturity) {
  if (!(lambda > 0.0) || !(maturity > 0.0)) throw InvalidInput("hedging fee: need lambda > 0 and T > 0");
  return -std::log(lambda) / maturity;
}

ObpiSolution solve_participation(double bond_price, double maturity, std::span<const BenchmarkTerminal> sample,
                                 bool antithetic, const ObpiOptions& options) {
  if (sample.empty()) throw InvalidInput("participation: empty ensemble");
  if (!(bond_price < 1.0) || !(bond_price > 0.0)) {
    throw InvalidInput("participation: need 0 < D(0) < 1 so that an option budget exists");
  }
  if (!(options.bracket > 0.0) || !(options.tolerance > 0.0)) {
    throw InvalidInput("participation: bracket and tolerance must be positive");
  }
  auto residual = [&](double lambda) {
    return bond_price + price_call(sample, 1.0, lambda, antithetic).value - 1.0;
  };

  double lo = 0.0;
  double hi = options.bracket;  // S(0) = 1
  double f_lo = bond_price - 1.0;
  double f_hi = residual(hi);
  if (!(f_lo < 0.0 && f_hi >= 0.0)) {
    throw BracketError("participation: budget residual does not change sign on the bracket", lo, hi, f_lo, f_hi);
  }
  std::size_t it = 0;
  while (hi - lo > options.tolerance && it < options.max_iterations) {
    const double mid = 0.5 * (lo + hi);
    const double f_mid = residual(mid);
    if (f_mid < 0.0) {
      lo = mid;
      f_lo = f_mid;
    } else {
      hi = mid;
      f_hi = f_mid;
    }
    ++it;
  }
  // The residual is piecewise linear in lambda; one interpolation step inside
  // the final bracket lands on the root whenever no kink remains inside it.
  double lambda = hi;
  if (f_hi > f_lo) {
    const double guess = lo - f_lo * (hi - lo) / (f_hi - f_lo);
    if (guess > lo && guess <= hi && std::abs(residual(guess)) <= std::abs(f_hi)) lambda = guess;
  }

  ObpiSolution out;
  out.lambda = lambda;
  out.bond_price = bond_price;
  out.call = price_call(sample, 1.0, lambda, antithetic);
  out.put = price_put(sample, 1.0, lambda, antithetic);
  out.fee = hedging_fee(lambda, maturity);
  out.residual = bond_price + out.call.value - 1.0;
  out.bracket_lo = lo;
  out.bracket_hi = hi;
  out.iterations = it;

  // lambda S(0) + P - 1 = lambda - D(0) - E[lambda S~(T) - exp(-int r)] once
  // the budget equation holds; the pathwise term carries the noise.
  std::vector<double> parity(sample.size());
  for (std::size_t i = 0; i < sample.size(); ++i) {
    parity[i] = lambda * sample[i].discount * sample[i].value - sample[i].discount;
  }
  const SampleSummary ps = antithetic ? summarize_pairs(parity) : summarize(parity);
  out.parity = {lambda + out.put.value - 1.0, ps.standard_error};
  return out;
}

ObpiPositions scale_to_capital(const ObpiSolution& solution, double capital) {
  if (!(capital > 0.0)) throw InvalidInput("obpi: capital must be positive");
  return {solution.lambda, capital * solution.bond_price, capital * solution.call.value};
}

}  // namespace tdbsde
