#include "tdbsde/market.hpp"

#include <cmath>
#include <limits>
#include <ostream>

#include "tdbsde/errors.hpp"
#include "tdbsde/parallel.hpp"

namespace tdbsde {

double MarketPaths::discount_between(std::size_t k, std::size_t m) const {
  return std::exp(-(integrated_rate[m] - integrated_rate[k]));
}

double MarketPaths::bank_growth(std::size_t i) const {
  return std::exp(integrated_rate[i + 1] - integrated_rate[i]);
}

MarketPaths simulate_rate(const ShortRateModel& model, const BrownianPath& noise, Measure measure) {
  const TimeGrid& grid = noise.grid();
  const std::size_t n = grid.steps();
  const double dt = grid.dt();
  const double maturity = grid.maturity();
  const double theta = measure == Measure::P ? model.risk_premium() : 0.0;

  MarketPaths out{grid, measure, {}, {}, {}, {}, {}, {}};
  out.rate.resize(n + 1);
  out.integrated_rate.resize(n + 1);
  out.discount.resize(n + 1);
  out.bond.resize(n + 1);
  out.bond_vol.resize(n + 1);
  out.q_increments.resize(n);

  double state = model.r0();
  out.rate[0] = model.rate_of_state(state);
  for (std::size_t i = 0; i < n; ++i) {
    state = model.step(state, noise.increment(i), dt, measure);
    out.rate[i + 1] = model.rate_of_state(state);
    out.q_increments[i] = noise.increment(i) + theta * dt;
  }
  out.integrated_rate[0] = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    out.integrated_rate[i + 1] = out.integrated_rate[i] + 0.5 * (out.rate[i] + out.rate[i + 1]) * dt;
  }
  for (std::size_t i = 0; i <= n; ++i) {
    const double tau = grid.remaining(i);
    const double m = model.b(tau);
    out.discount[i] = std::exp(-out.integrated_rate[i]);
    // tau == 0 gives log_a == b == 0 and D == exp(0) == 1 exactly.
    out.bond[i] = std::exp(model.log_a(tau) - m * out.rate[i]);
    out.bond_vol[i] = -m * model.diffusion(out.rate[i]);
  }
  (void)maturity;
  return out;
}

BrownianPath ensemble_noise(const EnsembleConfig& config, std::size_t index) {
  if (!config.antithetic) return BrownianPath::sample(config.grid, config.seed, config.first_path + index);
  BrownianPath base = BrownianPath::sample(config.grid, config.seed, config.first_path / 2 + index / 2);
  return index % 2 == 0 ? base : base.antithetic();
}

void for_each_path(const ShortRateModel& model, const EnsembleConfig& config,
                   const std::function<void(std::size_t, const MarketPaths&)>& fn) {
  if (config.paths == 0) throw InvalidInput("ensemble: path count must be positive");
  if (config.antithetic && (config.paths % 2 != 0 || config.first_path % 2 != 0)) {
    throw InvalidInput("ensemble: antithetic ensembles need an even path count and offset");
  }
  parallel_for(config.paths, [&](std::size_t i) {
    const MarketPaths paths = simulate_rate(model, ensemble_noise(config, i), config.measure);
    fn(i, paths);
  });
}

std::vector<MarketPaths> simulate_ensemble(const ShortRateModel& model, const EnsembleConfig& config) {
  std::vector<MarketPaths> out(config.paths, MarketPaths{config.grid, config.measure, {}, {}, {}, {}, {}, {}});
  for_each_path(model, config, [&](std::size_t i, const MarketPaths& p) { out[i] = p; });
  return out;
}

namespace {

template <class F>
double simpson(F&& f, double a, double b, std::size_t intervals) {
  if (intervals % 2 != 0) ++intervals;
  const double h = (b - a) / static_cast<double>(intervals);
  double sum = f(a) + f(b);
  for (std::size_t k = 1; k < intervals; ++k) {
    sum += (k % 2 == 1 ? 4.0 : 2.0) * f(a + h * static_cast<double>(k));
  }
  return sum * h / 3.0;
}

}  // namespace

AnnuityValue annuity_factor(const ShortRateModel& model, double rate, double horizon, std::size_t intervals) {
  if (!(horizon > 0.0)) throw InvalidInput("annuity factor: horizon must be positive");
  if (intervals < 2) throw InvalidInput("annuity factor: need at least two Simpson intervals");
  AnnuityValue out;
  out.value = simpson([&](double tau) { return model.bond_price(tau, rate); }, 0.0, horizon, intervals);
  const double end_price = model.bond_price(horizon, rate);
  const double yield = -std::log(end_price) / horizon;
  out.tail_estimate = yield > 0.0 ? end_price / yield : std::numeric_limits<double>::infinity();
  return out;
}

double deferred_annuity(const ShortRateModel& model, double rate, double delay, double horizon,
                        std::size_t intervals) {
  if (!(horizon > 0.0) || delay < 0.0) throw InvalidInput("deferred annuity: need horizon > 0 and delay >= 0");
  return simpson([&](double tau) { return model.bond_price(tau, rate); }, delay, delay + horizon, intervals);
}

AssumptionReport check_assumptions(const ShortRateModel& model, const TimeGrid& grid,
                                   std::size_t sample_size, std::uint64_t seed) {
  if (sample_size == 0) throw InvalidInput("check_assumptions: sample size must be at least 1");
  struct PathStats {
    std::size_t negative = 0;
    std::size_t at_or_above_one = 0;
    double min_bond = 0.0;
    double max_bond = 0.0;
    double max_vol = 0.0;
    bool terminal_exact = true;
  };
  std::vector<PathStats> stats(sample_size);
  EnsembleConfig config{grid, Measure::P, sample_size, seed, 0, false};
  for_each_path(model, config, [&](std::size_t p, const MarketPaths& m) {
    PathStats s;
    s.min_bond = std::numeric_limits<double>::infinity();
    s.max_bond = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i <= grid.steps(); ++i) {
      if (m.rate[i] < 0.0) ++s.negative;
      s.min_bond = std::min(s.min_bond, m.bond[i]);
      s.max_vol = std::max(s.max_vol, std::abs(m.bond_vol[i]));
      if (i < grid.steps()) {
        s.max_bond = std::max(s.max_bond, m.bond[i]);
        if (m.bond[i] >= 1.0) ++s.at_or_above_one;
      }
    }
    s.terminal_exact = m.bond[grid.steps()] == 1.0;
    stats[p] = s;
  });

  AssumptionReport report;
  report.paths = sample_size;
  report.rate_samples = sample_size * (grid.steps() + 1);
  report.min_bond = std::numeric_limits<double>::infinity();
  report.max_bond_before_maturity = -std::numeric_limits<double>::infinity();
  std::size_t negative = 0;
  for (const auto& s : stats) {
    negative += s.negative;
    report.bond_at_or_above_one += s.at_or_above_one;
    report.min_bond = std::min(report.min_bond, s.min_bond);
    report.max_bond_before_maturity = std::max(report.max_bond_before_maturity, s.max_bond);
    report.max_abs_bond_vol = std::max(report.max_abs_bond_vol, s.max_vol);
    report.terminal_bond_exact = report.terminal_bond_exact && s.terminal_exact;
  }
  report.negative_rate_fraction = static_cast<double>(negative) / static_cast<double>(report.rate_samples);
  // The risk premium is a constant, hence uniformly bounded.
  report.risk_premium_bounded = std::isfinite(model.risk_premium());
  return report;
}

double self_financing_residual(const std::vector<double>& y, const std::vector<double>& pi,
                               const MarketPaths& market) {
  double worst = 0.0;
  for (std::size_t i = 0; i < market.steps(); ++i) {
    const double units = pi[i] / market.bond[i];
    const double gain = units * (market.discounted_bond(i + 1) - market.discounted_bond(i));
    worst = std::max(worst, std::abs(y[i + 1] - y[i] - gain));
  }
  return worst;
}

void write_market_csv_header(std::ostream& out) { out << "path_id,t,r,discount,D,sigma\n"; }

void write_market_csv(std::ostream& out, std::size_t path_id, const MarketPaths& paths) {
  for (std::size_t i = 0; i <= paths.steps(); ++i) {
    out << path_id << ',' << paths.grid.time(i) << ',' << paths.rate[i] << ',' << paths.discount[i] << ','
        << paths.bond[i] << ',' << paths.bond_vol[i] << '\n';
  }
}

}  // namespace tdbsde
