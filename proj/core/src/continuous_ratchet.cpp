#include "tdbsde/continuous_ratchet.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "tdbsde/errors.hpp"
#include "tdbsde/obpi.hpp"

namespace tdbsde {

namespace {

constexpr double kLockTolerance = 1e-12;

struct Interval {
  double lo, hi;
};

Interval wilson(std::size_t hits, std::size_t n) {
  const double z = 1.959963984540054;
  const double p = static_cast<double>(hits) / static_cast<double>(n);
  const double nn = static_cast<double>(n);
  const double denom = 1.0 + z * z / nn;
  const double centre = (p + z * z / (2.0 * nn)) / denom;
  const double half = z * std::sqrt(p * (1.0 - p) / nn + z * z / (4.0 * nn * nn)) / denom;
  return {std::max(0.0, centre - half), std::min(1.0, centre + half)};
}

}  // namespace

void validate(const DrawdownSpec& spec) {
  if (!(spec.gamma > 0.0) || !std::isfinite(spec.gamma)) throw InvalidInput("drawdown: gamma must be positive");
  if (!(spec.g >= 0.0) || !std::isfinite(spec.g)) throw InvalidInput("drawdown: g must be >= 0");
  if (!(spec.fund_initial > 0.0)) throw InvalidInput("drawdown: auxiliary fund must start positive");
  if (!(spec.fund_bond_weight >= 0.0 && spec.fund_bond_weight <= 1.0)) {
    throw InvalidInput("drawdown: fund bond weight must lie in [0, 1]");
  }
  if (!(spec.sigma_cap > 0.0)) throw InvalidInput("drawdown: sigma cap must be positive");
}

FeasibilityReport check_feasibility(const ShortRateModel& model, const DrawdownSpec& spec, const TimeGrid& grid,
                                    std::size_t sample_size, std::uint64_t seed) {
  validate(spec);
  const double T = grid.maturity();
  FeasibilityReport out;
  out.initial_product = spec.gamma * std::exp(spec.g * T) * model.bond_price(T, model.r0());
  double bound = 0.0;
  for (std::size_t i = 0; i <= grid.steps(); ++i) {
    const double t = grid.time(i);
    bound = std::max(bound, spec.gamma * std::exp(spec.g * (T - t)) * model.bond_support(t, T).hi);
  }
  out.deterministic_bound = bound;
  out.shortfall_excluded = bound <= 1.0 + kLockTolerance;
  out.shortfall_certain = spec.gamma > 1.0 + kLockTolerance;
  out.lock_in_certain = std::abs(spec.gamma - 1.0) <= kLockTolerance && spec.g == 0.0;

  if (sample_size == 0) return out;
  std::vector<double> sup(sample_size);
  EnsembleConfig config{grid, Measure::P, sample_size, seed, 0, false};
  for_each_path(model, config, [&](std::size_t p, const MarketPaths& m) {
    double s = 0.0;
    for (std::size_t i = 0; i <= grid.steps(); ++i) {
      s = std::max(s, spec.gamma * std::exp(spec.g * grid.remaining(i)) * m.bond[i]);
    }
    sup[p] = s;
  });
  std::size_t shortfall = 0;
  std::size_t lock = 0;
  for (double s : sup) {
    if (s > 1.0 + kLockTolerance) ++shortfall;
    if (s >= 1.0 - kLockTolerance) ++lock;
  }
  out.paths = sample_size;
  out.shortfall_probability = static_cast<double>(shortfall) / static_cast<double>(sample_size);
  out.lock_in_probability = static_cast<double>(lock) / static_cast<double>(sample_size);
  const Interval a = wilson(shortfall, sample_size);
  const Interval b = wilson(lock, sample_size);
  out.shortfall_lo = a.lo;
  out.shortfall_hi = a.hi;
  out.lock_in_lo = b.lo;
  out.lock_in_hi = b.hi;
  return out;
}

double witness_barrier(const ShortRateModel& model, double g, double maturity, double t) {
  const double tau = maturity - t;
  const double n_t = model.log_a(tau);
  const double m_t = model.b(tau);
  const double n_0 = model.log_a(maturity);
  const double m_0 = model.b(maturity);
  return (g * t - n_t + n_0 - m_0 * model.r0()) / (-m_t);
}

WitnessSearch cir_infeasibility_witness(const ShortRateModel& model, double g, const TimeGrid& grid,
                                        std::size_t max_tries, std::uint64_t seed, Measure measure) {
  if (!model.is_cir()) throw InvalidInput("witness search: the model must be CIR");
  if (!(g >= 0.0)) throw InvalidInput("witness search: g must be >= 0");
  if (max_tries == 0) throw InvalidInput("witness search: max_tries must be positive");
  const double T = grid.maturity();
  WitnessSearch out;
  out.seed = seed;
  out.gamma = 1.0 / (std::exp(g * T) * model.bond_price(T, model.r0()));
  std::vector<double> barrier(grid.steps() + 1);
  for (std::size_t i = 1; i < grid.steps(); ++i) barrier[i] = witness_barrier(model, g, T, grid.time(i));

  // Sequential on purpose: the first witness in path order is reported.
  for (std::size_t p = 0; p < max_tries; ++p) {
    const MarketPaths m = simulate_rate(model, BrownianPath::sample(grid, seed, p), measure);
    out.paths_tried = p + 1;
    for (std::size_t i = 1; i < grid.steps(); ++i) {
      const double margin = m.rate[i] - barrier[i];
      out.min_margin = std::min(out.min_margin, margin);
      if (margin < 0.0) {
        out.found = true;
        out.path_index = p;
        out.node = i;
        out.time = grid.time(i);
        out.rate = m.rate[i];
        out.barrier = barrier[i];
        return out;
      }
    }
  }
  return out;
}

std::vector<double> constraint_slack(const std::vector<double>& X, const MarketPaths& market, double gamma,
                                     double g) {
  std::vector<double> slack(X.size());
  double peak = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < X.size(); ++i) {
    peak = std::max(peak, X[i] * std::exp(g * market.grid.remaining(i)));
    slack[i] = X[i] - gamma * peak * market.bond[i];
  }
  return slack;
}

DrawdownPath construct_drawdown_portfolio(double x, const DrawdownSpec& spec, const MarketPaths& market) {
  validate(spec);
  if (!(x > 0.0) || !std::isfinite(x)) throw InvalidInput("drawdown: initial capital must be positive");
  const std::size_t n = market.steps();
  const TimeGrid& grid = market.grid;
  const double T = grid.maturity();
  const double d0 = market.bond[0];
  const double c0 = spec.gamma * d0 * std::exp(spec.g * T);
  if (!(c0 < 1.0)) {
    std::ostringstream msg;
    msg << "drawdown: need gamma e^{gT} D(0) < 1, got " << c0;
    throw InvalidInput(msg.str());
  }
  const double u = spec.fund_bond_weight;
  const std::vector<double> S = simulate_benchmark(BenchmarkSpec{u}, market);

  DrawdownPath p;
  p.X.assign(n + 1, 0.0);
  p.pi.assign(n + 1, 0.0);
  p.V.assign(n + 1, 0.0);
  p.M.assign(n + 1, 0.0);
  p.K.assign(n + 1, 0.0);
  p.L.assign(n + 1, 0.0);
  p.R.assign(n + 1, 0.0);
  p.psi.assign(n + 1, 0.0);
  for (std::size_t i = 0; i <= n; ++i) p.R[i] = spec.fund_initial * S[i] / market.bond[i];
  const double r0 = p.R[0];

  // Free path up to the lock-in node (where rho = c0 and L = +inf).
  std::vector<double> rho(n + 1, 1.0);
  std::size_t end = n + 1;
  for (std::size_t i = 1; i <= n; ++i) {
    rho[i] = d0 * std::exp(spec.g * grid.time(i)) / market.bond[i];
    const double gap = rho[i] - c0;
    if (gap < -kLockTolerance * c0) {
      std::ostringstream msg;
      msg << "drawdown: gamma e^{g(T-t)} D(t) exceeds 1 at t=" << grid.time(i)
          << "; the constraint is infeasible on this path";
      throw ConstructionFailure(msg.str());
    }
    if (gap <= kLockTolerance * c0) {
      end = i;
      break;
    }
    if (p.R[i] <= 0.0) {
      end = i;
      break;
    }
    p.L[i] = std::log1p(-c0) - std::log(gap) + std::log(p.R[i] / r0);
  }
  const SkorohodDecomposition sk = skorohod_map(std::span<const double>(p.L.data(), end));
  std::copy(sk.K.begin(), sk.K.end(), p.K.begin());

  const double v0 = x / d0;
  double log_m = std::log(v0);
  for (std::size_t i = 0; i < end; ++i) {
    if (i > 0) {
      const double weight = 1.0 - spec.gamma * market.bond[i - 1] * std::exp(spec.g * grid.remaining(i - 1));
      log_m += weight * (p.K[i] - p.K[i - 1]);
    }
    p.M[i] = std::exp(log_m);
    p.psi[i] = p.M[i] * (1.0 - c0) * (p.R[i] / r0) * std::exp(-p.K[i]);
    p.V[i] = c0 * p.M[i] + p.psi[i];
  }

  if (end <= n) {
    const std::size_t j = end;
    const bool exhausted = p.R[j] <= 0.0 && rho[j] - c0 > kLockTolerance * c0;
    if (exhausted) {
      p.frozen_at = j;
      p.V[j] = c0 * p.M[j - 1];
      p.M[j] = p.M[j - 1];
      p.psi[j] = 0.0;
    } else {
      // Reserve plus the surplus carried by the fund over the last step.
      p.locked_at = j;
      p.V[j] = c0 * p.M[j - 1] + p.psi[j - 1] * p.R[j] / p.R[j - 1];
      p.M[j] = std::max(p.M[j - 1], p.V[j] / rho[j]);
      p.psi[j] = p.V[j] - c0 * p.M[j];
    }
    p.K[j] = p.K[j - 1];
    p.L[j] = exhausted ? p.L[j - 1] : std::numeric_limits<double>::infinity();
    for (std::size_t i = j + 1; i <= n; ++i) {
      p.V[i] = p.V[j];
      p.M[i] = p.M[j];
      p.K[i] = p.K[j];
      p.L[i] = p.L[j];
      p.psi[i] = p.psi[j];
    }
  }

  for (std::size_t i = 0; i <= n; ++i) {
    p.X[i] = p.V[i] * market.bond[i];
    const bool frozen = end <= n && i >= end;
    p.pi[i] = frozen ? p.X[i] : market.bond[i] * (c0 * p.M[i] + u * p.psi[i]);
  }
  p.slack = constraint_slack(p.X, market, spec.gamma, spec.g);
  return p;
}

DrawdownVerification verify_drawdown(const DrawdownPath& path, const MarketPaths& market, const DrawdownSpec& spec) {
  const std::size_t n = market.steps();
  const double x = path.X[0];
  const double v0 = path.V[0];
  const double c0 = spec.gamma * market.bond[0] * std::exp(spec.g * market.grid.maturity());
  DrawdownVerification out;

  out.min_slack = std::numeric_limits<double>::infinity();
  for (double s : path.slack) {
    out.min_slack = std::min(out.min_slack, s / x);
    if (s < -1e-10 * x) ++out.violations;
  }

  double peak_before = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < n; ++k) {
    peak_before = std::max(peak_before, path.X[k] * std::exp(spec.g * market.grid.remaining(k)));
  }
  out.lock_in_gap = path.X[n] - spec.gamma * peak_before;
  out.terminal_residual = path.X[n] - spec.gamma * std::max(peak_before, path.X[n]);
  out.relative_gap = std::abs(out.lock_in_gap) / x;

  const std::size_t end = std::min(path.locked_at, path.frozen_at);
  const std::size_t prefix = end == kNotLocked ? n + 1 : end;
  SkorohodDecomposition sk{std::vector<double>(path.L.begin(), path.L.begin() + static_cast<long>(prefix)),
                           std::vector<double>(path.K.begin(), path.K.begin() + static_cast<long>(prefix))};
  const SkorohodCheck check = check_skorohod(sk);
  out.skorohod_ok = check.ok;
  out.skorohod_failure = check.failure;

  const double r0 = path.R[0];
  for (std::size_t i = 0; i <= n; ++i) {
    if (i < prefix && path.M[i] > v0 * std::exp(path.K[i]) * (1.0 + 1e-12)) out.running_max_bound_ok = false;
    const double cap = (1.0 - c0) * v0 * path.R[i] / r0;
    const double tol = 1e-12 * std::max(1.0, v0);
    if (path.psi[i] < -tol || (i < prefix && path.psi[i] > cap * (1.0 + 1e-12) + tol)) out.psi_bound_ok = false;
  }

  for (double s : market.bond_vol) out.max_abs_sigma = std::max(out.max_abs_sigma, std::abs(s));
  out.sigma_within_cap = out.max_abs_sigma <= spec.sigma_cap;

  std::vector<double> y(n + 1);
  for (std::size_t i = 0; i <= n; ++i) y[i] = market.discount[i] * path.X[i];
  out.self_financing_max = self_financing_residual(y, path.pi, market) / x;
  return out;
}

}  // namespace tdbsde
