#include "tdbsde/discrete_ratchet.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "tdbsde/errors.hpp"

namespace tdbsde {

void validate(const RatchetSpec& spec, double maturity) {
  if (!(spec.gamma > 0.0) || !std::isfinite(spec.gamma)) throw InvalidInput("ratchet: gamma must be positive");
  if (!(spec.g >= 0.0) || !std::isfinite(spec.g)) throw InvalidInput("ratchet: guaranteed rate g must be >= 0");
  const auto& a = spec.anniversaries;
  if (a.size() < 2) throw InvalidInput("ratchet: need at least the anniversaries 0 and T");
  if (std::abs(a.front()) > kExactTolerance || std::abs(a.back() - maturity) > kExactTolerance * maturity) {
    throw InvalidInput("ratchet: anniversaries must start at 0 and end at T");
  }
  for (std::size_t k = 1; k < a.size(); ++k) {
    if (!(a[k] > a[k - 1])) throw InvalidInput("ratchet: anniversaries must be strictly increasing");
  }
}

std::vector<std::size_t> anniversary_indices(const RatchetSpec& spec, const TimeGrid& grid) {
  validate(spec, grid.maturity());
  std::vector<std::size_t> out;
  out.reserve(spec.anniversaries.size());
  for (double t : spec.anniversaries) {
    const auto i = grid.index_of(t, 1e-9 * grid.maturity());
    if (!i) {
      std::ostringstream msg;
      msg << "ratchet: anniversary t=" << t << " is not a grid node (T=" << grid.maturity()
          << ", n=" << grid.steps() << ")";
      throw InvalidInput(msg.str());
    }
    out.push_back(*i);
  }
  return out;
}

const char* to_string(RatchetCase c) {
  switch (c) {
    case RatchetCase::Shortfall: return "shortfall";
    case RatchetCase::FixedReturn: return "fixed-return";
    case RatchetCase::Surplus: return "surplus";
    case RatchetCase::Unfair: return "unfair";
  }
  return "?";
}

Classification classify(const ShortRateModel& model, const RatchetSpec& spec, double maturity) {
  validate(spec, maturity);
  const double gamma = spec.gamma;
  const double g = spec.g;
  Classification out;
  out.initial_product = gamma * std::exp(g * maturity) * model.bond_price(maturity, model.r0());

  std::vector<BondSupport> support;
  for (double t : spec.anniversaries) {
    const BondSupport s = model.bond_support(t, maturity);
    support.push_back(s);
    out.sup_bounds.push_back(gamma * std::exp(g * (maturity - t)) * s.hi);
  }

  std::ostringstream why;
  why.precision(12);
  for (std::size_t m = 0; m < support.size(); ++m) {
    if (out.sup_bounds[m] > 1.0 + kExactTolerance) {
      why << "gamma e^{g(T-t)} D(t) can exceed 1 at t=" << spec.anniversaries[m] << " (sup "
          << out.sup_bounds[m] << "): a shortfall is possible";
      out.label = RatchetCase::Shortfall;
      out.binding_condition = why.str();
      return out;
    }
  }
  if (std::abs(out.initial_product - 1.0) <= kExactTolerance) {
    out.label = RatchetCase::FixedReturn;
    out.binding_condition = "gamma e^{gT} D(0) = 1 and no later anniversary can exceed it";
    return out;
  }
  // The lock-in event holds surely iff some anniversary term equals 1 for
  // every outcome: the terminal one (gamma = 1) or a deterministic interior one.
  if (std::abs(gamma - 1.0) <= kExactTolerance) {
    out.label = RatchetCase::Surplus;
    out.binding_condition = "gamma = 1, so the terminal term gamma D(T) = 1 locks in surely";
    return out;
  }
  for (std::size_t m = 1; m + 1 < support.size(); ++m) {
    if (support[m].deterministic && std::abs(out.sup_bounds[m] - 1.0) <= kExactTolerance) {
      why << "gamma e^{g(T-t)} D(t) = 1 surely at the deterministic anniversary t=" << spec.anniversaries[m];
      out.label = RatchetCase::Surplus;
      out.binding_condition = why.str();
      return out;
    }
  }
  why << "gamma e^{gT} D(0) = " << out.initial_product
      << " < 1 and no anniversary locks in surely: the claim is unfair";
  out.label = RatchetCase::Unfair;
  out.binding_condition = why.str();
  return out;
}

FixedReturnParameters fixed_return_parameters(const ShortRateModel& model, std::vector<double> anniversaries,
                                              double maturity) {
  const double log_d0 = std::log(model.bond_price(maturity, model.r0()));
  double g = 0.0;
  for (double t : anniversaries) {
    if (t <= 0.0) continue;
    const double hi = model.bond_support(t, maturity).hi;
    if (!std::isfinite(hi)) {
      throw InvalidInput("fixed-return parameters: bond price is unbounded at an interior anniversary");
    }
    g = std::max(g, (std::log(hi) - log_d0) / t);
  }
  return {g, std::exp(-g * maturity - log_d0)};
}

SplitSurplusPolicy::SplitSurplusPolicy(double bond_fraction) : bond_fraction_(bond_fraction) {
  if (!(bond_fraction >= 0.0 && bond_fraction <= 1.0)) {
    throw InvalidInput("surplus policy: bond fraction must lie in [0, 1]");
  }
}

std::string SplitSurplusPolicy::name() const {
  std::ostringstream out;
  out << "split(bond=" << bond_fraction_ << ")";
  return out.str();
}

SurplusAllocation SplitSurplusPolicy::allocate(double surplus, std::size_t node, const MarketPaths& market) const {
  const double in_bond = bond_fraction_ * surplus;
  return {in_bond / market.bond[node], surplus - in_bond};
}

namespace {

RatchetPath empty_path(const MarketPaths& market, std::vector<std::size_t> anniversaries) {
  const std::size_t n = market.steps() + 1;
  RatchetPath p;
  p.Y.assign(n, 0.0);
  p.X.assign(n, 0.0);
  p.pi.assign(n, 0.0);
  p.reserve.assign(n, 0.0);
  p.surplus.assign(n, 0.0);
  p.level.assign(n, 0.0);
  p.anniversaries = std::move(anniversaries);
  return p;
}

void require_y0(double y0) {
  if (!(y0 >= 0.0) || !std::isfinite(y0)) throw InvalidInput("ratchet: Y(0) must be finite and >= 0");
}

}  // namespace

RatchetPath solve_fixed_return(double y0, const MarketPaths& market, const RatchetSpec& spec,
                               const Classification& label) {
  if (label.label != RatchetCase::FixedReturn) {
    throw InvalidInput(std::string("ratchet: fixed-return construction called for case ") + to_string(label.label));
  }
  require_y0(y0);
  RatchetPath p = empty_path(market, anniversary_indices(spec, market.grid));
  const double T = market.grid.maturity();
  const double units = spec.gamma * y0 * std::exp(spec.g * T);
  double level = 0.0;
  std::size_t next = 0;
  for (std::size_t i = 0; i <= market.steps(); ++i) {
    p.X[i] = units * market.bond[i];
    p.Y[i] = market.discount[i] * p.X[i];
    p.pi[i] = p.X[i];
    if (next < p.anniversaries.size() && p.anniversaries[next] == i) {
      level = std::max(level, spec.gamma * p.X[i] * std::exp(spec.g * market.grid.remaining(i)));
      ++next;
    }
    p.level[i] = level;
    p.reserve[i] = level * market.bond[i];
    p.surplus[i] = p.X[i] - p.reserve[i];
  }
  return p;
}

RatchetPath solve_surplus(double y0, const SurplusPolicy& policy, const MarketPaths& market,
                          const RatchetSpec& spec, const Classification& label) {
  if (label.label != RatchetCase::Surplus) {
    throw InvalidInput(std::string("ratchet: surplus construction called for case ") + to_string(label.label));
  }
  require_y0(y0);
  RatchetPath p = empty_path(market, anniversary_indices(spec, market.grid));
  const std::size_t n = market.steps();
  double bond_units = 0.0;
  double bank_units = 0.0;  // discounted cash
  double level = 0.0;
  std::size_t next = 0;
  for (std::size_t i = 0; i <= n; ++i) {
    const double growth = 1.0 / market.discount[i];
    p.X[i] = i == 0 ? y0 : bond_units * market.bond[i] + bank_units * growth;
    if (next < p.anniversaries.size() && p.anniversaries[next] == i) {
      ++next;
      level = std::max(level, spec.gamma * p.X[i] * std::exp(spec.g * market.grid.remaining(i)));
      const double reserve = level * market.bond[i];
      double s = p.X[i] - reserve;
      if (s < -kExactTolerance * std::max(1.0, p.X[i])) {
        std::ostringstream msg;
        msg << "ratchet: negative surplus " << s << " at t=" << market.grid.time(i)
            << " (X=" << p.X[i] << ", reserve=" << reserve << "); the case label does not fit this path";
        throw ConstructionFailure(msg.str());
      }
      s = std::max(s, 0.0);
      if (i < n) {
        const SurplusAllocation a = policy.allocate(s, i, market);
        p.max_budget_residual =
            std::max(p.max_budget_residual, std::abs(a.bond_units * market.bond[i] + a.cash - s));
        bond_units = level + a.bond_units;
        bank_units = a.cash * market.discount[i];
      }
    }
    p.level[i] = level;
    p.reserve[i] = level * market.bond[i];
    p.surplus[i] = p.X[i] - p.reserve[i];
    p.pi[i] = bond_units * market.bond[i];
    p.Y[i] = market.discount[i] * p.X[i];
  }
  return p;
}

RatchetPath solve_ratchet(double y0, const SurplusPolicy& policy, const MarketPaths& market,
                          const RatchetSpec& spec, const Classification& label) {
  require_y0(y0);
  switch (label.label) {
    case RatchetCase::FixedReturn: return solve_fixed_return(y0, market, spec, label);
    case RatchetCase::Surplus: return solve_surplus(y0, policy, market, spec, label);
    case RatchetCase::Shortfall:
    case RatchetCase::Unfair:
      if (y0 == 0.0) return empty_path(market, anniversary_indices(spec, market.grid));
      throw ZeroSolutionOnly(std::string("ratchet: only the zero portfolio hedges this claim (") +
                             (label.label == RatchetCase::Shortfall
                                  ? "a shortfall cannot be ruled out, so no positive initial value is safe"
                                  : "the guarantee is worth less than the premium") +
                             "); " + label.binding_condition);
  }
  throw InvalidInput("ratchet: unknown case");
}

TerminalResidual verify_terminal(const RatchetPath& path, const MarketPaths& market, const RatchetSpec& spec) {
  const std::size_t n = market.steps();
  double target = 0.0;
  for (std::size_t k : path.anniversaries) {
    target = std::max(target, spec.gamma * path.Y[k] * market.discount_between(k, n) *
                                  std::exp(spec.g * market.grid.remaining(k)));
  }
  TerminalResidual out;
  out.residual = path.Y[n] - target;
  out.relative = path.Y[0] > 0.0 ? std::abs(out.residual) / path.Y[0] : std::abs(out.residual);
  return out;
}

RatchetPath perturb_strategy(const RatchetPath& path, const MarketPaths& market, std::size_t step, double bump) {
  if (step >= market.steps()) throw InvalidInput("perturb_strategy: step out of range");
  RatchetPath out = path;
  out.pi[step] *= 1.0 + bump;
  for (std::size_t i = 0; i < market.steps(); ++i) {
    const double units = out.pi[i] / market.bond[i];
    out.Y[i + 1] = out.Y[i] + units * (market.discounted_bond(i + 1) - market.discounted_bond(i));
    out.X[i + 1] = out.Y[i + 1] / market.discount[i + 1];
  }
  return out;
}

}  // namespace tdbsde
