#include "tdbsde/withdrawal.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "tdbsde/errors.hpp"
#include "tdbsde/parallel.hpp"
#include "tdbsde/stats.hpp"

namespace tdbsde {

void validate(const WithdrawalSpec& spec) {
  if (!(spec.gamma >= 0.0) || !std::isfinite(spec.gamma)) throw InvalidInput("withdrawal: gamma must be >= 0");
  if (!(spec.consumption > 0.0)) throw InvalidInput("withdrawal: consumption rate L must be positive");
  if (!(spec.horizon > 0.0)) throw InvalidInput("withdrawal: annuity horizon H must be positive");
  if (!(spec.maturity > 0.0)) throw InvalidInput("withdrawal: maturity must be positive");
  if (spec.quadrature_intervals < 2) throw InvalidInput("withdrawal: need at least 2 quadrature intervals");
}

WalkTree build_tree(const ShortRateModel& model, const WithdrawalSpec& spec, std::size_t depth,
                    std::size_t depth_cap) {
  validate(spec);
  if (depth == 0) throw InvalidInput("walk tree: depth must be at least 1");
  if (depth > depth_cap) {
    std::ostringstream msg;
    msg << "walk tree: depth " << depth << " exceeds the cap " << depth_cap << " ("
        << ((std::size_t{1} << (depth + 1)) - 1) << " nodes)";
    throw BudgetExceeded(msg.str());
  }
  WalkTree tree{TimeGrid(spec.maturity, depth), depth, {}, {}, {}, {}};
  const std::size_t nodes = (std::size_t{1} << (depth + 1)) - 1;
  const double dt = tree.grid.dt();
  const double dw = std::sqrt(dt);
  tree.state.resize(nodes);
  tree.rate.resize(nodes);
  tree.integrated_rate.resize(nodes);
  tree.state[0] = model.r0();
  tree.rate[0] = model.rate_of_state(model.r0());
  tree.integrated_rate[0] = 0.0;
  for (std::size_t id = 1; id < nodes; ++id) {
    const std::size_t p = WalkTree::parent(id);
    const double move = id % 2 == 1 ? -dw : dw;
    tree.state[id] = model.step(tree.state[p], move, dt, Measure::Q);
    tree.rate[id] = model.rate_of_state(tree.state[id]);
    tree.integrated_rate[id] = tree.integrated_rate[p] + 0.5 * (tree.rate[p] + tree.rate[id]) * dt;
  }
  const std::size_t first_leaf = WalkTree::level_start(depth);
  tree.leaf_annuity.resize(nodes - first_leaf);
  parallel_for(tree.leaf_annuity.size(), [&](std::size_t j) {
    const std::size_t id = first_leaf + j;
    tree.leaf_annuity[j] = std::exp(-tree.integrated_rate[id]) *
                           annuity_factor(model, tree.rate[id], spec.horizon, spec.quadrature_intervals).value;
  });
  return tree;
}

std::vector<double> running_sup(const WalkTree& tree, const std::vector<double>& values) {
  std::vector<double> q(tree.node_count());
  q[0] = values[0];
  for (std::size_t id = 1; id < q.size(); ++id) {
    const std::size_t p = WalkTree::parent(id);
    const double carried = q[p] * std::exp(-(tree.integrated_rate[id] - tree.integrated_rate[p]));
    q[id] = std::max(carried, values[id]);
  }
  return q;
}

std::vector<double> picard_step(const WalkTree& tree, const WithdrawalSpec& spec,
                                const std::vector<double>& previous) {
  const std::size_t nodes = tree.node_count();
  std::vector<double> q = previous.empty() ? std::vector<double>(nodes, 0.0) : running_sup(tree, previous);
  const std::size_t first_leaf = WalkTree::level_start(tree.depth);
  const double weight = spec.gamma * tree.grid.dt();
  std::vector<double> next(nodes);
  for (std::size_t j = 0; j < tree.leaf_annuity.size(); ++j) {
    next[first_leaf + j] = spec.consumption * tree.leaf_annuity[j];
  }
  for (std::size_t id = first_leaf; id-- > 0;) {
    next[id] = weight * q[id] + 0.5 * (next[2 * id + 1] + next[2 * id + 2]);
  }
  return next;
}

double fixed_point_residual(const WalkTree& tree, const WithdrawalSpec& spec, const std::vector<double>& values) {
  const std::vector<double> next = picard_step(tree, spec, values);
  double worst = 0.0;
  for (std::size_t i = 0; i < next.size(); ++i) worst = std::max(worst, std::abs(next[i] - values[i]));
  return worst;
}

PicardSolution solve_picard(const WalkTree& tree, const WithdrawalSpec& spec, double tolerance,
                            std::size_t max_iterations) {
  validate(spec);
  if (!(tolerance > 0.0)) throw InvalidInput("picard: tolerance must be positive");
  if (max_iterations == 0) throw InvalidInput("picard: max_iterations must be positive");
  PicardSolution out;
  out.root_history.push_back(0.0);
  std::vector<double> current;
  std::size_t growing = 0;
  for (std::size_t k = 1; k <= max_iterations; ++k) {
    std::vector<double> next = picard_step(tree, spec, current);
    double delta = 0.0;
    double scale = 0.0;
    for (std::size_t i = 0; i < next.size(); ++i) {
      delta = std::max(delta, std::abs(next[i] - (current.empty() ? 0.0 : current[i])));
      scale = std::max(scale, std::abs(next[i]));
    }
    out.deltas.push_back(delta);
    out.root_history.push_back(next[0]);
    out.iterations = k;
    current = std::move(next);
    if (out.deltas.size() >= 2) {
      const double prev = out.deltas[out.deltas.size() - 2];
      // Ratios of deltas at round-off level carry no information.
      if (prev > 1e-13 * scale) {
        const double ratio = delta / prev;
        out.contraction_ratio = std::max(out.contraction_ratio, ratio);
        growing = ratio >= 1.0 ? growing + 1 : 0;
      }
    }
    if (delta < tolerance) {
      out.converged = true;
      break;
    }
    if (growing >= 3) {
      std::ostringstream msg;
      msg << "picard: iteration is not contracting (delta ratio " << delta / out.deltas[out.deltas.size() - 2]
          << " after " << k << " iterations; gamma T = " << spec.gamma * spec.maturity << ")";
      throw NonConvergence(msg.str(), out.deltas, out.contraction_ratio);
    }
  }
  if (!out.converged) {
    std::ostringstream msg;
    msg << "picard: no convergence to " << tolerance << " within " << max_iterations << " iterations (last delta "
        << out.deltas.back() << ")";
    throw NonConvergence(msg.str(), out.deltas, out.contraction_ratio);
  }
  out.values = std::move(current);
  out.running_sup = running_sup(tree, out.values);
  return out;
}

namespace {

// Y^1 at a node with rate r, time t and accumulated rate I: the discounted
// price of L times the annuity starting at T.
double first_iterate(const ShortRateModel& model, const WithdrawalSpec& spec, double t, double r, double I) {
  return spec.consumption * std::exp(-I) *
         deferred_annuity(model, r, spec.maturity - t, spec.horizon, spec.quadrature_intervals);
}

struct PathState {
  std::vector<double> state, rate, integrated;
};

void advance(const ShortRateModel& model, PathState& p, std::size_t from, std::mt19937_64& rng,
             std::normal_distribution<double>& normal, double dt) {
  for (std::size_t i = from; i + 1 < p.state.size(); ++i) {
    p.state[i + 1] = model.step(p.state[i], normal(rng), dt, Measure::Q);
    p.rate[i + 1] = model.rate_of_state(p.state[i + 1]);
    p.integrated[i + 1] = p.integrated[i] + 0.5 * (p.rate[i] + p.rate[i + 1]) * dt;
  }
}

}  // namespace

NestedMcEstimate nested_mc_oracle(const ShortRateModel& model, const WithdrawalSpec& spec,
                                  const NestedMcOptions& options) {
  validate(spec);
  if (options.iteration < 1 || options.iteration > 3) {
    throw InvalidInput("nested MC: only iterations 1, 2 and 3 are supported");
  }
  if (options.paths < 2 || options.steps == 0) throw InvalidInput("nested MC: need >= 2 paths and >= 1 step");
  const std::size_t n = options.steps;
  const double steps_d = static_cast<double>(n);
  double work = static_cast<double>(options.paths) * steps_d;
  if (options.iteration == 3) work *= static_cast<double>(options.inner_paths) * steps_d;
  if (work > options.budget) {
    std::ostringstream msg;
    msg << "nested MC: " << work << " simulated steps exceed the budget " << options.budget;
    throw BudgetExceeded(msg.str());
  }
  if (options.iteration == 3 && options.inner_paths == 0) throw InvalidInput("nested MC: inner_paths must be > 0");

  const TimeGrid grid(spec.maturity, n);
  const double dt = grid.dt();
  std::vector<double> samples(options.paths);
  parallel_for(options.paths, [&](std::size_t p) {
    auto rng = make_stream(options.seed, p);
    std::normal_distribution<double> normal(0.0, std::sqrt(dt));
    PathState path{std::vector<double>(n + 1), std::vector<double>(n + 1), std::vector<double>(n + 1)};
    path.state[0] = model.r0();
    path.rate[0] = model.rate_of_state(model.r0());
    path.integrated[0] = 0.0;
    advance(model, path, 0, rng, normal, dt);

    const double terminal = spec.consumption * std::exp(-path.integrated[n]) *
                            annuity_factor(model, path.rate[n], spec.horizon, spec.quadrature_intervals).value;
    if (options.iteration == 1) {
      samples[p] = terminal;
      return;
    }
    std::vector<double> y1(n);
    for (std::size_t j = 0; j < n; ++j) y1[j] = first_iterate(model, spec, grid.time(j), path.rate[j], path.integrated[j]);

    std::vector<double> values = y1;  // previous iterate along the path
    if (options.iteration == 3) {
      // Y^2 at node j: inner paths continue from node j and carry the prefix
      // running sup of Y^1.
      std::vector<double> q1_prefix(n);
      for (std::size_t j = 0; j < n; ++j) {
        const double carried = j == 0 ? -std::numeric_limits<double>::infinity()
                                      : q1_prefix[j - 1] * std::exp(-(path.integrated[j] - path.integrated[j - 1]));
        q1_prefix[j] = std::max(carried, y1[j]);
      }
      auto inner_rng = make_stream(options.seed, p, 1);
      PathState inner = path;
      for (std::size_t j = 0; j < n; ++j) {
        CompensatedSum mean;
        for (std::size_t m = 0; m < options.inner_paths; ++m) {
          advance(model, inner, j, inner_rng, normal, dt);
          double q = q1_prefix[j];
          double acc = q;
          for (std::size_t k = j + 1; k < n; ++k) {
            q = std::max(q * std::exp(-(inner.integrated[k] - inner.integrated[k - 1])),
                         first_iterate(model, spec, grid.time(k), inner.rate[k], inner.integrated[k]));
            acc += q;
          }
          const double leaf = spec.consumption * std::exp(-inner.integrated[n]) *
                              annuity_factor(model, inner.rate[n], spec.horizon, spec.quadrature_intervals).value;
          mean.add(leaf + spec.gamma * dt * acc);
        }
        values[j] = mean.value() / static_cast<double>(options.inner_paths);
      }
    }
    double q = values[0];
    double acc = q;
    for (std::size_t j = 1; j < n; ++j) {
      q = std::max(q * std::exp(-(path.integrated[j] - path.integrated[j - 1])), values[j]);
      acc += q;
    }
    samples[p] = terminal + spec.gamma * dt * acc;
  });
  const SampleSummary s = summarize(samples);
  return {s.mean, s.standard_error, options.iteration, work};
}

void solve_locked_in_withdrawal(const ShortRateModel&, const WithdrawalSpec&) {
  throw ZeroSolutionOnly(
      "withdrawal: when the final withdrawal is also locked into the life annuity, the only solution known is "
      "Y = Z = 0; no method for a non-zero solution is available");
}

}  // namespace tdbsde
