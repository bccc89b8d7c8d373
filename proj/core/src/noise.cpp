#include "tdbsde/noise.hpp"

#include <cmath>

#include "tdbsde/errors.hpp"

namespace tdbsde {

TimeGrid::TimeGrid(double maturity, std::size_t steps) : maturity_(maturity), steps_(steps) {
  if (!(maturity > 0.0) || !std::isfinite(maturity)) {
    throw InvalidInput("time grid: maturity must be positive and finite");
  }
  if (steps == 0) {
    throw InvalidInput("time grid: step count must be at least 1");
  }
}

double TimeGrid::time(std::size_t i) const {
  if (i == steps_) return maturity_;
  return maturity_ * static_cast<double>(i) / static_cast<double>(steps_);
}

double TimeGrid::remaining(std::size_t i) const {
  if (i >= steps_) return 0.0;
  return maturity_ * static_cast<double>(steps_ - i) / static_cast<double>(steps_);
}

std::optional<std::size_t> TimeGrid::index_of(double t, double tol) const {
  if (t < -tol || t > maturity_ + tol) return std::nullopt;
  const double x = t / maturity_ * static_cast<double>(steps_);
  const auto i = static_cast<std::size_t>(std::llround(std::max(0.0, x)));
  if (i > steps_ || std::abs(time(i) - t) > tol) return std::nullopt;
  return i;
}

std::mt19937_64 make_stream(std::uint64_t master_seed, std::uint64_t path_index,
                            std::uint64_t stream_tag) {
  std::seed_seq seq{static_cast<std::uint32_t>(master_seed), static_cast<std::uint32_t>(master_seed >> 32),
                    static_cast<std::uint32_t>(path_index), static_cast<std::uint32_t>(path_index >> 32),
                    static_cast<std::uint32_t>(stream_tag), static_cast<std::uint32_t>(stream_tag >> 32)};
  return std::mt19937_64(seq);
}

BrownianPath::BrownianPath(TimeGrid grid, std::vector<double> increments)
    : grid_(grid), increments_(std::move(increments)) {
  if (increments_.size() != grid_.steps()) {
    throw InvalidInput("brownian path: increment count does not match the grid");
  }
}

BrownianPath BrownianPath::sample(const TimeGrid& grid, std::uint64_t master_seed,
                                  std::uint64_t path_index) {
  auto rng = make_stream(master_seed, path_index);
  std::normal_distribution<double> normal(0.0, std::sqrt(grid.dt()));
  std::vector<double> dw(grid.steps());
  for (auto& x : dw) x = normal(rng);
  return BrownianPath(grid, std::move(dw));
}

std::vector<double> BrownianPath::values() const {
  std::vector<double> w(increments_.size() + 1, 0.0);
  for (std::size_t i = 0; i < increments_.size(); ++i) w[i + 1] = w[i] + increments_[i];
  return w;
}

BrownianPath BrownianPath::antithetic() const {
  std::vector<double> dw(increments_);
  for (auto& x : dw) x = -x;
  return BrownianPath(grid_, std::move(dw));
}

BrownianPath BrownianPath::refined(std::uint64_t master_seed, std::uint64_t path_index,
                                   unsigned level) const {
  // Stream tag 0 is the base path; bridges use tags 1, 2, ...
  auto rng = make_stream(master_seed, path_index, static_cast<std::uint64_t>(level) + 1);
  const TimeGrid fine = grid_.refined();
  // Conditional on the sum over [t, t + 2h], the first half-increment is
  // N(sum / 2, h / 2).
  std::normal_distribution<double> normal(0.0, std::sqrt(fine.dt() / 2.0));
  std::vector<double> dw(fine.steps());
  for (std::size_t i = 0; i < increments_.size(); ++i) {
    const double first = 0.5 * increments_[i] + normal(rng);
    dw[2 * i] = first;
    dw[2 * i + 1] = increments_[i] - first;
  }
  return BrownianPath(fine, std::move(dw));
}

BrownianPath BrownianPath::coarsened() const {
  if (grid_.steps() % 2 != 0) {
    throw InvalidInput("brownian path: cannot coarsen an odd step count");
  }
  std::vector<double> dw(grid_.steps() / 2);
  for (std::size_t i = 0; i < dw.size(); ++i) dw[i] = increments_[2 * i] + increments_[2 * i + 1];
  return BrownianPath(TimeGrid(grid_.maturity(), grid_.steps() / 2), std::move(dw));
}

}  // namespace tdbsde
