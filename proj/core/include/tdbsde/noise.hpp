#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <vector>

namespace tdbsde {

/// Uniform simulation grid t_i = i T / n on [0, T].
class TimeGrid {
 public:
  TimeGrid(double maturity, std::size_t steps);

  double maturity() const { return maturity_; }
  std::size_t steps() const { return steps_; }
  double dt() const { return maturity_ / static_cast<double>(steps_); }

  // t_0 = 0 and t_n = T hold exactly.
  double time(std::size_t i) const;
  // T - t_i, exactly zero at i = n.
  double remaining(std::size_t i) const;

  // Index of the node within `tol` of t, if any.
  std::optional<std::size_t> index_of(double t, double tol = 1e-12) const;

  TimeGrid refined() const { return TimeGrid(maturity_, 2 * steps_); }

  friend bool operator==(const TimeGrid&, const TimeGrid&) = default;

 private:
  double maturity_;
  std::size_t steps_;
};

// Per-path random stream. Streams depend only on (master seed, path index,
// stream tag), so any partition of an ensemble into batches reproduces the
// same paths.
std::mt19937_64 make_stream(std::uint64_t master_seed, std::uint64_t path_index,
                            std::uint64_t stream_tag = 0);

/// Driving Brownian increments on a grid, each with variance dt.
class BrownianPath {
 public:
  BrownianPath(TimeGrid grid, std::vector<double> increments);

  static BrownianPath sample(const TimeGrid& grid, std::uint64_t master_seed,
                             std::uint64_t path_index);

  const TimeGrid& grid() const { return grid_; }
  std::span<const double> increments() const { return increments_; }
  double increment(std::size_t i) const { return increments_[i]; }

  // W(t_i), with W(0) = 0.
  std::vector<double> values() const;

  BrownianPath antithetic() const;

  // Halves every step by Brownian-bridge sampling of the midpoints. The
  // coarse increments are recovered exactly as pairwise sums, so paths at
  // different resolutions stay coupled. `level` selects an independent
  // bridge stream per refinement.
  BrownianPath refined(std::uint64_t master_seed, std::uint64_t path_index,
                       unsigned level) const;

  // Pairwise sums of increments; requires an even step count.
  BrownianPath coarsened() const;

 private:
  TimeGrid grid_;
  std::vector<double> increments_;
};

}  // namespace tdbsde
