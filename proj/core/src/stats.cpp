#include "tdbsde/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "tdbsde/errors.hpp"

namespace tdbsde {

void CompensatedSum::add(double x) {
  const double t = sum_ + x;
  if (std::abs(sum_) >= std::abs(x)) {
    compensation_ += (sum_ - t) + x;
  } else {
    compensation_ += (x - t) + sum_;
  }
  sum_ = t;
}

SampleSummary summarize(std::span<const double> xs) {
  SampleSummary s;
  s.count = xs.size();
  if (xs.empty()) return s;
  CompensatedSum sum;
  s.min = std::numeric_limits<double>::infinity();
  s.max = -std::numeric_limits<double>::infinity();
  for (double x : xs) {
    sum.add(x);
    s.min = std::min(s.min, x);
    s.max = std::max(s.max, x);
  }
  s.mean = sum.value() / static_cast<double>(xs.size());
  if (xs.size() > 1) {
    CompensatedSum sq;
    for (double x : xs) sq.add((x - s.mean) * (x - s.mean));
    s.stddev = std::sqrt(sq.value() / static_cast<double>(xs.size() - 1));
    s.standard_error = s.stddev / std::sqrt(static_cast<double>(xs.size()));
  }
  return s;
}

SampleSummary summarize_pairs(std::span<const double> xs) {
  if (xs.size() % 2 != 0) throw InvalidInput("summarize_pairs: odd sample size");
  std::vector<double> pairs(xs.size() / 2);
  for (std::size_t k = 0; k < pairs.size(); ++k) pairs[k] = 0.5 * (xs[2 * k] + xs[2 * k + 1]);
  SampleSummary s = summarize(pairs);
  s.count = xs.size();
  return s;
}

double quantile(std::vector<double> xs, double q) {
  if (xs.empty()) throw InvalidInput("quantile: empty sample");
  std::sort(xs.begin(), xs.end());
  const double pos = std::clamp(q, 0.0, 1.0) * static_cast<double>(xs.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, xs.size() - 1);
  const double w = pos - static_cast<double>(lo);
  return xs[lo] * (1.0 - w) + xs[hi] * w;
}

double empirical_order(double coarse_error, double fine_error) {
  return std::log2(coarse_error / fine_error);
}

}  // namespace tdbsde
