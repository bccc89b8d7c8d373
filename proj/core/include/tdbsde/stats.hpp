#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace tdbsde {

// Neumaier-compensated running sum.
class CompensatedSum {
 public:
  void add(double x);
  double value() const { return sum_ + compensation_; }

 private:
  double sum_ = 0.0;
  double compensation_ = 0.0;
};

struct SampleSummary {
  std::size_t count = 0;
  double mean = 0.0;
  double stddev = 0.0;
  double standard_error = 0.0;
  double min = 0.0;
  double max = 0.0;
};

SampleSummary summarize(std::span<const double> xs);

// Summary of pair means (x[2k] + x[2k+1]) / 2, the right error model for an
// ensemble built from antithetic pairs.
SampleSummary summarize_pairs(std::span<const double> xs);

// Linear-interpolated empirical quantile, q in [0, 1].
double quantile(std::vector<double> xs, double q);

// log2(coarse / fine): empirical convergence order between two grid levels.
double empirical_order(double coarse_error, double fine_error);

}  // namespace tdbsde
