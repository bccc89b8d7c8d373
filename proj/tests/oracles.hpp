#pragma once

// Closed forms used as independent references. Written from the textbook
// formulas, not from the library's affine coefficients.

#include <cmath>

namespace oracle {

inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

inline double vasicek_bond(double a, double b, double sigma, double r, double tau) {
  const double B = (1.0 - std::exp(-a * tau)) / a;
  const double lnA = (B - tau) * (a * a * b - 0.5 * sigma * sigma) / (a * a) - sigma * sigma * B * B / (4.0 * a);
  return std::exp(lnA - B * r);
}

inline double cir_bond(double kappa, double mean, double sigma, double r, double tau) {
  const double h = std::sqrt(kappa * kappa + 2.0 * sigma * sigma);
  const double e = std::exp(h * tau) - 1.0;
  const double den = (h + kappa) * e + 2.0 * h;
  const double B = 2.0 * e / den;
  const double A = std::pow(2.0 * h * std::exp(0.5 * (kappa + h) * tau) / den, 2.0 * kappa * mean / (sigma * sigma));
  return A * std::exp(-B * r);
}

// P(r(t) < 0) for Vasicek started at r0.
inline double vasicek_negative_probability(double a, double b, double sigma, double r0, double t) {
  const double m = r0 * std::exp(-a * t) + b * (1.0 - std::exp(-a * t));
  const double v = sigma * sigma * (1.0 - std::exp(-2.0 * a * t)) / (2.0 * a);
  return v > 0.0 ? normal_cdf(-m / std::sqrt(v)) : (m < 0.0 ? 1.0 : 0.0);
}

}  // namespace oracle
