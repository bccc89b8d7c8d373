#pragma once

#include <string>
#include <variant>

namespace tdbsde {

enum class Measure { P, Q };

const char* to_string(Measure m);

// dr = a (b - r) dt + sigma dW. Simulated with the exact Gaussian step.
struct Vasicek {
  double a = 0.0;
  double b = 0.0;
  double sigma = 0.0;
};

// dr = kappa (mean - r) dt + sigma sqrt(r) dW. Simulated with full-truncation
// Euler.
struct Cir {
  double kappa = 0.0;
  double mean = 0.0;
  double sigma = 0.0;
};

// Range of values the bond price D(t) can take, given the model's support of
// r(t). `deterministic` means the range is the single point `lo == hi`.
struct BondSupport {
  double lo;
  double hi;
  bool deterministic;
};

/// One-factor affine short-rate model with constant market price of risk.
///
/// Dynamics are specified under Q. Under P the rate drift gains
/// `risk_premium * diffusion(r)` and the bond drift becomes r + sigma(t) theta.
/// Zero-coupon prices are P(t, t + tau; r) = exp(log_a(tau) - b(tau) r).
class ShortRateModel {
 public:
  using Dynamics = std::variant<Vasicek, Cir>;

  ShortRateModel(Dynamics dynamics, double r0, double risk_premium = 0.0);

  static ShortRateModel vasicek(double a, double b, double sigma, double r0,
                                double risk_premium = 0.0);
  static ShortRateModel cir(double kappa, double mean, double sigma, double r0,
                            double risk_premium = 0.0);
  // r(t) = r for all t.
  static ShortRateModel constant(double r);

  const Dynamics& dynamics() const { return dynamics_; }
  double r0() const { return r0_; }
  double risk_premium() const { return risk_premium_; }
  bool is_cir() const { return std::holds_alternative<Cir>(dynamics_); }
  bool is_deterministic() const;
  std::string describe() const;

  // Affine bond coefficients for time to maturity tau >= 0; both vanish at 0.
  double log_a(double tau) const;
  double b(double tau) const;
  double bond_price(double tau, double r) const;

  // Diffusion coefficient of r (sigma or sigma sqrt(r^+)).
  double diffusion(double r) const;

  // Simulation state. For CIR the state may go negative and the rate is its
  // positive part; for Vasicek state and rate coincide.
  double rate_of_state(double state) const;
  double step(double state, double dw, double dt, Measure measure) const;

  // Solution of the noise-free rate ODE started at r0.
  double deterministic_rate(double t) const;

  // Support of D(t) for a bond maturing at `maturity` (B1-B2 analysis).
  BondSupport bond_support(double t, double maturity) const;

 private:
  Dynamics dynamics_;
  double r0_;
  double risk_premium_;
};

}  // namespace tdbsde
