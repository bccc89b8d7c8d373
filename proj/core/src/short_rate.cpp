#include "tdbsde/short_rate.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "tdbsde/errors.hpp"

namespace tdbsde {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};

void validate(const ShortRateModel::Dynamics& dynamics, double r0, double risk_premium) {
  if (!std::isfinite(r0) || !std::isfinite(risk_premium)) {
    throw InvalidInput("short-rate model: r0 and risk premium must be finite");
  }
  std::visit(overloaded{
                 [](const Vasicek& v) {
                   if (!(v.a >= 0.0) || !std::isfinite(v.b) || !(v.sigma >= 0.0) || !std::isfinite(v.sigma)) {
                     throw InvalidInput("vasicek: require a >= 0, finite b and sigma >= 0");
                   }
                 },
                 [r0](const Cir& c) {
                   if (!(c.kappa > 0.0) || !(c.mean > 0.0)) {
                     throw InvalidInput("cir: require kappa > 0 and mean > 0 (kappa * mean > 0)");
                   }
                   if (!(c.sigma >= 0.0) || !std::isfinite(c.sigma)) {
                     throw InvalidInput("cir: sigma must be non-negative");
                   }
                   if (r0 < 0.0) throw InvalidInput("cir: r0 must be non-negative");
                 },
             },
             dynamics);
}

}  // namespace

const char* to_string(Measure m) { return m == Measure::P ? "P" : "Q"; }

ShortRateModel::ShortRateModel(Dynamics dynamics, double r0, double risk_premium)
    : dynamics_(dynamics), r0_(r0), risk_premium_(risk_premium) {
  validate(dynamics_, r0_, risk_premium_);
}

ShortRateModel ShortRateModel::vasicek(double a, double b, double sigma, double r0, double risk_premium) {
  return ShortRateModel(Vasicek{a, b, sigma}, r0, risk_premium);
}

ShortRateModel ShortRateModel::cir(double kappa, double mean, double sigma, double r0, double risk_premium) {
  return ShortRateModel(Cir{kappa, mean, sigma}, r0, risk_premium);
}

ShortRateModel ShortRateModel::constant(double r) { return ShortRateModel(Vasicek{0.0, r, 0.0}, r, 0.0); }

bool ShortRateModel::is_deterministic() const {
  return std::visit([](const auto& m) { return m.sigma == 0.0; }, dynamics_);
}

std::string ShortRateModel::describe() const {
  std::ostringstream out;
  out.precision(6);
  std::visit(overloaded{
                 [&](const Vasicek& v) { out << "vasicek(a=" << v.a << ", b=" << v.b << ", sigma=" << v.sigma; },
                 [&](const Cir& c) { out << "cir(kappa=" << c.kappa << ", mean=" << c.mean << ", sigma=" << c.sigma; },
             },
             dynamics_);
  out << ", r0=" << r0_ << ", theta=" << risk_premium_ << ")";
  return out.str();
}

double ShortRateModel::b(double tau) const {
  if (tau <= 0.0) return 0.0;
  return std::visit(overloaded{
                        [tau](const Vasicek& v) {
                          if (v.a == 0.0) return tau;
                          return -std::expm1(-v.a * tau) / v.a;
                        },
                        [tau](const Cir& c) {
                          if (c.sigma == 0.0) return -std::expm1(-c.kappa * tau) / c.kappa;
                          const double h = std::sqrt(c.kappa * c.kappa + 2.0 * c.sigma * c.sigma);
                          const double e = std::expm1(h * tau);
                          return 2.0 * e / (2.0 * h + (c.kappa + h) * e);
                        },
                    },
                    dynamics_);
}

double ShortRateModel::log_a(double tau) const {
  if (tau <= 0.0) return 0.0;
  const double bt = b(tau);
  return std::visit(overloaded{
                        [&](const Vasicek& v) {
                          const double s2 = v.sigma * v.sigma;
                          if (v.a == 0.0) return s2 * tau * tau * tau / 6.0;
                          return (bt - tau) * (v.a * v.a * v.b - 0.5 * s2) / (v.a * v.a) - s2 * bt * bt / (4.0 * v.a);
                        },
                        [&](const Cir& c) {
                          if (c.sigma == 0.0) return -c.mean * (tau - bt);
                          const double s2 = c.sigma * c.sigma;
                          const double h = std::sqrt(c.kappa * c.kappa + 2.0 * s2);
                          const double denom = 2.0 * h + (c.kappa + h) * std::expm1(h * tau);
                          return 2.0 * c.kappa * c.mean / s2 *
                                 (std::log(2.0 * h / denom) + 0.5 * (c.kappa + h) * tau);
                        },
                    },
                    dynamics_);
}

double ShortRateModel::bond_price(double tau, double r) const {
  if (tau <= 0.0) return 1.0;
  return std::exp(log_a(tau) - b(tau) * r);
}

double ShortRateModel::diffusion(double r) const {
  return std::visit(overloaded{
                        [](const Vasicek& v) { return v.sigma; },
                        [r](const Cir& c) { return c.sigma * std::sqrt(std::max(r, 0.0)); },
                    },
                    dynamics_);
}

double ShortRateModel::rate_of_state(double state) const {
  return is_cir() ? std::max(state, 0.0) : state;
}

double ShortRateModel::step(double state, double dw, double dt, Measure measure) const {
  const double theta = measure == Measure::P ? risk_premium_ : 0.0;
  return std::visit(
      overloaded{
          [&](const Vasicek& v) {
            if (v.a == 0.0) return state + v.sigma * theta * dt + v.sigma * dw;
            // Exact OU transition; the P-drift shift sigma * theta / a moves the mean.
            const double mean = v.b + v.sigma * theta / v.a;
            const double decay = std::exp(-v.a * dt);
            const double scale = std::sqrt(-std::expm1(-2.0 * v.a * dt) / (2.0 * v.a * dt));
            return state * decay + mean * (1.0 - decay) + v.sigma * scale * dw;
          },
          [&](const Cir& c) {
            const double rp = std::max(state, 0.0);
            const double vol = c.sigma * std::sqrt(rp);
            return state + (c.kappa * (c.mean - rp) + vol * theta) * dt + vol * dw;
          },
      },
      dynamics_);
}

double ShortRateModel::deterministic_rate(double t) const {
  return std::visit(overloaded{
                        [&](const Vasicek& v) {
                          if (v.a == 0.0) return r0_;
                          return v.b + (r0_ - v.b) * std::exp(-v.a * t);
                        },
                        [&](const Cir& c) { return c.mean + (r0_ - c.mean) * std::exp(-c.kappa * t); },
                    },
                    dynamics_);
}

BondSupport ShortRateModel::bond_support(double t, double maturity) const {
  const double tau = maturity - t;
  if (tau <= 0.0) return {1.0, 1.0, true};
  if (t <= 0.0) {
    const double d0 = bond_price(tau, r0_);
    return {d0, d0, true};
  }
  if (is_deterministic()) {
    const double d = bond_price(tau, deterministic_rate(t));
    return {d, d, true};
  }
  // r(t) ranges over [0, inf) for CIR and over the real line for Vasicek.
  if (is_cir()) return {0.0, std::exp(log_a(tau)), false};
  return {0.0, std::numeric_limits<double>::infinity(), false};
}

}  // namespace tdbsde
