#pragma once

// One-factor closed forms from the stochastic-flow representation of the bond
// price, for
//
//   dX = beta (alpha - X) dt + sigma dW,     r(x) = c x^2 + b x + a,
//
// P(t, T, x) = exp(A(tau) x^2 / 2 + B(tau) x + C(tau)),  tau = T - t,
// eta = sqrt(beta^2 + 2 c sigma^2). Used as an analytic oracle for the
// Riccati pipeline under the mapping A = -beta, B = beta alpha, Gamma = c, R = b, k = a.

#include <cmath>
#include <string>

#include "qtsm/errors.hpp"
#include "qtsm/model.hpp"

namespace qtsm::flows1d {

/// Largest eta * tau accepted before exponentials are considered unsafe.
inline constexpr double kExponentGuard = 300.0;

template <typename Scalar>
struct FlowParams {
  Scalar alpha{0};
  Scalar beta{1};
  Scalar sigma{0};
  Scalar a{0};
  Scalar b{0};
  Scalar c{0};

  Scalar eta() const {
    using std::sqrt;
    return sqrt(beta * beta + Scalar(2) * c * sigma * sigma);
  }

  void validate() const {
    using std::isfinite;
    if (!isfinite(alpha) || !isfinite(beta) || !isfinite(sigma) || !isfinite(a) || !isfinite(b) || !isfinite(c)) {
      throw DomainError("flow parameters must be finite");
    }
    if (!(beta > 0)) throw DomainError("flow parameters need beta > 0");
    if (!(c >= 0)) throw DomainError("flow parameters need c >= 0");
  }
};

template <typename Scalar>
FactorModel<Scalar> to_factor_model(const FlowParams<Scalar>& p, Scalar x0) {
  FactorModel<Scalar> m;
  m.A = Matrix<Scalar>::Constant(1, 1, -p.beta);
  m.B = Vector<Scalar>::Constant(1, p.beta * p.alpha);
  m.sigma = Matrix<Scalar>::Constant(1, 1, p.sigma);
  m.x0 = Vector<Scalar>::Constant(1, x0);
  return m;
}

template <typename Scalar>
QuadraticRate<Scalar> to_quadratic_rate(const FlowParams<Scalar>& p) {
  return {Matrix<Scalar>::Constant(1, 1, p.c), RowVector<Scalar>::Constant(1, p.b), p.a, false};
}

namespace detail {

template <typename Scalar>
void check_tau(Scalar tau, const FlowParams<Scalar>& p) {
  p.validate();
  if (!(tau >= 0)) throw DomainError("tau must be non-negative");
  if (p.eta() * tau > Scalar(kExponentGuard)) {
    throw NumericalError("eta * tau = " + std::to_string(static_cast<double>(p.eta() * tau)) +
                         " exceeds the exponent guard " + std::to_string(kExponentGuard) +
                         "; rescale time or shorten the horizon");
  }
}

}  // namespace detail

/// A(tau) = 2c (e^{2 eta tau} - 1) / (beta - eta - (beta + eta) e^{2 eta tau}).
template <typename Scalar>
Scalar coeff_A(Scalar tau, const FlowParams<Scalar>& p) {
  using std::exp;
  using std::expm1;
  detail::check_tau(tau, p);
  if (p.c == Scalar(0)) return Scalar(0);
  const Scalar eta = p.eta();
  const Scalar em1 = expm1(Scalar(2) * eta * tau);
  return Scalar(2) * p.c * em1 / (p.beta - eta - (p.beta + eta) * (em1 + Scalar(1)));
}

/// B(tau). The common factor sigma^2 of numerator and denominator is cancelled
/// algebraically, so sigma = 0 evaluates without a 0/0.
template <typename Scalar>
Scalar coeff_B(Scalar tau, const FlowParams<Scalar>& p) {
  using std::exp;
  using std::expm1;
  detail::check_tau(tau, p);
  const Scalar beta = p.beta;
  const Scalar eta = p.eta();
  const Scalar eta2 = eta * eta;
  const Scalar s2 = p.sigma * p.sigma;
  const Scalar k = p.b * s2 - p.alpha * beta * beta;  // b sigma^2 - alpha beta^2
  const Scalar em1 = expm1(Scalar(2) * eta * tau);
  const Scalar num = beta * (p.b + Scalar(2) * p.c * p.alpha) / eta2 * ((-beta - eta) * em1 - Scalar(2) * eta) -
                     Scalar(2) * p.c * k * em1 / eta2 +
                     Scalar(2) * eta * exp(eta * tau) * (p.b * eta2 - Scalar(2) * p.c * k) / (beta * eta2);
  const Scalar den = (beta + eta) * em1 + Scalar(2) * eta;
  return num / den;
}

template <typename Scalar>
Scalar coeff_C(Scalar tau, const FlowParams<Scalar>& p) {
  using std::exp;
  using std::log;
  detail::check_tau(tau, p);
  const Scalar alpha = p.alpha;
  const Scalar beta = p.beta;
  const Scalar eta = p.eta();
  const Scalar s2 = p.sigma * p.sigma;
  const Scalar k = p.b * s2 - alpha * beta * beta;
  const Scalar bb = p.b + Scalar(2) * p.c * alpha;
  const Scalar e2 = exp(Scalar(2) * eta * tau);
  const Scalar den = (beta + eta) * e2 + eta - beta;

  const Scalar linear = (p.b * p.b * s2 - Scalar(2) * alpha * beta * beta * p.b -
                         Scalar(2) * alpha * alpha * beta * beta * p.c) /
                        (Scalar(2) * eta * eta) * tau;
  const Scalar logterm = Scalar(0.5) * (log(Scalar(2) * eta) + (eta + beta) * tau - log(den));
  const Scalar cross = Scalar(2) * beta * bb * k * (beta + eta);
  const Scalar sq = Scalar(2) * p.c * k * k - beta * beta * s2 * bb * bb;
  const Scalar third = (sq + cross * exp(eta * tau)) / (eta * eta * eta * (beta + eta) * den);
  const Scalar fourth = -(sq + cross) / (Scalar(2) * eta * eta * eta * eta * (beta + eta));
  return linear + logterm + third + fourth - p.a * tau;
}

/// exp(A x^2 / 2 + B x + C) at tau = T - t.
template <typename Scalar>
Scalar bond_price_1d(Scalar t, Scalar maturity, Scalar x, const FlowParams<Scalar>& p) {
  using std::exp;
  if (!(t >= 0 && t <= maturity)) throw DomainError("bond_price_1d needs 0 <= t <= T");
  const Scalar tau = maturity - t;
  const Scalar e = Scalar(0.5) * coeff_A(tau, p) * x * x + coeff_B(tau, p) * x + coeff_C(tau, p);
  if (e > max_exponent<Scalar>()) {
    throw NumericalError("bond exponent " + std::to_string(static_cast<double>(e)) + " overflows");
  }
  return exp(e);
}

/// g(t, s, x): forward-measure expectation of X_s^{t,x} D_{ts}, for t <= s <= T.
/// Evaluated with exponents shifted to (s - T), (T - t) so that large calendar
/// times do not overflow; the value is the same closed form.
template <typename Scalar>
Scalar flow_g(Scalar t, Scalar s, Scalar x, Scalar maturity, const FlowParams<Scalar>& p) {
  using std::exp;
  if (!(t <= s && s <= maturity)) throw DomainError("flow_g needs t <= s <= T");
  const Scalar tau = maturity - t;
  detail::check_tau(tau, p);
  const Scalar beta = p.beta;
  const Scalar eta = p.eta();
  const Scalar eta2 = eta * eta;
  const Scalar s2 = p.sigma * p.sigma;
  const Scalar k = p.b * s2 - p.alpha * beta * beta;
  const Scalar m = (s2 * p.b * eta2 - Scalar(2) * p.c * s2 * k) / (beta * eta2);
  const Scalar common = p.alpha * beta + m * (exp(-beta * tau) - Scalar(1)) + k * beta / eta2;
  const Scalar decay = exp((-beta - eta) * tau);
  const Scalar grow = exp((-beta + eta) * tau);

  const Scalar num1 = common + x * (-beta + eta) * decay + k * (-beta + eta) / eta2 * decay;
  const Scalar den1 = beta + eta + (-beta + eta) * exp(Scalar(-2) * eta * tau);
  const Scalar num2 = common + x * (-beta - eta) * grow + k * (-beta - eta) / eta2 * grow;
  const Scalar den2 = beta - eta + (-beta - eta) * exp(Scalar(2) * eta * tau);

  const Scalar u = s - t;
  return num1 / den1 * exp((-beta + eta) * (u - tau)) + num2 / den2 * exp((beta + eta) * (tau - u)) -
         k / eta2 * exp(-beta * u);
}

/// Feynman-Kac residual dP/dt + beta (alpha - x) dP/dx + sigma^2/2 d2P/dx2 - r(x) P
/// of bond_price_1d by centered differences with step h.
template <typename Scalar>
Scalar pde_residual(const FlowParams<Scalar>& p, Scalar t, Scalar maturity, Scalar x, Scalar h) {
  if (!(h > 0)) throw DomainError("finite-difference step must be positive");
  if (t - h < Scalar(0) || t + h > maturity) throw DomainError("t +/- h must stay inside [0, T]");
  auto price = [&](Scalar tt, Scalar xx) { return bond_price_1d(tt, maturity, xx, p); };
  const Scalar p0 = price(t, x);
  const Scalar dt = (price(t + h, x) - price(t - h, x)) / (Scalar(2) * h);
  const Scalar up = price(t, x + h);
  const Scalar down = price(t, x - h);
  const Scalar dx = (up - down) / (Scalar(2) * h);
  const Scalar dxx = (up - Scalar(2) * p0 + down) / (h * h);
  const Scalar r = p.c * x * x + p.b * x + p.a;
  return dt + p.beta * (p.alpha - x) * dx + Scalar(0.5) * p.sigma * p.sigma * dxx - r * p0;
}

}  // namespace qtsm::flows1d
