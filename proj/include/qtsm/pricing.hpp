#pragma once

// Closed-form zero-coupon bond, futures and forward prices. Each product is one
// instantiation (Upsilon, Theta, Psi, theta, k, cT) of the generic Riccati system:
//
//   bond     (Gamma, 0,  R, 0,  k, 0)
//   futures  (0,     aT, 0, bT, 0, cT)
//   forward  (Gamma, aT, R, bT, k, cT)   numerator of F = E[D S] / P

#include <cmath>
#include <optional>
#include <string>
#include <type_traits>
#include <utility>
#include <vector>

#include "qtsm/errors.hpp"
#include "qtsm/model.hpp"
#include "qtsm/riccati.hpp"

namespace qtsm {

inline constexpr double kDefaultMaxStep = 0.005;

template <typename Scalar>
struct PricedSystem {
  Product product;
  CoefficientPath<Scalar> path;
  FactorModel<Scalar> model;
  std::optional<QuadraticRate<Scalar>> rate;
  std::optional<QuadraticPayoff<Scalar>> payoff;

  Scalar maturity() const { return path.grid.maturity(); }
};

/// N = max(200, ceil(T / max_step)) rounded up to even.
template <typename Scalar>
TimeGrid<Scalar> default_grid(Scalar maturity, Scalar max_step = Scalar(kDefaultMaxStep)) {
  return TimeGrid<Scalar>::with_max_step(maturity, max_step, 200);
}

template <typename Scalar>
PricedSystem<Scalar> bond_system(const FactorModel<Scalar>& model, const QuadraticRate<Scalar>& rate,
                                 const TimeGrid<Scalar>& grid) {
  check_dimensions(model);
  const auto n = model.dim();
  check_dimensions(rate, n);
  RiccatiProblem<Scalar> p{model,
                           rate.Gamma,
                           Matrix<Scalar>::Zero(n, n),
                           rate.R,
                           RowVector<Scalar>::Zero(n),
                           rate.k,
                           Scalar(0),
                           grid};
  return {Product::bond, solve_riccati(p, Product::bond), model, rate, std::nullopt};
}

template <typename Scalar>
PricedSystem<Scalar> futures_system(const FactorModel<Scalar>& model, const QuadraticPayoff<Scalar>& payoff,
                                    const TimeGrid<Scalar>& grid) {
  check_dimensions(model);
  const auto n = model.dim();
  check_dimensions(payoff, n);
  RiccatiProblem<Scalar> p{model,
                           Matrix<Scalar>::Zero(n, n),
                           payoff.aT,
                           RowVector<Scalar>::Zero(n),
                           payoff.bT,
                           Scalar(0),
                           payoff.cT,
                           grid};
  return {Product::futures, solve_riccati(p, Product::futures), model, std::nullopt, payoff};
}

/// Numerator system E[exp(-\int r) S(T, X_T)]; divide by the bond price for F(t, T).
template <typename Scalar>
PricedSystem<Scalar> forward_system(const FactorModel<Scalar>& model, const QuadraticRate<Scalar>& rate,
                                    const QuadraticPayoff<Scalar>& payoff, const TimeGrid<Scalar>& grid) {
  check_dimensions(model);
  const auto n = model.dim();
  check_dimensions(rate, n);
  check_dimensions(payoff, n);
  RiccatiProblem<Scalar> p{model, rate.Gamma, payoff.aT, rate.R, payoff.bT, rate.k, payoff.cT, grid};
  return {Product::forward, solve_riccati(p, Product::forward), model, rate, payoff};
}

namespace detail {

template <typename Scalar>
Scalar checked_exp(Scalar e, const char* what) {
  using std::exp;
  using std::log;
  if (e > max_exponent<Scalar>() || e < log(std::numeric_limits<Scalar>::min())) {
    throw NumericalError(std::string(what) + " exponent " + std::to_string(static_cast<double>(e)) +
                         (e > 0 ? " overflows" : " underflows"));
  }
  return exp(e);
}

}  // namespace detail

/// exp(x^T R2(t) x + R1(t) x + R0(t)): bond price P(t,T) or futures price G(t,T).
/// For a forward system use the overload taking the bond system.
template <typename Scalar>
Scalar price(const PricedSystem<Scalar>& sys, Scalar t, const std::type_identity_t<Vector<Scalar>>& x) {
  if (sys.product == Product::forward) {
    throw DomainError("forward price needs the matching bond system");
  }
  return detail::checked_exp(sys.path.exponent(t, x), to_string(sys.product));
}

/// Forward price F(t,T) = numerator / P(t,T), evaluated as one exponential.
template <typename Scalar>
Scalar price(const PricedSystem<Scalar>& forward, const PricedSystem<Scalar>& bond, Scalar t,
             const std::type_identity_t<Vector<Scalar>>& x) {
  if (forward.product != Product::forward || bond.product != Product::bond) {
    throw DomainError("forward pricing needs a forward system and a bond system");
  }
  if (forward.maturity() != bond.maturity()) throw DomainError("forward and bond maturities differ");
  const Scalar bond_exp = bond.path.exponent(t, x);
  detail::checked_exp(bond_exp, "bond");
  return detail::checked_exp(forward.path.exponent(t, x) - bond_exp, "forward");
}

template <typename Scalar>
struct YieldPoint {
  Scalar maturity;
  Scalar yield;
  Scalar price;
};

/// Zero-coupon yields y(T) = -log P(0, T) / T at state x, one bond solve per maturity.
template <typename Scalar>
std::vector<YieldPoint<Scalar>> yield_curve(const FactorModel<Scalar>& model, const QuadraticRate<Scalar>& rate,
                                            const std::type_identity_t<Vector<Scalar>>& x, const std::vector<Scalar>& maturities,
                                            Scalar max_step = Scalar(kDefaultMaxStep)) {
  using std::isfinite;
  using std::log;
  std::vector<YieldPoint<Scalar>> curve;
  curve.reserve(maturities.size());
  for (std::size_t j = 0; j < maturities.size(); ++j) {
    const Scalar maturity = maturities[j];
    if (!(maturity > 0)) throw DomainError("maturities must be positive");
    if (j > 0 && !(maturity > maturities[j - 1])) throw DomainError("maturities must be strictly increasing");
    // Short maturities get a proportionally finer grid.
    const auto grid = TimeGrid<Scalar>::with_max_step(maturity, std::min(max_step, maturity / Scalar(200)), 200);
    const auto sys = bond_system(model, rate, grid);
    const Scalar e = sys.path.exponent(Scalar(0), x);
    const Scalar y = -e / maturity;
    if (!isfinite(y)) throw NumericalError("non-finite yield at maturity " + std::to_string(static_cast<double>(maturity)));
    curve.push_back({maturity, y, detail::checked_exp(e, "bond")});
  }
  return curve;
}

}  // namespace qtsm
