#pragma once

#include <array>

namespace qtsm {

/// Five-point Gauss-Legendre rule on [0, 1]: nodes and weights (weights sum to 1).
/// Exact for polynomials of degree 9.
template <typename Scalar>
struct GaussLegendre5 {
  static constexpr int size = 5;

  static std::array<Scalar, 5> nodes() {
    const long double a = 0.5384693101056830910363144207002088L;
    const long double b = 0.9061798459386639927976268782993930L;
    return {Scalar((1 - b) / 2), Scalar((1 - a) / 2), Scalar(0.5L), Scalar((1 + a) / 2), Scalar((1 + b) / 2)};
  }

  static std::array<Scalar, 5> weights() {
    const long double wa = 0.4786286704993664680412915148356382L;
    const long double wb = 0.2369268850561890875142640407199173L;
    const long double w0 = 0.5688888888888888888888888888888889L;
    return {Scalar(wb / 2), Scalar(wa / 2), Scalar(w0 / 2), Scalar(wa / 2), Scalar(wb / 2)};
  }
};

}  // namespace qtsm
