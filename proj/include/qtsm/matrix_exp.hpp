#pragma once

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>

#include "qtsm/errors.hpp"
#include "qtsm/model.hpp"

namespace qtsm {

/// exp(s M). Scaling and squaring with a Pade approximant (Eigen's MatrixFunctions),
/// accurate to ~1e-12 relative for ||s M|| <= 100.
template <typename Derived>
Matrix<typename Derived::Scalar> mat_exp(const Eigen::MatrixBase<Derived>& m, typename Derived::Scalar s) {
  using Scalar = typename Derived::Scalar;
  using std::isfinite;
  if (m.rows() != m.cols()) throw DimensionError("mat_exp needs a square matrix");
  if (!m.allFinite() || !isfinite(s)) throw NumericalError("mat_exp: non-finite input");
  const Matrix<Scalar> scaled = s * m;
  Matrix<Scalar> out = scaled.exp();
  if (!out.allFinite()) throw NumericalError("mat_exp: result overflowed");
  return out;
}

/// Returns exp(s M) and the integral of exp(u M) over u in [0, s], both read off
/// one block exponential exp(s [[M, I], [0, 0]]).
template <typename Derived>
std::pair<Matrix<typename Derived::Scalar>, Matrix<typename Derived::Scalar>> mat_exp_with_integral(
    const Eigen::MatrixBase<Derived>& m, typename Derived::Scalar s) {
  using Scalar = typename Derived::Scalar;
  const auto n = m.rows();
  Matrix<Scalar> block = Matrix<Scalar>::Zero(2 * n, 2 * n);
  block.topLeftCorner(n, n) = m;
  block.topRightCorner(n, n).setIdentity();
  const Matrix<Scalar> e = mat_exp(block, s);
  return {e.topLeftCorner(n, n), e.topRightCorner(n, n)};
}

}  // namespace qtsm
