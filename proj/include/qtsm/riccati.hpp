#pragma once

// Generic non-symmetric matrix Riccati system
//
//   dR2/dt + (R2 + R2^T) A + 1/2 (R2 + R2^T) S (R2 + R2^T) - Upsilon = 0,   R2(T) = Theta
//   dR1/dt + R1 (A + S (R2 + R2^T)) + B^T (R2 + R2^T) - Psi = 0,            R1(T) = theta
//   R0(t) = cT + \int_t^T (R1 B + 1/2 R1 S R1^T + tr(sigma^T R2 sigma) - k) ds
//
// with S = sigma sigma^T. The symmetric part U = -sym(R2) solves the LQ-control
// Riccati equation, obtained from the linear Hamiltonian system
//
//   d/dt [X; Y] = H [X; Y],   H = [[A, -2 S], [-Q, -A^T]],   U = Y X^{-1},
//
// and the skew part V = -skew(R2) is a quadrature of U. Bond, futures and
// forward pricing are all instances of this one system.
//
// Time integrals over a grid step use five-point Gauss-Legendre; the values at
// the interior points come from exact exponential propagation, not interpolation.

#include <Eigen/Dense>

#include <cmath>
#include <string>
#include <vector>

#include "qtsm/errors.hpp"
#include "qtsm/matrix_exp.hpp"
#include "qtsm/model.hpp"
#include "qtsm/quadrature.hpp"

namespace qtsm {

enum class Product { bond, futures, forward, custom };

inline const char* to_string(Product p) {
  switch (p) {
    case Product::bond: return "bond";
    case Product::futures: return "futures";
    case Product::forward: return "forward";
    case Product::custom: return "custom";
  }
  return "custom";
}

template <typename Scalar>
struct RiccatiProblem {
  FactorModel<Scalar> model;
  Matrix<Scalar> Upsilon;  ///< quadratic source; sym part must be psd
  Matrix<Scalar> Theta;    ///< terminal R2; sym part must be nsd
  RowVector<Scalar> Psi;   ///< linear source
  RowVector<Scalar> theta; ///< terminal R1
  Scalar k{0};
  Scalar cT{0};
  TimeGrid<Scalar> grid;
};

/// Throws DimensionError on shape mismatch and DomainError when the sign
/// hypotheses on Upsilon / Theta fail.
template <typename Scalar>
void check_problem(const RiccatiProblem<Scalar>& p) {
  check_dimensions(p.model);
  const auto n = p.model.dim();
  detail::require(p.Upsilon.rows() == n && p.Upsilon.cols() == n, "Upsilon must be n x n");
  detail::require(p.Theta.rows() == n && p.Theta.cols() == n, "Theta must be n x n");
  detail::require(p.Psi.size() == n, "Psi must have n entries");
  detail::require(p.theta.size() == n, "theta must have n entries");
  if (!p.Upsilon.allFinite() || !p.Theta.allFinite() || !p.Psi.allFinite() || !p.theta.allFinite() ||
      !p.model.A.allFinite() || !p.model.B.allFinite() || !p.model.sigma.allFinite()) {
    throw DomainError("Riccati problem has non-finite coefficients");
  }
  if (!is_positive_semidefinite(p.Upsilon)) {
    throw DomainError("Upsilon + Upsilon^T is not positive semidefinite");
  }
  if (!is_negative_semidefinite(p.Theta)) {
    throw DomainError("Theta + Theta^T is not negative semidefinite");
  }
}

template <typename Scalar>
Matrix<Scalar> hamiltonian_matrix(const FactorModel<Scalar>& model, const Matrix<Scalar>& q) {
  const auto n = model.dim();
  Matrix<Scalar> h(2 * n, 2 * n);
  h << model.A, Scalar(-2) * model.diffusion(), -q, -model.A.transpose();
  return h;
}

/// exp(-H u) and \int_0^u exp(-H v) dv: propagate [X; Y] backward by u from a node.
template <typename Scalar>
struct StepPropagator {
  Scalar offset{0};
  Matrix<Scalar> exp;
  Matrix<Scalar> integral;
};

/// Gridded solution of the Hamiltonian system and the U / V split of -R2.
template <typename Scalar>
struct HamiltonianState {
  TimeGrid<Scalar> grid;
  std::vector<Matrix<Scalar>> X;  ///< fundamental matrix X(t_i), X(T) = I
  std::vector<Matrix<Scalar>> Y;  ///< Y(t_i) = U(t_i) X(t_i), Y(T) = C1
  std::vector<Matrix<Scalar>> U;  ///< symmetric part of -R2
  std::vector<Matrix<Scalar>> V;  ///< skew part of -R2
  /// Condition estimate of the one-step X block inverted at node i (1 at i = N).
  std::vector<Scalar> condX;
  /// Propagator over one full step h.
  StepPropagator<Scalar> step;
  /// Propagators to the Gauss-Legendre points of a step, offsets measured back from t_{i+1}.
  std::vector<StepPropagator<Scalar>> interior;
  /// U at the interior points of step [t_i, t_{i+1}], in the order of `interior`.
  std::vector<std::vector<Matrix<Scalar>>> U_interior;
};

inline constexpr double kConditionLimit = 1e12;

namespace detail {

/// Solves z M = w for z (row-vector or matrix right division).
template <typename Scalar, typename Lu>
Matrix<Scalar> right_solve(const Lu& lu_of_transpose, const Matrix<Scalar>& w) {
  return lu_of_transpose.solve(w.transpose()).transpose();
}

template <typename Scalar>
StepPropagator<Scalar> make_propagator(const Matrix<Scalar>& minus_h, Scalar offset) {
  auto [e, integral] = mat_exp_with_integral(minus_h, offset);
  return {offset, std::move(e), std::move(integral)};
}

/// X block of the propagated [I; U] and its transposed LU, with the condition gate.
template <typename Scalar>
struct PropagatedBlock {
  Matrix<Scalar> xs;
  Eigen::PartialPivLU<Matrix<Scalar>> lu;
  Scalar cond;
};

template <typename Scalar>
PropagatedBlock<Scalar> propagate_x(const StepPropagator<Scalar>& prop, const Matrix<Scalar>& u_next, Scalar t) {
  const auto n = u_next.rows();
  Matrix<Scalar> xs = prop.exp.topLeftCorner(n, n) + prop.exp.topRightCorner(n, n) * u_next;
  Eigen::PartialPivLU<Matrix<Scalar>> lu(xs.transpose());
  const Scalar rcond = lu.rcond();
  const Scalar cond = rcond > Scalar(0) ? Scalar(1) / rcond : std::numeric_limits<Scalar>::infinity();
  if (!(cond <= Scalar(kConditionLimit))) {
    throw NumericalError("ill-conditioned fundamental matrix at t = " + std::to_string(static_cast<double>(t)) +
                         " (condition estimate " + std::to_string(static_cast<double>(cond)) + ")");
  }
  return {std::move(xs), std::move(lu), cond};
}

/// U = sym(Y X^{-1}) after propagating [I; u_next] by `prop`.
template <typename Scalar>
Matrix<Scalar> propagate_u(const StepPropagator<Scalar>& prop, const PropagatedBlock<Scalar>& block,
                           const Matrix<Scalar>& u_next) {
  const auto n = u_next.rows();
  const Matrix<Scalar> ys = prop.exp.bottomLeftCorner(n, n) + prop.exp.bottomRightCorner(n, n) * u_next;
  return symmetric_part(right_solve<Scalar>(block.lu, ys));
}

/// R1 at offset u back from a node with value r1_next, by variation of parameters.
template <typename Scalar>
RowVector<Scalar> propagate_r1(const RiccatiProblem<Scalar>& p, const StepPropagator<Scalar>& prop,
                               const PropagatedBlock<Scalar>& block, const Matrix<Scalar>& u_next,
                               const RowVector<Scalar>& r1_next) {
  const auto n = u_next.rows();
  const auto& integ = prop.integral;
  const Matrix<Scalar> ix = integ.topLeftCorner(n, n) + integ.topRightCorner(n, n) * u_next;
  const Matrix<Scalar> iy = integ.bottomLeftCorner(n, n) + integ.bottomRightCorner(n, n) * u_next;
  const RowVector<Scalar> w = r1_next - Scalar(2) * p.model.B.transpose() * iy - p.Psi * ix;
  return right_solve<Scalar>(block.lu, Matrix<Scalar>(w));
}

}  // namespace detail

/// V(t_i) = C1~ + \int_{t_i}^T (U A - A^T U + Q~) ds, five-point Gauss-Legendre per
/// step on the interior U values; V(T) = C1~.
template <typename Scalar>
std::vector<Matrix<Scalar>> solve_skew(const HamiltonianState<Scalar>& state, const RiccatiProblem<Scalar>& p) {
  const int steps = state.grid.steps();
  if (static_cast<int>(state.U_interior.size()) != steps) throw DimensionError("U path does not match grid");
  const Scalar h = state.grid.step();
  const auto weights = GaussLegendre5<Scalar>::weights();
  const Matrix<Scalar> q_skew = Scalar(0.5) * (p.Upsilon - p.Upsilon.transpose());
  const Matrix<Scalar> c1_skew = Scalar(-0.5) * (p.Theta - p.Theta.transpose());
  std::vector<Matrix<Scalar>> v(steps + 1);
  v[steps] = c1_skew;
  for (int i = steps - 1; i >= 0; --i) {
    Matrix<Scalar> ua = Matrix<Scalar>::Zero(p.model.dim(), p.model.dim());
    for (int j = 0; j < GaussLegendre5<Scalar>::size; ++j) ua += weights[j] * (state.U_interior[i][j] * p.model.A);
    // U symmetric makes (U A)^T = A^T U; forming it this way keeps V exactly skew.
    v[i] = v[i + 1] + h * (ua - ua.transpose() + q_skew);
  }
  return v;
}

/// Solves the Hamiltonian system on the grid and forms U = Y X^{-1} and V.
///
/// The exponential representation [X; Y](t) = exp(H (t - s)) [I; U(s)] is applied
/// one grid step at a time (s = t_{i+1}), so each step inverts a well-conditioned
/// one-step block; the global X(t_i) is accumulated as a product of those blocks.
template <typename Scalar>
HamiltonianState<Scalar> solve_hamiltonian(const RiccatiProblem<Scalar>& p) {
  check_problem(p);
  const auto n = p.model.dim();
  const int steps = p.grid.steps();
  const Scalar h = p.grid.step();
  const Matrix<Scalar> q = detail::symmetric_part(p.Upsilon);
  const Matrix<Scalar> c1 = Scalar(-0.5) * (p.Theta + p.Theta.transpose());
  const Matrix<Scalar> minus_h = -hamiltonian_matrix(p.model, q);

  HamiltonianState<Scalar> st{p.grid, {}, {}, {}, {}, {}, detail::make_propagator(minus_h, h), {}, {}};
  for (Scalar node : GaussLegendre5<Scalar>::nodes()) st.interior.push_back(detail::make_propagator(minus_h, h * node));
  st.X.resize(steps + 1);
  st.Y.resize(steps + 1);
  st.U.resize(steps + 1);
  st.U_interior.resize(steps);
  st.condX.assign(steps + 1, Scalar(1));
  st.X[steps] = Matrix<Scalar>::Identity(n, n);
  st.Y[steps] = c1;
  st.U[steps] = c1;

  for (int i = steps - 1; i >= 0; --i) {
    const Matrix<Scalar>& next = st.U[i + 1];
    const Scalar t = p.grid.time(i);
    const auto block = detail::propagate_x(st.step, next, t);
    st.condX[i] = block.cond;
    st.U[i] = detail::propagate_u(st.step, block, next);
    st.X[i] = block.xs * st.X[i + 1];
    st.Y[i] = st.U[i] * st.X[i];
    if (!st.U[i].allFinite() || !st.X[i].allFinite()) {
      throw NumericalError("Hamiltonian solution is not finite at t = " + std::to_string(static_cast<double>(t)));
    }
    auto& inner = st.U_interior[i];
    inner.reserve(st.interior.size());
    for (const auto& prop : st.interior) {
      inner.push_back(detail::propagate_u(prop, detail::propagate_x(prop, next, t), next));
    }
  }
  st.V = solve_skew(st, p);
  return st;
}

/// R2(t_i) = -(U + V); R2(T) = Theta exactly.
template <typename Scalar>
std::vector<Matrix<Scalar>> solve_R2(const HamiltonianState<Scalar>& st, const RiccatiProblem<Scalar>& p) {
  const int steps = st.grid.steps();
  std::vector<Matrix<Scalar>> r2(steps + 1);
  for (int i = 0; i < steps; ++i) r2[i] = -(st.U[i] + st.V[i]);
  r2[steps] = p.Theta;
  return r2;
}

template <typename Scalar>
std::vector<Matrix<Scalar>> solve_R2(const RiccatiProblem<Scalar>& p) {
  return solve_R2(solve_hamiltonian(p), p);
}

/// R1 by variation of parameters over each grid step:
///   R1(t_i) = (R1(t_{i+1}) - \int_{t_i}^{t_{i+1}} [2 B^T Y + Psi X] ds) X(t_i)^{-1}
/// with X, Y the one-step Hamiltonian solution started from [I; U(t_{i+1})]. The
/// step integral is exact (block exponential), so no quadrature error enters.
template <typename Scalar>
std::vector<RowVector<Scalar>> solve_R1(const RiccatiProblem<Scalar>& p, const HamiltonianState<Scalar>& st) {
  const int steps = st.grid.steps();
  std::vector<RowVector<Scalar>> r1(steps + 1);
  r1[steps] = p.theta;
  for (int i = steps - 1; i >= 0; --i) {
    const auto block = detail::propagate_x(st.step, st.U[i + 1], st.grid.time(i));
    r1[i] = detail::propagate_r1(p, st.step, block, st.U[i + 1], r1[i + 1]);
  }
  return r1;
}

/// R0(t_i) = cT + \int_{t_i}^T (R1 B + 1/2 R1 S R1^T + tr(sigma^T R2 sigma) - k) ds,
/// five-point Gauss-Legendre per step; R0(T) = cT exactly. The trace term only
/// sees sym(R2) = -U, and R1 at the interior points comes from the same
/// variation-of-parameters step as solve_R1.
template <typename Scalar>
std::vector<Scalar> solve_R0(const RiccatiProblem<Scalar>& p, const HamiltonianState<Scalar>& st,
                             const std::vector<RowVector<Scalar>>& r1) {
  const int steps = st.grid.steps();
  if (static_cast<int>(r1.size()) != steps + 1) throw DimensionError("R1 path does not match the grid");
  const Matrix<Scalar> s = p.model.diffusion();
  const Scalar h = st.grid.step();
  const auto weights = GaussLegendre5<Scalar>::weights();
  std::vector<Scalar> r0(steps + 1);
  r0[steps] = p.cT;
  for (int i = steps - 1; i >= 0; --i) {
    const Matrix<Scalar>& next = st.U[i + 1];
    Scalar sum(0);
    for (int j = 0; j < GaussLegendre5<Scalar>::size; ++j) {
      const auto& prop = st.interior[j];
      const auto block = detail::propagate_x(prop, next, st.grid.time(i));
      const RowVector<Scalar> r1j = detail::propagate_r1(p, prop, block, next, r1[i + 1]);
      const Scalar f = (r1j * p.model.B).value() + Scalar(0.5) * (r1j * s * r1j.transpose()).value() -
                       (s * st.U_interior[i][j]).trace() - p.k;
      sum += weights[j] * f;
    }
    r0[i] = r0[i + 1] + h * sum;
  }
  return r0;
}

/// Time-gridded (R2, R1, R0) for one product.
template <typename Scalar>
struct CoefficientPath {
  struct Node {
    Matrix<Scalar> R2;
    RowVector<Scalar> R1;
    Scalar R0;
  };

  TimeGrid<Scalar> grid;
  std::vector<Matrix<Scalar>> R2;
  std::vector<RowVector<Scalar>> R1;
  std::vector<Scalar> R0;
  Product product{Product::custom};

  /// Coefficients at t in [0, T]; linear interpolation between nodes (O(h^2)).
  Node at(Scalar t) const {
    using std::floor;
    const Scalar maturity = grid.maturity();
    if (!(t >= Scalar(0) && t <= maturity)) {
      throw DomainError("time " + std::to_string(static_cast<double>(t)) + " outside [0, " +
                        std::to_string(static_cast<double>(maturity)) + "]");
    }
    const int steps = grid.steps();
    const Scalar pos = t / grid.step();
    int i = static_cast<int>(floor(pos));
    if (i >= steps) i = steps - 1;
    const Scalar w = pos - Scalar(i);
    if (t == maturity || w >= Scalar(1)) return {R2[steps], R1[steps], R0[steps]};
    if (w <= Scalar(0)) return {R2[i], R1[i], R0[i]};
    return {(Scalar(1) - w) * R2[i] + w * R2[i + 1], (Scalar(1) - w) * R1[i] + w * R1[i + 1],
            (Scalar(1) - w) * R0[i] + w * R0[i + 1]};
  }

  /// x^T R2(t) x + R1(t) x + R0(t)
  Scalar exponent(Scalar t, const Vector<Scalar>& x) const {
    const Node c = at(t);
    detail::require(x.size() == c.R2.rows(), "state dimension does not match coefficient path");
    return x.dot(c.R2 * x) + (c.R1 * x).value() + c.R0;
  }
};

/// Full pipeline: Hamiltonian solve, then R2, R1, R0.
template <typename Scalar>
CoefficientPath<Scalar> solve_riccati(const RiccatiProblem<Scalar>& p, Product product = Product::custom) {
  const auto st = solve_hamiltonian(p);
  auto r2 = solve_R2(st, p);
  auto r1 = solve_R1(p, st);
  auto r0 = solve_R0(p, st, r1);
  return {p.grid, std::move(r2), std::move(r1), std::move(r0), product};
}

}  // namespace qtsm
