#pragma once

// Test-only reference solvers: classical RK4 on the defining ODEs, independent of
// the Hamiltonian construction used by the library.

#include <cmath>
#include <string>
#include <vector>

#include "qtsm/errors.hpp"
#include "qtsm/model.hpp"
#include "qtsm/riccati.hpp"

namespace qtsm::testing {

/// Integrates (R2, R1, R0) backward from T in tau = T - t:
///   dR2/dtau = (R2 + R2^T) A + 1/2 (R2 + R2^T) S (R2 + R2^T) - Upsilon
///   dR1/dtau = R1 (A + S (R2 + R2^T)) + B^T (R2 + R2^T) - Psi
///   dR0/dtau = R1 B + 1/2 R1 S R1^T + tr(sigma^T R2 sigma) - k
/// with RK4 steps of h / refinement, recording the problem's grid nodes.
template <typename Scalar>
CoefficientPath<Scalar> rk4_oracle(const RiccatiProblem<Scalar>& p, int refinement) {
  if (refinement < 1) throw DomainError("refinement must be >= 1");
  const auto& m = p.model;
  const Matrix<Scalar> s = m.diffusion();
  const RowVector<Scalar> bt = m.B.transpose();

  struct State {
    Matrix<Scalar> r2;
    RowVector<Scalar> r1;
    Scalar r0;
  };
  auto rhs = [&](const State& y) {
    const Matrix<Scalar> sym2 = y.r2 + y.r2.transpose();
    State d;
    d.r2 = sym2 * m.A + Scalar(0.5) * sym2 * s * sym2 - p.Upsilon;
    d.r1 = y.r1 * (m.A + s * sym2) + bt * sym2 - p.Psi;
    d.r0 = (y.r1 * m.B).value() + Scalar(0.5) * (y.r1 * s * y.r1.transpose()).value() +
           (m.sigma.transpose() * y.r2 * m.sigma).trace() - p.k;
    return d;
  };
  auto axpy = [](const State& y, Scalar a, const State& d) {
    return State{y.r2 + a * d.r2, y.r1 + a * d.r1, y.r0 + a * d.r0};
  };

  const int steps = p.grid.steps();
  const Scalar h = p.grid.step() / Scalar(refinement);
  CoefficientPath<Scalar> out{p.grid, {}, {}, {}, Product::custom};
  out.R2.resize(steps + 1);
  out.R1.resize(steps + 1);
  out.R0.resize(steps + 1);
  State y{p.Theta, p.theta, p.cT};
  out.R2[steps] = y.r2;
  out.R1[steps] = y.r1;
  out.R0[steps] = y.r0;
  for (int i = steps - 1; i >= 0; --i) {
    for (int j = 0; j < refinement; ++j) {
      const State k1 = rhs(y);
      const State k2 = rhs(axpy(y, h / 2, k1));
      const State k3 = rhs(axpy(y, h / 2, k2));
      const State k4 = rhs(axpy(y, h, k3));
      y.r2 += h / 6 * (k1.r2 + 2 * k2.r2 + 2 * k3.r2 + k4.r2);
      y.r1 += h / 6 * (k1.r1 + 2 * k2.r1 + 2 * k3.r1 + k4.r1);
      y.r0 += h / 6 * (k1.r0 + 2 * k2.r0 + 2 * k3.r0 + k4.r0);
    }
    if (!y.r2.allFinite() || !y.r1.allFinite() || !std::isfinite(static_cast<double>(y.r0))) {
      throw NumericalError("rk4 oracle blew up at t = " + std::to_string(static_cast<double>(p.grid.time(i))));
    }
    out.R2[i] = y.r2;
    out.R1[i] = y.r1;
    out.R0[i] = y.r0;
  }
  return out;
}

/// RK4 on dPhi/dt = M Phi, Phi(0) = I, up to t = s.
template <typename Scalar>
Matrix<Scalar> rk4_exp(const Matrix<Scalar>& m, Scalar s, Scalar h) {
  const int steps = static_cast<int>(std::ceil(static_cast<double>(s / h)));
  const Scalar dt = s / Scalar(steps);
  Matrix<Scalar> phi = Matrix<Scalar>::Identity(m.rows(), m.cols());
  for (int i = 0; i < steps; ++i) {
    const Matrix<Scalar> k1 = m * phi;
    const Matrix<Scalar> k2 = m * (phi + dt / 2 * k1);
    const Matrix<Scalar> k3 = m * (phi + dt / 2 * k2);
    const Matrix<Scalar> k4 = m * (phi + dt * k3);
    phi += dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4);
  }
  return phi;
}

/// RK4 of the joint (U, V) system backward in tau:
///   dU/dtau = U A + A^T U - 2 U S U + Q,  dV/dtau = U A - A^T U + Q~
/// from U(T) = C1, V(T) = C1~, recorded at the grid nodes.
template <typename Scalar>
std::pair<std::vector<Matrix<Scalar>>, std::vector<Matrix<Scalar>>> rk4_uv(const RiccatiProblem<Scalar>& p,
                                                                          int refinement) {
  const auto& a = p.model.A;
  const Matrix<Scalar> s = p.model.diffusion();
  const Matrix<Scalar> q = Scalar(0.5) * (p.Upsilon + p.Upsilon.transpose());
  const Matrix<Scalar> q_skew = Scalar(0.5) * (p.Upsilon - p.Upsilon.transpose());
  auto du = [&](const Matrix<Scalar>& u) -> Matrix<Scalar> {
    return u * a + a.transpose() * u - Scalar(2) * u * s * u + q;
  };
  auto dv = [&](const Matrix<Scalar>& u) -> Matrix<Scalar> { return u * a - a.transpose() * u + q_skew; };
  const int steps = p.grid.steps();
  const Scalar h = p.grid.step() / Scalar(refinement);
  std::vector<Matrix<Scalar>> us(steps + 1), vs(steps + 1);
  Matrix<Scalar> u = Scalar(-0.5) * (p.Theta + p.Theta.transpose());
  Matrix<Scalar> v = Scalar(-0.5) * (p.Theta - p.Theta.transpose());
  us[steps] = u;
  vs[steps] = v;
  for (int i = steps - 1; i >= 0; --i) {
    for (int j = 0; j < refinement; ++j) {
      const Matrix<Scalar> u1 = du(u), v1 = dv(u);
      const Matrix<Scalar> ua = u + h / 2 * u1;
      const Matrix<Scalar> u2 = du(ua), v2 = dv(ua);
      const Matrix<Scalar> ub = u + h / 2 * u2;
      const Matrix<Scalar> u3 = du(ub), v3 = dv(ub);
      const Matrix<Scalar> uc = u + h * u3;
      const Matrix<Scalar> u4 = du(uc), v4 = dv(uc);
      u += h / 6 * (u1 + 2 * u2 + 2 * u3 + u4);
      v += h / 6 * (v1 + 2 * v2 + 2 * v3 + v4);
    }
    us[i] = u;
    vs[i] = v;
  }
  return {us, vs};
}

/// Scalar RK4 of dy/dtau = f(y) from y(0) = y0 to tau with n steps.
template <typename F>
double rk4_scalar(F f, double y0, double tau, int n) {
  const double h = tau / n;
  double y = y0;
  for (int i = 0; i < n; ++i) {
    const double k1 = f(y);
    const double k2 = f(y + h / 2 * k1);
    const double k3 = f(y + h / 2 * k2);
    const double k4 = f(y + h * k3);
    y += h / 6 * (k1 + 2 * k2 + 2 * k3 + k4);
  }
  return y;
}

}  // namespace qtsm::testing
