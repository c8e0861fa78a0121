#pragma once

// Factor process, short rate and payoff types for Gaussian quadratic
// term-structure models, plus the validity checks the pricing results need.

#include <Eigen/Dense>

#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <type_traits>
#include <vector>

#include "qtsm/errors.hpp"

namespace qtsm {

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <typename Scalar>
using RowVector = Eigen::Matrix<Scalar, 1, Eigen::Dynamic>;

/// dX = (A X + B) dt + sigma dW,  X_0 = x0.
template <typename Scalar>
struct FactorModel {
  Matrix<Scalar> A;
  Vector<Scalar> B;
  Matrix<Scalar> sigma;
  Vector<Scalar> x0;

  Eigen::Index dim() const { return A.rows(); }
  /// sigma sigma^T
  Matrix<Scalar> diffusion() const { return sigma * sigma.transpose(); }
};

/// r(x) = x^T Gamma x + R x + k.
template <typename Scalar>
struct QuadraticRate {
  Matrix<Scalar> Gamma;
  RowVector<Scalar> R;
  Scalar k{0};
  /// Require r(x) >= 0 for every x, not only a positive semidefinite Gamma.
  bool strict{false};

  static QuadraticRate constant(Eigen::Index n, Scalar k) {
    return {Matrix<Scalar>::Zero(n, n), RowVector<Scalar>::Zero(n), k, false};
  }
};

/// Terminal asset value S(T, x) = exp(x^T aT x + bT x + cT).
template <typename Scalar>
struct QuadraticPayoff {
  Matrix<Scalar> aT;
  RowVector<Scalar> bT;
  Scalar cT{0};

  static QuadraticPayoff unit(Eigen::Index n) {
    return {Matrix<Scalar>::Zero(n, n), RowVector<Scalar>::Zero(n), Scalar(0)};
  }
};

/// Uniform grid t_i = i h on [0, T] with an even number of steps.
template <typename Scalar>
class TimeGrid {
 public:
  TimeGrid(Scalar maturity, int steps) : maturity_(maturity), steps_(steps) {
    using std::isfinite;
    if (!(maturity > 0) || !isfinite(maturity)) {
      throw DomainError("time grid maturity must be positive and finite");
    }
    if (steps < 2 || steps % 2 != 0) {
      throw DomainError("time grid needs an even step count >= 2, got " + std::to_string(steps));
    }
  }

  /// Smallest even N >= max(min_steps, ceil(T / max_step)).
  static TimeGrid with_max_step(Scalar maturity, Scalar max_step, int min_steps = 200) {
    using std::ceil;
    if (!(max_step > 0)) throw DomainError("grid step bound must be positive");
    if (!(maturity > 0)) throw DomainError("time grid maturity must be positive");
    const double wanted = static_cast<double>(ceil(maturity / max_step));
    if (wanted > 1e8) throw DomainError("grid would need more than 1e8 steps");
    int n = std::max(min_steps, static_cast<int>(wanted));
    if (n < 2) n = 2;
    if (n % 2 != 0) ++n;
    return TimeGrid(maturity, n);
  }

  Scalar maturity() const { return maturity_; }
  int steps() const { return steps_; }
  Scalar step() const { return maturity_ / Scalar(steps_); }
  Scalar time(int i) const { return i == steps_ ? maturity_ : Scalar(i) * step(); }

 private:
  Scalar maturity_;
  int steps_;
};

namespace detail {

template <typename Derived>
bool all_finite(const Eigen::MatrixBase<Derived>& m) {
  return m.allFinite();
}

template <typename Scalar>
Matrix<Scalar> symmetric_part(const Matrix<Scalar>& m) {
  return Scalar(0.5) * (m + m.transpose());
}

template <typename Scalar>
Scalar spectral_norm(const Matrix<Scalar>& m) {
  if (m.size() == 0) return Scalar(0);
  Eigen::JacobiSVD<Matrix<Scalar>> svd(m);
  return svd.singularValues()(0);
}

inline void require(bool ok, const std::string& what) {
  if (!ok) throw DimensionError(what);
}

}  // namespace detail

/// Eigenvalue tolerance for sign checks: 1e-10 (1 + ||M||_2).
template <typename Scalar>
Scalar psd_tolerance(const Matrix<Scalar>& m) {
  return Scalar(1e-10) * (Scalar(1) + detail::spectral_norm(m));
}

/// Smallest eigenvalue of the symmetric part of m.
template <typename Scalar>
Scalar min_symmetric_eigenvalue(const Matrix<Scalar>& m) {
  Eigen::SelfAdjointEigenSolver<Matrix<Scalar>> es(detail::symmetric_part(m), Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

template <typename Scalar>
Scalar max_symmetric_eigenvalue(const Matrix<Scalar>& m) {
  Eigen::SelfAdjointEigenSolver<Matrix<Scalar>> es(detail::symmetric_part(m), Eigen::EigenvaluesOnly);
  return es.eigenvalues().maxCoeff();
}

/// True when the symmetric part of m is positive semidefinite within psd_tolerance.
template <typename Scalar>
bool is_positive_semidefinite(const Matrix<Scalar>& m) {
  return m.size() == 0 || min_symmetric_eigenvalue(m) >= -psd_tolerance(m);
}

template <typename Scalar>
bool is_negative_semidefinite(const Matrix<Scalar>& m) {
  return m.size() == 0 || max_symmetric_eigenvalue(m) <= psd_tolerance(m);
}

/// Moore-Penrose pseudoinverse of a symmetric matrix via its eigendecomposition.
template <typename Scalar>
Matrix<Scalar> symmetric_pseudoinverse(const Matrix<Scalar>& s) {
  using std::abs;
  Eigen::SelfAdjointEigenSolver<Matrix<Scalar>> es(s);
  const Scalar tol = psd_tolerance(s);
  Vector<Scalar> inv = es.eigenvalues();
  for (Eigen::Index i = 0; i < inv.size(); ++i) inv(i) = abs(inv(i)) > tol ? Scalar(1) / inv(i) : Scalar(0);
  return es.eigenvectors() * inv.asDiagonal() * es.eigenvectors().transpose();
}

struct ValidationCheck {
  std::string name;
  bool passed;
  std::string detail;
};

struct ValidationReport {
  std::vector<ValidationCheck> checks;

  bool ok() const {
    for (const auto& c : checks)
      if (!c.passed) return false;
    return true;
  }
  std::vector<ValidationCheck> failures() const {
    std::vector<ValidationCheck> out;
    for (const auto& c : checks)
      if (!c.passed) out.push_back(c);
    return out;
  }
};

/// Throws DimensionError when shapes are inconsistent.
template <typename Scalar>
void check_dimensions(const FactorModel<Scalar>& model) {
  const auto n = model.A.rows();
  detail::require(n >= 1, "factor dimension must be at least 1");
  detail::require(model.A.cols() == n, "A must be n x n");
  detail::require(model.B.size() == n, "B must have n entries");
  detail::require(model.sigma.rows() == n && model.sigma.cols() == n, "sigma must be n x n");
  detail::require(model.x0.size() == n, "x0 must have n entries");
}

template <typename Scalar>
void check_dimensions(const QuadraticRate<Scalar>& rate, Eigen::Index n) {
  detail::require(rate.Gamma.rows() == n && rate.Gamma.cols() == n, "Gamma must be n x n");
  detail::require(rate.R.size() == n, "R must have n entries");
}

template <typename Scalar>
void check_dimensions(const QuadraticPayoff<Scalar>& payoff, Eigen::Index n) {
  detail::require(payoff.aT.rows() == n && payoff.aT.cols() == n, "aT must be n x n");
  detail::require(payoff.bT.size() == n, "bT must have n entries");
}

/// Itemized check of every model invariant. Dimension mismatches throw; invariant
/// violations are reported and left for the caller to act on.
template <typename Scalar>
ValidationReport validate_model(const FactorModel<Scalar>& model, const QuadraticRate<Scalar>& rate,
                                const std::optional<QuadraticPayoff<Scalar>>& payoff = std::nullopt) {
  using std::isfinite;
  check_dimensions(model);
  const auto n = model.dim();
  check_dimensions(rate, n);
  if (payoff) check_dimensions(*payoff, n);

  ValidationReport report;
  const bool model_finite = detail::all_finite(model.A) && detail::all_finite(model.B) &&
                            detail::all_finite(model.sigma) && detail::all_finite(model.x0);
  report.checks.push_back({"model.finite", model_finite, model_finite ? "" : "A, B, sigma and x0 must be finite"});

  const bool rate_finite = detail::all_finite(rate.Gamma) && detail::all_finite(rate.R) && isfinite(rate.k);
  report.checks.push_back({"rate.finite", rate_finite, rate_finite ? "" : "Gamma, R and k must be finite"});
  if (!rate_finite) return report;

  const Matrix<Scalar> sym = detail::symmetric_part(rate.Gamma);
  const Scalar lmin = min_symmetric_eigenvalue(rate.Gamma);
  const Scalar tol = psd_tolerance(sym);
  report.checks.push_back({"rate.Gamma_psd", lmin >= -tol,
                           "smallest eigenvalue of sym(Gamma) = " + std::to_string(static_cast<double>(lmin))});

  if (rate.strict) {
    const Matrix<Scalar> pinv = symmetric_pseudoinverse(sym);
    const Vector<Scalar> rt = rate.R.transpose();
    const Scalar residual = (sym * (pinv * rt) - rt).norm();
    const bool in_range = residual <= tol * (Scalar(1) + rt.norm());
    report.checks.push_back({"rate.R_in_range", in_range,
                             "projection residual of R^T onto range(sym(Gamma)) = " +
                                 std::to_string(static_cast<double>(residual))});
    const Scalar bound = Scalar(0.25) * (rate.R * pinv * rt)(0, 0);
    using std::abs;
    const bool nonneg = in_range && rate.k >= bound - tol * (Scalar(1) + abs(bound));
    report.checks.push_back({"rate.nonnegative", nonneg,
                             "k = " + std::to_string(static_cast<double>(rate.k)) +
                                 ", required k >= R Gamma^+ R^T / 4 = " + std::to_string(static_cast<double>(bound))});
  }

  if (payoff) {
    const bool pay_finite = detail::all_finite(payoff->aT) && detail::all_finite(payoff->bT) && isfinite(payoff->cT);
    report.checks.push_back({"payoff.finite", pay_finite, pay_finite ? "" : "aT, bT and cT must be finite"});
    if (pay_finite) {
      const Scalar lmax = max_symmetric_eigenvalue(payoff->aT);
      report.checks.push_back({"payoff.aT_nsd", lmax <= psd_tolerance(detail::symmetric_part(payoff->aT)),
                               "largest eigenvalue of sym(aT) = " + std::to_string(static_cast<double>(lmax))});
    }
  }
  return report;
}

template <typename Scalar>
Scalar eval_short_rate(const QuadraticRate<Scalar>& rate, const std::type_identity_t<Vector<Scalar>>& x) {
  detail::require(x.size() == rate.Gamma.rows() && x.size() == rate.R.size(), "state dimension does not match rate");
  return x.dot(rate.Gamma * x) + (rate.R * x).value() + rate.k;
}

/// Largest exponent whose exp() is finite.
template <typename Scalar>
Scalar max_exponent() {
  using std::log;
  return log(std::numeric_limits<Scalar>::max());
}

template <typename Scalar>
Scalar payoff_exponent(const QuadraticPayoff<Scalar>& payoff, const std::type_identity_t<Vector<Scalar>>& x) {
  detail::require(x.size() == payoff.aT.rows() && x.size() == payoff.bT.size(), "state dimension does not match payoff");
  return x.dot(payoff.aT * x) + (payoff.bT * x).value() + payoff.cT;
}

template <typename Scalar>
Scalar eval_payoff(const QuadraticPayoff<Scalar>& payoff, const std::type_identity_t<Vector<Scalar>>& x) {
  using std::exp;
  const Scalar e = payoff_exponent(payoff, x);
  if (e > max_exponent<Scalar>()) {
    throw NumericalError("payoff exponent " + std::to_string(static_cast<double>(e)) + " overflows");
  }
  return exp(e);
}

}  // namespace qtsm
