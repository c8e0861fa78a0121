#pragma once

// Monte Carlo oracles for the closed-form prices: Euler-Maruyama paths of the
// factor process under the risk-neutral measure (drift A x + B) or under the
// T-forward measure implied by a solved bond system
// (drift (A + S (R2 + R2^T)) x + B + S R1^T), and a direct check of the explicit
// forward-measure FBSDE solution Y = exp(x^T R2 x + R1 x + R0).

#include <cstdint>
#include <optional>
#include <vector>

#include "qtsm/model.hpp"
#include "qtsm/pricing.hpp"
#include "qtsm/riccati.hpp"

namespace qtsm::mc {

enum class Measure { risk_neutral, forward };

inline const char* to_string(Measure m) { return m == Measure::forward ? "forward" : "risk_neutral"; }

struct SimulationOptions {
  std::size_t n_paths = 10000;
  std::uint64_t seed = 1;
  /// Resolution of the underlying Brownian motion. 0 means the simulation grid;
  /// otherwise a multiple of it, and each step's increment sums the finer ones.
  /// Grids sharing one value here see the same Brownian path.
  int brownian_steps = 0;
  /// 0: hardware concurrency. Always capped by QTSM_THREADS when that is set.
  int threads = 0;
};

/// Number of worker threads after applying the QTSM_THREADS cap.
int resolve_threads(int requested);

struct McEstimate {
  double mean = 0.0;
  double std_error = 0.0;
  std::size_t n_paths = 0;

  /// |value - mean| <= sigmas * stderr
  bool brackets(double value, double sigmas) const;
};

/// Sample mean and standard error, summed in index order.
McEstimate summarize(const std::vector<double>& samples);

struct PathEnsemble {
  std::size_t n_paths = 0;
  TimeGrid<double> grid{1.0, 2};
  int dim = 0;
  std::uint64_t seed = 0;
  Measure measure = Measure::risk_neutral;
  /// Path p occupies an n x (N+1) column-major block: column i is X(t_i).
  std::vector<double> states;

  Eigen::Map<const Matrix<double>> path(std::size_t p) const {
    const auto cols = grid.steps() + 1;
    return {states.data() + p * static_cast<std::size_t>(dim) * cols, dim, cols};
  }
};

/// Per-path Euler-Maruyama stepper; deterministic in (seed, path index).
class PathSimulator {
 public:
  /// `bond` is required in forward mode and must be solved on `grid`.
  PathSimulator(const FactorModel<double>& model, const TimeGrid<double>& grid, const SimulationOptions& options,
                Measure measure, const CoefficientPath<double>* bond = nullptr);

  /// Fills states (n x (N+1)) and, when non-null, the Brownian increments (n x N).
  void simulate(std::size_t path, Matrix<double>& states, Matrix<double>* increments = nullptr) const;

  const TimeGrid<double>& grid() const { return grid_; }
  int dim() const { return static_cast<int>(model_.dim()); }

 private:
  FactorModel<double> model_;
  TimeGrid<double> grid_;
  std::uint64_t seed_;
  int substeps_;
  Measure measure_;
  std::vector<Matrix<double>> drift_matrix_;
  std::vector<Vector<double>> drift_offset_;
};

PathEnsemble simulate_paths(const FactorModel<double>& model, const TimeGrid<double>& grid,
                            const SimulationOptions& options, Measure measure = Measure::risk_neutral,
                            const CoefficientPath<double>* bond = nullptr);

/// E[exp(-\int_0^T r(X_u) du)], trapezoid rule in time.
McEstimate mc_bond(const FactorModel<double>& model, const QuadraticRate<double>& rate,
                   const TimeGrid<double>& grid, const SimulationOptions& options);

/// E[S(T, X_T)]: the futures price.
McEstimate mc_terminal_expectation(const FactorModel<double>& model, const QuadraticPayoff<double>& payoff,
                                   const TimeGrid<double>& grid, const SimulationOptions& options);

/// E[exp(-\int_0^T r) S(T, X_T)]: numerator of the forward price.
McEstimate mc_discounted_payoff(const FactorModel<double>& model, const QuadraticRate<double>& rate,
                                const QuadraticPayoff<double>& payoff, const TimeGrid<double>& grid,
                                const SimulationOptions& options);

/// All three products from one set of paths, plus the forward ratio.
struct ProductEstimates {
  McEstimate bond;
  McEstimate futures;
  McEstimate discounted_payoff;
  /// mean(D S) / mean(D). stderr by the delta method on per-path residuals
  /// (D_p S_p - F D_p) / mean(D), which accounts for the covariance of D and D S.
  McEstimate forward;
};

ProductEstimates mc_products(const FactorModel<double>& model, const QuadraticRate<double>& rate,
                             const QuadraticPayoff<double>& payoff, const TimeGrid<double>& grid,
                             const SimulationOptions& options);

struct FbsdeReport {
  double mean_abs_terminal_error = 0.0;
  double max_terminal_error = 0.0;
  double mean_bsde_increment_residual = 0.0;
  double max_bsde_increment_residual = 0.0;
  std::size_t n_paths = 0;
  int steps = 0;
};

/// Simulates X under the forward measure of `bond` and checks the explicit solution:
///  (a) Y_N obtained by Euler-integrating the log-BSDE
///      d log Y = (|Z/Y|^2 / 2 + r(X)) dt + (Z/Y) dW^T from the closed-form Y_0,
///      compared against the terminal value 1;
///  (b) per-step residual of the closed form in the same equation.
FbsdeReport fbsde_check(const FactorModel<double>& model, const QuadraticRate<double>& rate,
                        const PricedSystem<double>& bond, const SimulationOptions& options);

}  // namespace qtsm::mc
