#include "qtsm/montecarlo.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <string>
#include <thread>

#include "qtsm/random.hpp"

namespace qtsm::mc {

int resolve_threads(int requested) {
  int threads = requested > 0 ? requested : static_cast<int>(std::thread::hardware_concurrency());
  if (threads < 1) threads = 1;
  if (const char* env = std::getenv("QTSM_THREADS")) {
    char* end = nullptr;
    const long cap = std::strtol(env, &end, 10);
    if (end != env && cap >= 1) threads = std::min<long>(threads, cap);
  }
  return threads;
}

bool McEstimate::brackets(double value, double sigmas) const {
  return std::abs(value - mean) <= sigmas * std_error;
}

McEstimate summarize(const std::vector<double>& samples) {
  McEstimate est;
  est.n_paths = samples.size();
  if (samples.empty()) return est;
  double sum = 0.0;
  for (double v : samples) sum += v;
  est.mean = sum / static_cast<double>(samples.size());
  if (samples.size() > 1) {
    double ss = 0.0;
    for (double v : samples) ss += (v - est.mean) * (v - est.mean);
    const double var = ss / static_cast<double>(samples.size() - 1);
    est.std_error = std::sqrt(var / static_cast<double>(samples.size()));
  }
  return est;
}

namespace {

bool same_grid(const TimeGrid<double>& a, const TimeGrid<double>& b) {
  return a.steps() == b.steps() && a.maturity() == b.maturity();
}

/// Runs kernel(path, states, increments, out) for every path, `width` outputs per
/// path, stored at out[path * width]. Paths are split into contiguous chunks per
/// thread; results are independent of the thread count.
template <typename Kernel>
std::vector<double> run_paths(std::size_t n_paths, int width, int threads, const Kernel& kernel) {
  std::vector<double> results(n_paths * static_cast<std::size_t>(width));
  const int workers = std::max(1, std::min<int>(threads, static_cast<int>(std::max<std::size_t>(n_paths, 1))));
  std::vector<std::exception_ptr> errors(workers);
  auto work = [&](int w) {
    try {
      Matrix<double> states;
      Matrix<double> increments;
      const std::size_t begin = n_paths * w / workers;
      const std::size_t end = n_paths * (w + 1) / workers;
      for (std::size_t p = begin; p < end; ++p) kernel(p, states, increments, results.data() + p * width);
    } catch (...) {
      errors[w] = std::current_exception();
    }
  };
  if (workers == 1) {
    work(0);
  } else {
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (int w = 0; w < workers; ++w) pool.emplace_back(work, w);
    for (auto& t : pool) t.join();
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  return results;
}

std::vector<double> column(const std::vector<double>& results, int width, int col) {
  std::vector<double> out(results.size() / width);
  for (std::size_t p = 0; p < out.size(); ++p) out[p] = results[p * width + col];
  return out;
}

/// x^T M x without temporaries.
double quad_form(const Matrix<double>& m, const double* x) {
  const auto n = m.rows();
  double sum = 0.0;
  for (Eigen::Index c = 0; c < n; ++c) {
    double col = 0.0;
    for (Eigen::Index r = 0; r < n; ++r) col += x[r] * m(r, c);
    sum += col * x[c];
  }
  return sum;
}

double linear_form(const RowVector<double>& v, const double* x) {
  double sum = 0.0;
  for (Eigen::Index i = 0; i < v.size(); ++i) sum += v(i) * x[i];
  return sum;
}

double short_rate(const QuadraticRate<double>& rate, const double* x) {
  return quad_form(rate.Gamma, x) + linear_form(rate.R, x) + rate.k;
}

double trapezoid_rate_integral(const QuadraticRate<double>& rate, const Matrix<double>& states, double h) {
  const auto cols = states.cols();
  double sum = 0.0;
  for (Eigen::Index i = 0; i < cols; ++i) {
    const double r = short_rate(rate, states.col(i).data());
    sum += (i == 0 || i == cols - 1) ? 0.5 * r : r;
  }
  return sum * h;
}

double terminal_payoff(const QuadraticPayoff<double>& payoff, const Matrix<double>& states) {
  const double* x = states.col(states.cols() - 1).data();
  const double e = quad_form(payoff.aT, x) + linear_form(payoff.bT, x) + payoff.cT;
  if (e > max_exponent<double>()) {
    throw NumericalError("payoff exponent " + std::to_string(e) + " overflows");
  }
  return std::exp(e);
}

}  // namespace

PathSimulator::PathSimulator(const FactorModel<double>& model, const TimeGrid<double>& grid,
                             const SimulationOptions& options, Measure measure, const CoefficientPath<double>* bond)
    : model_(model), grid_(grid), seed_(options.seed), substeps_(1), measure_(measure) {
  check_dimensions(model_);
  if (!model_.A.allFinite() || !model_.B.allFinite() || !model_.sigma.allFinite() || !model_.x0.allFinite()) {
    throw DomainError("factor model has non-finite entries");
  }
  if (options.brownian_steps != 0) {
    if (options.brownian_steps < grid.steps() || options.brownian_steps % grid.steps() != 0) {
      throw DomainError("brownian_steps must be a multiple of the simulation step count");
    }
    substeps_ = options.brownian_steps / grid.steps();
  }
  if (measure_ == Measure::forward) {
    if (bond == nullptr) throw DomainError("forward-measure simulation needs a solved bond system");
    if (bond->grid.maturity() != grid.maturity()) throw DomainError("bond system maturity differs from the grid");
    const Matrix<double> s = model_.diffusion();
    const bool nodes = same_grid(bond->grid, grid);
    drift_matrix_.reserve(grid.steps());
    drift_offset_.reserve(grid.steps());
    for (int i = 0; i < grid.steps(); ++i) {
      const auto c = nodes ? CoefficientPath<double>::Node{bond->R2[i], bond->R1[i], bond->R0[i]}
                           : bond->at(grid.time(i));
      drift_matrix_.push_back(model_.A + s * (c.R2 + c.R2.transpose()));
      drift_offset_.push_back(model_.B + s * c.R1.transpose());
    }
  }
}

void PathSimulator::simulate(std::size_t path, Matrix<double>& states, Matrix<double>* increments) const {
  const auto n = model_.dim();
  const int steps = grid_.steps();
  const double h = grid_.step();
  const double fine_scale = std::sqrt(h / substeps_);
  // Fine step f, component r uses normal number f n + r of the path.
  NormalStream stream(seed_, path);
  states.resize(n, steps + 1);
  states.col(0) = model_.x0;
  if (increments) increments->resize(n, steps);
  // Plain loops: n is small and Eigen's dynamic-size kernels dominate otherwise.
  std::vector<double> dw(n);
  const bool forward = measure_ == Measure::forward;
  for (int i = 0; i < steps; ++i) {
    std::fill(dw.begin(), dw.end(), 0.0);
    for (int j = 0; j < substeps_; ++j) {
      for (Eigen::Index r = 0; r < n; ++r) dw[r] += fine_scale * stream.next();
    }
    const Matrix<double>& a = forward ? drift_matrix_[i] : model_.A;
    const Vector<double>& b = forward ? drift_offset_[i] : model_.B;
    const double* x = states.col(i).data();
    double* y = states.col(i + 1).data();
    bool finite = true;
    for (Eigen::Index r = 0; r < n; ++r) {
      double drift = b(r);
      double noise = 0.0;
      for (Eigen::Index c = 0; c < n; ++c) {
        drift += a(r, c) * x[c];
        noise += model_.sigma(r, c) * dw[c];
      }
      y[r] = x[r] + h * drift + noise;
      finite = finite && std::isfinite(y[r]);
    }
    if (!finite) {
      throw NumericalError("non-finite state on path " + std::to_string(path) + " at step " + std::to_string(i + 1));
    }
    if (increments) {
      for (Eigen::Index r = 0; r < n; ++r) (*increments)(r, i) = dw[r];
    }
  }
}

PathEnsemble simulate_paths(const FactorModel<double>& model, const TimeGrid<double>& grid,
                            const SimulationOptions& options, Measure measure, const CoefficientPath<double>* bond) {
  const PathSimulator sim(model, grid, options, measure, bond);
  PathEnsemble ens;
  ens.n_paths = options.n_paths;
  ens.grid = grid;
  ens.dim = sim.dim();
  ens.seed = options.seed;
  ens.measure = measure;
  const int width = ens.dim * (grid.steps() + 1);
  ens.states = run_paths(options.n_paths, width, resolve_threads(options.threads),
                         [&](std::size_t p, Matrix<double>& states, Matrix<double>&, double* out) {
                           sim.simulate(p, states);
                           std::copy(states.data(), states.data() + width, out);
                         });
  return ens;
}

McEstimate mc_bond(const FactorModel<double>& model, const QuadraticRate<double>& rate, const TimeGrid<double>& grid,
                   const SimulationOptions& options) {
  check_dimensions(rate, model.dim());
  const PathSimulator sim(model, grid, options, Measure::risk_neutral);
  const double h = grid.step();
  const auto results = run_paths(options.n_paths, 1, resolve_threads(options.threads),
                                 [&](std::size_t p, Matrix<double>& states, Matrix<double>&, double* out) {
                                   sim.simulate(p, states);
                                   out[0] = std::exp(-trapezoid_rate_integral(rate, states, h));
                                 });
  return summarize(results);
}

McEstimate mc_terminal_expectation(const FactorModel<double>& model, const QuadraticPayoff<double>& payoff,
                                   const TimeGrid<double>& grid, const SimulationOptions& options) {
  check_dimensions(payoff, model.dim());
  const PathSimulator sim(model, grid, options, Measure::risk_neutral);
  const auto results = run_paths(options.n_paths, 1, resolve_threads(options.threads),
                                 [&](std::size_t p, Matrix<double>& states, Matrix<double>&, double* out) {
                                   sim.simulate(p, states);
                                   out[0] = terminal_payoff(payoff, states);
                                 });
  return summarize(results);
}

McEstimate mc_discounted_payoff(const FactorModel<double>& model, const QuadraticRate<double>& rate,
                                const QuadraticPayoff<double>& payoff, const TimeGrid<double>& grid,
                                const SimulationOptions& options) {
  return mc_products(model, rate, payoff, grid, options).discounted_payoff;
}

ProductEstimates mc_products(const FactorModel<double>& model, const QuadraticRate<double>& rate,
                             const QuadraticPayoff<double>& payoff, const TimeGrid<double>& grid,
                             const SimulationOptions& options) {
  check_dimensions(rate, model.dim());
  check_dimensions(payoff, model.dim());
  const PathSimulator sim(model, grid, options, Measure::risk_neutral);
  const double h = grid.step();
  constexpr int kWidth = 3;
  const auto results = run_paths(options.n_paths, kWidth, resolve_threads(options.threads),
                                 [&](std::size_t p, Matrix<double>& states, Matrix<double>&, double* out) {
                                   sim.simulate(p, states);
                                   const double discount = std::exp(-trapezoid_rate_integral(rate, states, h));
                                   const double s = terminal_payoff(payoff, states);
                                   out[0] = discount;
                                   out[1] = s;
                                   out[2] = discount * s;
                                 });
  ProductEstimates est;
  const auto discounts = column(results, kWidth, 0);
  const auto discounted = column(results, kWidth, 2);
  est.bond = summarize(discounts);
  est.futures = summarize(column(results, kWidth, 1));
  est.discounted_payoff = summarize(discounted);

  const double ratio = est.discounted_payoff.mean / est.bond.mean;
  std::vector<double> residual(discounts.size());
  for (std::size_t p = 0; p < residual.size(); ++p) {
    residual[p] = (discounted[p] - ratio * discounts[p]) / est.bond.mean;
  }
  const McEstimate spread = summarize(residual);
  est.forward = {ratio, spread.std_error, spread.n_paths};
  return est;
}

FbsdeReport fbsde_check(const FactorModel<double>& model, const QuadraticRate<double>& rate,
                        const PricedSystem<double>& bond, const SimulationOptions& options) {
  if (bond.product != Product::bond) throw DomainError("fbsde_check needs a bond system");
  check_dimensions(rate, model.dim());
  const auto& path = bond.path;
  const auto& grid = path.grid;
  const PathSimulator sim(model, grid, options, Measure::forward, &path);
  const int steps = grid.steps();
  const double h = grid.step();

  // Per-node 2 sym(R2) sigma and R1 sigma give Z/Y = x^T (R2 + R2^T) sigma + R1 sigma.
  std::vector<Matrix<double>> z_quad(steps + 1);
  std::vector<RowVector<double>> z_lin(steps + 1);
  for (int i = 0; i <= steps; ++i) {
    z_quad[i] = (path.R2[i] + path.R2[i].transpose()) * model.sigma;
    z_lin[i] = path.R1[i] * model.sigma;
  }
  auto log_y = [&](int i, const double* x) { return quad_form(path.R2[i], x) + linear_form(path.R1[i], x) + path.R0[i]; };

  constexpr int kWidth = 3;
  const auto n = model.dim();
  const auto results = run_paths(
      options.n_paths, kWidth, resolve_threads(options.threads),
      [&](std::size_t p, Matrix<double>& states, Matrix<double>& increments, double* out) {
        sim.simulate(p, states, &increments);
        double phi = log_y(0, states.col(0).data());
        double euler = phi;
        double residual_sum = 0.0;
        double residual_max = 0.0;
        for (int i = 0; i < steps; ++i) {
          const double* x = states.col(i).data();
          double z2 = 0.0;
          double noise = 0.0;
          for (Eigen::Index c = 0; c < n; ++c) {
            double zc = z_lin[i](c);
            for (Eigen::Index r = 0; r < n; ++r) zc += x[r] * z_quad[i](r, c);
            z2 += zc * zc;
            noise += zc * increments(c, i);
          }
          const double drift = (0.5 * z2 + short_rate(rate, x)) * h;
          const double phi_next = log_y(i + 1, states.col(i + 1).data());
          const double residual = std::abs(phi_next - phi - drift - noise);
          residual_sum += residual;
          residual_max = std::max(residual_max, residual);
          euler += drift + noise;
          phi = phi_next;
        }
        out[0] = std::abs(std::exp(euler) - 1.0);
        out[1] = residual_sum;
        out[2] = residual_max;
      });

  FbsdeReport report;
  report.n_paths = options.n_paths;
  report.steps = steps;
  if (options.n_paths == 0) return report;
  double terminal_sum = 0.0;
  double residual_sum = 0.0;
  for (std::size_t p = 0; p < options.n_paths; ++p) {
    terminal_sum += results[p * kWidth];
    report.max_terminal_error = std::max(report.max_terminal_error, results[p * kWidth]);
    residual_sum += results[p * kWidth + 1];
    report.max_bsde_increment_residual = std::max(report.max_bsde_increment_residual, results[p * kWidth + 2]);
  }
  report.mean_abs_terminal_error = terminal_sum / static_cast<double>(options.n_paths);
  report.mean_bsde_increment_residual = residual_sum / (static_cast<double>(options.n_paths) * steps);
  return report;
}

}  // namespace qtsm::mc
