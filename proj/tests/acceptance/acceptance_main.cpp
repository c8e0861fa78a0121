// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any failure.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <sstream>
#include <string>

#include "instances.hpp"
#include "qtsm/cli.hpp"
#include "qtsm/config.hpp"
#include "qtsm/flows1d.hpp"
#include "qtsm/montecarlo.hpp"
#include "qtsm/pricing.hpp"
#include "rk4_oracle.hpp"

namespace {

using namespace qtsm;
using Clock = std::chrono::steady_clock;

struct Outcome {
  bool pass;
  std::string detail;
};

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string fmt(const char* pattern, double a, double b = 0, double c = 0, double d = 0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, pattern, a, b, c, d);
  return buf;
}

std::string config_path(const std::string& name) { return std::string(QTSM_CONFIG_DIR) + "/" + name; }

std::vector<RiccatiProblem<double>> criterion1_instances() {
  std::mt19937_64 rng(20240611);
  std::uniform_real_distribution<double> maturity(0.5, 5.0);
  std::vector<RiccatiProblem<double>> out;
  for (int j = 0; j < 25; ++j) {
    const int n = 1 + j % 4;
    const double T = maturity(rng);
    out.push_back(testing::random_problem(rng, n, T, default_grid(T).steps()));
  }
  return out;
}

Outcome oracle_equivalence() {
  const auto start = Clock::now();
  double worst = 0;
  for (const auto& p : criterion1_instances()) {
    const auto path = solve_riccati(p);
    worst = std::max(worst, testing::path_distance(path, testing::rk4_oracle(p, 10)));
  }
  const double elapsed = seconds_since(start);
  return {worst <= 1e-8 && elapsed <= 30, fmt("max-abs vs 10x RK4 %.2e (tol 1e-8), %.1f s (limit 30 s)", worst, elapsed)};
}

Outcome decomposition_invariants() {
  double sym = 0, skew = 0, decomp = 0;
  bool terminal = true;
  for (const auto& p : criterion1_instances()) {
    const auto st = solve_hamiltonian(p);
    const auto r2 = solve_R2(st, p);
    const auto r1 = solve_R1(p, st);
    const auto r0 = solve_R0(p, st, r1);
    terminal = terminal && r2.back() == p.Theta && r1.back() == p.theta && r0.back() == p.cT;
    for (std::size_t i = 0; i < r2.size(); ++i) {
      const double un = 1 + st.U[i].norm();
      const double vn = 1 + st.V[i].norm();
      sym = std::max(sym, (st.U[i] - st.U[i].transpose()).norm() / un);
      skew = std::max(skew, (st.V[i] + st.V[i].transpose()).norm() / vn);
      const Matrix<double> s = 0.5 * (r2[i] + r2[i].transpose());
      const Matrix<double> k = 0.5 * (r2[i] - r2[i].transpose());
      decomp = std::max({decomp, (s + st.U[i]).norm() / un, (k + st.V[i]).norm() / vn});
    }
  }
  const bool pass = terminal && sym <= 1e-10 && skew <= 1e-10 && decomp <= 1e-10;
  return {pass, fmt("U asym %.1e, V sym %.1e, R2 = -(U+V) %.1e (tol 1e-10 rel), terminal exact: ", sym, skew, decomp) +
                    (terminal ? "yes" : "no")};
}

std::vector<flows1d::FlowParams<double>> random_flow_params(std::uint64_t seed, int count) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> beta(0.2, 2.0), c(0.0, 2.0), sigma(0.0, 0.5), alpha(-0.1, 0.2),
      a(0.0, 0.05), b(-0.05, 0.05);
  std::vector<flows1d::FlowParams<double>> out;
  for (int j = 0; j < count; ++j) out.push_back({alpha(rng), beta(rng), sigma(rng), a(rng), b(rng), c(rng)});
  out[0].c = 0;      // Vasicek limit
  out[1].sigma = 0;  // no diffusion
  return out;
}

Outcome flows_cross_check() {
  const auto start = Clock::now();
  const double T = 5.0;
  double worst = 0;
  for (const auto& fp : random_flow_params(7, 10)) {
    const auto sys = bond_system(flows1d::to_factor_model(fp, 0.0), flows1d::to_quadratic_rate(fp), default_grid(T));
    const int steps = sys.path.grid.steps();
    for (int j = 1; j <= 20; ++j) {
      const double tau = 0.25 * j;
      const int i = steps - j * steps / 20;
      worst = std::max({worst, std::abs(0.5 * flows1d::coeff_A(tau, fp) - sys.path.R2[i](0, 0)),
                        std::abs(flows1d::coeff_B(tau, fp) - sys.path.R1[i](0)),
                        std::abs(flows1d::coeff_C(tau, fp) - sys.path.R0[i])});
    }
  }
  const double elapsed = seconds_since(start);
  return {worst <= 1e-6 && elapsed <= 10, fmt("max |coefficient gap| %.2e (tol 1e-6), %.2f s (limit 10 s)", worst, elapsed)};
}

Outcome feynman_kac() {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> ut(0.05, 1.95), ux(-0.5, 0.5);
  const double T = 2.0;
  double worst = 0, coarse = 0, fine = 0;
  for (const auto& fp : random_flow_params(13, 5)) {
    for (int k = 0; k < 100; ++k) {
      const double t = ut(rng), x = ux(rng);
      worst = std::max(worst, std::abs(flows1d::pde_residual(fp, t, T, x, 1e-4)));
      coarse += std::abs(flows1d::pde_residual(fp, t, T, x, 0.04));
      fine += std::abs(flows1d::pde_residual(fp, t, T, x, 0.02));
    }
  }
  const double order = std::log2(coarse / fine);
  return {worst <= 1e-5 && order > 1.8 && order < 2.2,
          fmt("max residual at h=1e-4 %.2e (tol 1e-5), observed order %.2f (h 0.04 -> 0.02)", worst, order)};
}

struct Bracket {
  bool pass;
  std::string detail;
};

Bracket bracket_model(const Config& cfg, std::uint64_t seed) {
  const TimeGrid<double> grid(1.0, 500);
  mc::SimulationOptions opts;
  opts.n_paths = 100000;
  opts.seed = seed;
  const auto start = Clock::now();
  const auto est = mc::mc_products(cfg.model, cfg.rate, *cfg.payoff, grid, opts);
  const double elapsed = seconds_since(start);
  const auto cf_grid = default_grid(1.0);
  const auto bond = bond_system(cfg.model, cfg.rate, cf_grid);
  const auto& x0 = cfg.model.x0;
  const double p = price(bond, 0.0, x0);
  const double g = price(futures_system(cfg.model, *cfg.payoff, cf_grid), 0.0, x0);
  const double f = price(forward_system(cfg.model, cfg.rate, *cfg.payoff, cf_grid), bond, 0.0, x0);
  auto z = [](const mc::McEstimate& e, double v) { return std::abs(v - e.mean) / e.std_error; };
  const bool pass = est.bond.brackets(p, 3) && est.futures.brackets(g, 3) && est.forward.brackets(f, 3) && elapsed <= 60;
  return {pass, fmt("z bond %.2f futures %.2f forward %.2f, %.1f s", z(est.bond, p), z(est.futures, g), z(est.forward, f),
                    elapsed)};
}

Outcome mc_bracketing() {
  std::string detail;
  bool pass = true;
  for (const char* name : {"quadratic_1d.json", "two_factor.json"}) {
    const Config cfg = load_config(config_path(name));
    auto r = bracket_model(cfg, cfg.numeric.mc_seed);
    std::string d = std::string(name) + ": " + r.detail;
    if (!r.pass) {
      // One rerun with a fixed second seed before failing.
      r = bracket_model(cfg, cfg.numeric.mc_seed + 1000003);
      d += "; rerun " + r.detail;
    }
    pass = pass && r.pass;
    detail += (detail.empty() ? "" : "; ") + d;
  }
  return {pass, detail + " (10^5 paths, N=500, width 3)"};
}

Outcome fbsde_verification() {
  const Config cfg = load_config(config_path("quadratic_1d.json"));
  mc::SimulationOptions opts;
  opts.n_paths = 10000;
  opts.seed = cfg.numeric.mc_seed;
  opts.brownian_steps = 2000;
  std::vector<double> errors;
  bool monotone = true;
  for (int steps : {250, 500, 1000, 2000}) {
    const auto bond = bond_system(cfg.model, cfg.rate, TimeGrid<double>(1.0, steps));
    errors.push_back(mc::fbsde_check(cfg.model, cfg.rate, bond, opts).mean_abs_terminal_error);
    if (errors.size() > 1) monotone = monotone && errors.back() < errors[errors.size() - 2];
  }
  const auto flat = QuadraticRate<double>::constant(1, 0.05);
  opts.brownian_steps = 0;
  opts.n_paths = 1000;
  const auto rep = mc::fbsde_check(cfg.model, flat, bond_system(cfg.model, flat, TimeGrid<double>(1.0, 500)), opts);
  const bool pass = monotone && rep.max_bsde_increment_residual <= 1e-12;
  return {pass, fmt("mean |Y_N - 1| at N=250,500,1000,2000: %.3e %.3e %.3e %.3e", errors[0], errors[1], errors[2],
                    errors[3]) +
                    fmt(", constant-rate max residual %.1e (tol 1e-12)", rep.max_bsde_increment_residual)};
}

Outcome deterministic_rate_identity() {
  const Config cfg = load_config(config_path("two_factor.json"));
  const auto rate = QuadraticRate<double>::constant(2, cfg.rate.k);
  const auto grid = default_grid(1.0);
  const auto bond = bond_system(cfg.model, rate, grid);
  const auto fwd = forward_system(cfg.model, rate, *cfg.payoff, grid);
  const auto fut = futures_system(cfg.model, *cfg.payoff, grid);
  std::mt19937_64 rng(5);
  double worst = 0;
  for (int k = 0; k < 100; ++k) {
    const Vector<double> x = testing::uniform_matrix(rng, 2, 1, -1, 1).col(0);
    for (int i = 0; i <= grid.steps(); ++i) {
      const double t = grid.time(i);
      const double g = price(fut, t, x);
      worst = std::max(worst, std::abs(price(fwd, bond, t, x) - g) / g);
    }
  }
  return {worst <= 1e-10, fmt("max |F - G| / G %.2e over %g nodes x 100 states (tol 1e-10)", worst, grid.steps() + 1)};
}

Outcome degenerate_cases() {
  const Config cfg = load_config(config_path("two_factor.json"));
  std::mt19937_64 rng(3);
  const auto grid = default_grid(2.0);
  const auto bond = bond_system(cfg.model, cfg.rate, grid);
  bool unit = true;
  for (int k = 0; k < 100; ++k) unit = unit && price(bond, 2.0, Vector<double>(testing::uniform_matrix(rng, 2, 1).col(0))) == 1.0;

  const double k = 0.05;
  const auto flat = bond_system(cfg.model, QuadraticRate<double>::constant(2, k), grid);
  double flat_err = 0;
  for (int i = 0; i <= grid.steps(); ++i) {
    const double t = grid.time(i);
    flat_err = std::max(flat_err, std::abs(price(flat, t, cfg.model.x0) - std::exp(-k * (2.0 - t))));
  }

  double vasicek = 0;
  for (auto fp : random_flow_params(17, 5)) {
    fp.c = 0;
    const auto affine = bond_system(flows1d::to_factor_model(fp, 0.0), flows1d::to_quadratic_rate(fp), grid);
    for (int i = 0; i < grid.steps(); i += 20) {
      for (double x : {-0.3, 0.0, 0.1, 0.4}) {
        const double t = grid.time(i);
        vasicek = std::max(vasicek, std::abs(flows1d::bond_price_1d(t, 2.0, x, fp) -
                                             price(affine, t, Vector<double>::Constant(1, x))));
      }
    }
  }
  return {unit && flat_err <= 1e-12 && vasicek <= 1e-8,
          std::string("P(T,T) = 1 exactly: ") + (unit ? "yes" : "no") +
              fmt(", constant rate %.1e (tol 1e-12), c = 0 vs affine pipeline %.1e (tol 1e-8)", flat_err, vasicek)};
}

Outcome determinism() {
  auto run = [](const std::string& threads) {
    std::ostringstream out, err;
    const int code = cli::run({"validate", "-c", config_path("two_factor.json"), "--paths", "20000", "--steps", "200",
                               "--seed", "11", "--threads", threads},
                              out, err);
    return std::make_pair(code, out.str());
  };
  const auto a = run("1");
  const auto b = run("4");
  const auto c = run("4");
  const bool pass = a.first == 0 && !a.second.empty() && a.second == b.second && b.second == c.second;
  return {pass, fmt("validate reports byte-identical for threads 1, 4, 4 (%g bytes)", static_cast<double>(a.second.size()))};
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
      {"Riccati oracle equivalence", oracle_equivalence},
      {"decomposition invariants", decomposition_invariants},
      {"flows cross-check", flows_cross_check},
      {"Feynman-Kac residual", feynman_kac},
      {"Monte Carlo bracketing", mc_bracketing},
      {"FBSDE verification", fbsde_verification},
      {"deterministic-rate identity", deterministic_rate_identity},
      {"degenerate-case exactness", degenerate_cases},
      {"determinism", determinism},
  };
  int failures = 0;
  for (std::size_t j = 0; j < criteria.size(); ++j) {
    Outcome o;
    try {
      o = criteria[j].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    if (!o.pass) ++failures;
    std::printf("%s %zu %s: %s\n", o.pass ? "PASS" : "FAIL", j + 1, criteria[j].first, o.detail.c_str());
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
