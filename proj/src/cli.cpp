#include "qtsm/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <optional>

#include "qtsm/config.hpp"
#include "qtsm/flows1d.hpp"
#include "qtsm/montecarlo.hpp"
#include "qtsm/pricing.hpp"
#include "qtsm/report.hpp"

namespace qtsm::cli {

namespace {

using report::Json;
using report::format_number;

enum class Format { json, csv };

struct Common {
  std::string config_path;
  std::string format = "json";
};

struct PriceArgs {
  std::string product = "bond";
  double maturity = 1.0;
  double t = 0.0;
  std::vector<double> state;
};

struct CurveArgs {
  std::vector<double> maturities;
  std::vector<double> state;
};

struct FlowArgs {
  double alpha = 0, beta = 1, sigma = 0, a = 0, b = 0, c = 0;
  std::vector<double> tau;
  std::optional<double> state;
};

struct ValidateArgs {
  double maturity = 1.0;
  std::optional<std::size_t> paths;
  int steps = 500;
  std::optional<std::uint64_t> seed;
  double sigmas = 3.0;
  int threads = 0;
};

Product parse_product(const std::string& s) {
  if (s == "bond") return Product::bond;
  if (s == "futures") return Product::futures;
  if (s == "forward") return Product::forward;
  throw DomainError("unknown product '" + s + "'");
}

void emit(std::ostream& out, Format fmt, const Json& json, const std::string& csv_text) {
  if (fmt == Format::csv) {
    out << csv_text;
  } else {
    out << json.dump(2) << '\n';
  }
}

Vector<double> state_or_x0(const std::vector<double>& state, const Config& cfg) {
  if (state.empty()) return cfg.model.x0;
  if (static_cast<Eigen::Index>(state.size()) != cfg.model.dim()) {
    throw DimensionError("--state has " + std::to_string(state.size()) + " entries, model dimension is " +
                         std::to_string(cfg.model.dim()));
  }
  return Eigen::Map<const Vector<double>>(state.data(), static_cast<Eigen::Index>(state.size()));
}

const QuadraticPayoff<double>& require_payoff(const Config& cfg, Product product) {
  if (!cfg.payoff) throw ConfigError({std::string("/payoff: payoff required for product ") + to_string(product)});
  return *cfg.payoff;
}

Config load(const Common& common, std::ostream& err) {
  Config cfg = load_config(common.config_path);
  for (const auto& w : cfg.warnings) err << "warning: " << w << '\n';
  return cfg;
}

int even_steps(int steps, std::ostream& err) {
  if (steps % 2 != 0) {
    err << "warning: odd step count " << steps << " raised to " << steps + 1 << '\n';
    return steps + 1;
  }
  return steps;
}

/// Solved systems for one product; the forward product also carries its bond.
struct Systems {
  PricedSystem<double> main;
  std::optional<PricedSystem<double>> bond;
};

Systems solve_product(const Config& cfg, Product product, const TimeGrid<double>& grid) {
  switch (product) {
    case Product::bond: return {bond_system(cfg.model, cfg.rate, grid), std::nullopt};
    case Product::futures: return {futures_system(cfg.model, require_payoff(cfg, product), grid), std::nullopt};
    case Product::forward:
      return {forward_system(cfg.model, cfg.rate, require_payoff(cfg, product), grid),
              bond_system(cfg.model, cfg.rate, grid)};
    case Product::custom: break;
  }
  throw DomainError("unsupported product");
}

double closed_form_price(const Systems& sys, double t, const Vector<double>& x) {
  return sys.bond ? price(sys.main, *sys.bond, t, x) : price(sys.main, t, x);
}

void cmd_solve(const Common& common, Format fmt, const std::string& product_name, double maturity, std::ostream& out,
               std::ostream& err) {
  const Config cfg = load(common, err);
  const Product product = parse_product(product_name);
  const auto sys = solve_product(cfg, product, cfg.grid(maturity));
  emit(out, fmt, report::coefficient_path_json(sys.main.path), report::coefficient_path_csv(sys.main.path));
}

void cmd_price(const Common& common, Format fmt, const PriceArgs& a, std::ostream& out, std::ostream& err) {
  const Config cfg = load(common, err);
  const Product product = parse_product(a.product);
  const Vector<double> x = state_or_x0(a.state, cfg);
  if (!(a.maturity >= 0)) throw DomainError("--maturity must be >= 0");
  if (!(a.t >= 0 && a.t <= a.maturity)) throw DomainError("--t must lie in [0, maturity]");

  double value = 1.0;
  if (a.t == a.maturity) {
    // Terminal data: P(T,T) = 1, G(T,T) = F(T,T) = S(T, x).
    if (product != Product::bond) value = eval_payoff(require_payoff(cfg, product), x);
  } else {
    const auto sys = solve_product(cfg, product, cfg.grid(a.maturity));
    value = closed_form_price(sys, a.t, x);
  }
  Json j;
  j["product"] = to_string(product);
  j["maturity"] = a.maturity;
  j["t"] = a.t;
  j["state"] = report::vector_json(x);
  j["price"] = value;
  emit(out, fmt, j,
       report::csv({"product", "maturity", "t", "price"},
                   {{to_string(product), format_number(a.maturity), format_number(a.t), format_number(value)}}));
}

void cmd_curve(const Common& common, Format fmt, const CurveArgs& a, std::ostream& out, std::ostream& err) {
  const Config cfg = load(common, err);
  const Vector<double> x = state_or_x0(a.state, cfg);
  const auto curve = yield_curve(cfg.model, cfg.rate, x, a.maturities, cfg.numeric.grid_step_max);
  Json j;
  j["state"] = report::vector_json(x);
  Json points = Json::array();
  std::vector<std::vector<std::string>> rows;
  for (const auto& p : curve) {
    Json pt;
    pt["maturity"] = p.maturity;
    pt["yield"] = p.yield;
    pt["price"] = p.price;
    points.push_back(std::move(pt));
    rows.push_back({format_number(p.maturity), format_number(p.yield), format_number(p.price)});
  }
  j["points"] = std::move(points);
  emit(out, fmt, j, report::csv({"maturity", "yield", "price"}, rows));
}

void cmd_flows1d(Format fmt, const FlowArgs& a, std::ostream& out) {
  const flows1d::FlowParams<double> p{a.alpha, a.beta, a.sigma, a.a, a.b, a.c};
  p.validate();
  Json j;
  Json params;
  params["alpha"] = p.alpha;
  params["beta"] = p.beta;
  params["sigma"] = p.sigma;
  params["a"] = p.a;
  params["b"] = p.b;
  params["c"] = p.c;
  j["params"] = std::move(params);
  j["eta"] = p.eta();
  if (a.state) j["state"] = *a.state;
  Json points = Json::array();
  std::vector<std::string> header{"tau", "A", "B", "C"};
  if (a.state) header.push_back("price");
  std::vector<std::vector<std::string>> rows;
  for (double tau : a.tau) {
    const double ca = flows1d::coeff_A(tau, p);
    const double cb = flows1d::coeff_B(tau, p);
    const double cc = flows1d::coeff_C(tau, p);
    Json pt;
    pt["tau"] = tau;
    pt["A"] = ca;
    pt["B"] = cb;
    pt["C"] = cc;
    std::vector<std::string> row{format_number(tau), format_number(ca), format_number(cb), format_number(cc)};
    if (a.state) {
      const double price = flows1d::bond_price_1d(0.0, tau, *a.state, p);
      pt["price"] = price;
      row.push_back(format_number(price));
    }
    points.push_back(std::move(pt));
    rows.push_back(std::move(row));
  }
  j["points"] = std::move(points);
  emit(out, fmt, j, report::csv(header, rows));
}

void cmd_validate(const Common& common, Format fmt, const ValidateArgs& a, std::ostream& out, std::ostream& err) {
  const Config cfg = load(common, err);
  if (!(a.maturity > 0)) throw DomainError("--maturity must be positive");
  if (!(a.sigmas > 0)) throw DomainError("--sigmas must be positive");
  mc::SimulationOptions opts;
  opts.n_paths = a.paths.value_or(cfg.numeric.mc_paths);
  opts.seed = a.seed.value_or(cfg.numeric.mc_seed);
  opts.threads = a.threads;
  if (opts.n_paths < 2) throw DomainError("--paths must be at least 2");
  const TimeGrid<double> mc_grid(a.maturity, even_steps(a.steps, err));
  const TimeGrid<double> cf_grid = cfg.grid(a.maturity);
  const Vector<double>& x0 = cfg.model.x0;

  struct Row {
    Product product;
    double closed_form;
    mc::McEstimate estimate;
  };
  std::vector<Row> rows;
  const auto bond = bond_system(cfg.model, cfg.rate, cf_grid);
  if (cfg.payoff) {
    const auto est = mc::mc_products(cfg.model, cfg.rate, *cfg.payoff, mc_grid, opts);
    const auto fut = futures_system(cfg.model, *cfg.payoff, cf_grid);
    const auto fwd = forward_system(cfg.model, cfg.rate, *cfg.payoff, cf_grid);
    rows.push_back({Product::bond, price(bond, 0.0, x0), est.bond});
    rows.push_back({Product::futures, price(fut, 0.0, x0), est.futures});
    rows.push_back({Product::forward, price(fwd, bond, 0.0, x0), est.forward});
  } else {
    rows.push_back({Product::bond, price(bond, 0.0, x0), mc::mc_bond(cfg.model, cfg.rate, mc_grid, opts)});
  }
  const auto fbsde = mc::fbsde_check(cfg.model, cfg.rate, bond_system(cfg.model, cfg.rate, mc_grid), opts);

  Json j;
  j["maturity"] = a.maturity;
  j["paths"] = opts.n_paths;
  j["steps"] = mc_grid.steps();
  j["seed"] = opts.seed;
  j["sigmas"] = a.sigmas;
  j["state"] = report::vector_json(x0);
  Json products = Json::array();
  std::vector<std::vector<std::string>> csv_rows;
  bool within = true;
  bool within3 = true;
  for (const auto& r : rows) {
    const double dev = std::abs(r.closed_form - r.estimate.mean);
    const double z = r.estimate.std_error > 0 ? dev / r.estimate.std_error : (dev == 0 ? 0.0 : INFINITY);
    const bool ok = r.estimate.brackets(r.closed_form, a.sigmas);
    within = within && ok;
    within3 = within3 && r.estimate.brackets(r.closed_form, 3.0);
    Json p;
    p["product"] = to_string(r.product);
    p["closed_form"] = r.closed_form;
    p["mc"] = report::estimate_json(r.estimate);
    p["z"] = z;
    p["within_sigmas"] = ok;
    products.push_back(std::move(p));
    csv_rows.push_back({to_string(r.product), format_number(r.closed_form), format_number(r.estimate.mean),
                        format_number(r.estimate.std_error), format_number(z), ok ? "true" : "false"});
  }
  j["products"] = std::move(products);
  j["fbsde"] = report::fbsde_json(fbsde);
  j["within_sigmas"] = within;
  j["closed_form_within_3_sigma"] = within3;
  emit(out, fmt, j, report::csv({"product", "closed_form", "mc_mean", "mc_stderr", "z", "within_sigmas"}, csv_rows));
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Quadratic term-structure pricing: closed forms, 1D flows and Monte Carlo checks", "qtsm"};
  app.require_subcommand(1);
  Common common;
  const std::vector<std::string> formats{"json", "csv"};

  auto add_common = [&](CLI::App* sub, bool needs_config) {
    if (needs_config) {
      sub->add_option("--config,-c", common.config_path, "model config (JSON)")->required()->check(CLI::ExistingFile);
    }
    sub->add_option("--format", common.format, "output format")->check(CLI::IsMember(formats));
  };

  std::string solve_product_name = "bond";
  double solve_maturity = 1.0;
  auto* solve = app.add_subcommand("solve", "dump the Riccati coefficient path of a product");
  add_common(solve, true);
  solve->add_option("--product", solve_product_name, "bond | futures | forward");
  solve->add_option("--maturity,-T", solve_maturity, "maturity T")->required()->check(CLI::PositiveNumber);

  PriceArgs price_args;
  auto* price_cmd = app.add_subcommand("price", "closed-form price at (t, state)");
  add_common(price_cmd, true);
  price_cmd->add_option("--product", price_args.product, "bond | futures | forward");
  price_cmd->add_option("--maturity,-T", price_args.maturity, "maturity T")->required();
  price_cmd->add_option("--t", price_args.t, "valuation time in [0, T]");
  price_cmd->add_option("--state", price_args.state, "factor state, comma separated (default x0)")->delimiter(',');

  CurveArgs curve_args;
  auto* curve = app.add_subcommand("curve", "zero-coupon yield curve");
  add_common(curve, true);
  curve->add_option("--maturities", curve_args.maturities, "increasing maturities, comma separated")
      ->required()
      ->delimiter(',');
  curve->add_option("--state", curve_args.state, "factor state (default x0)")->delimiter(',');

  FlowArgs flow_args;
  auto* flows = app.add_subcommand("flows1d", "one-factor closed-form coefficients A, B, C");
  add_common(flows, false);
  flows->add_option("--alpha", flow_args.alpha, "mean-reversion level")->required();
  flows->add_option("--beta", flow_args.beta, "mean-reversion speed (> 0)")->required();
  flows->add_option("--sigma", flow_args.sigma, "volatility")->required();
  flows->add_option("--a", flow_args.a, "rate constant term")->required();
  flows->add_option("--b", flow_args.b, "rate linear coefficient")->required();
  flows->add_option("--c", flow_args.c, "rate quadratic coefficient (>= 0)")->required();
  flows->add_option("--tau", flow_args.tau, "times to maturity, comma separated")->required()->delimiter(',');
  flows->add_option("--state", flow_args.state, "factor value for the bond price");

  ValidateArgs val_args;
  auto* validate = app.add_subcommand("validate", "Monte Carlo bracketing of closed forms and FBSDE check");
  add_common(validate, true);
  validate->add_option("--maturity,-T", val_args.maturity, "maturity T");
  validate->add_option("--paths", val_args.paths, "number of paths (default numeric.mc_paths)");
  validate->add_option("--steps", val_args.steps, "simulation steps")->check(CLI::PositiveNumber);
  validate->add_option("--seed", val_args.seed, "RNG seed (default numeric.mc_seed)");
  validate->add_option("--sigmas", val_args.sigmas, "bracketing width in standard errors");
  validate->add_option("--threads", val_args.threads, "worker threads (0: all; capped by QTSM_THREADS)")
      ->check(CLI::NonNegativeNumber);

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kSuccess : kConfigError;
  }

  const Format fmt = common.format == "csv" ? Format::csv : Format::json;
  try {
    if (solve->parsed()) {
      cmd_solve(common, fmt, solve_product_name, solve_maturity, out, err);
    } else if (price_cmd->parsed()) {
      cmd_price(common, fmt, price_args, out, err);
    } else if (curve->parsed()) {
      cmd_curve(common, fmt, curve_args, out, err);
    } else if (flows->parsed()) {
      cmd_flows1d(fmt, flow_args, out);
    } else if (validate->parsed()) {
      cmd_validate(common, fmt, val_args, out, err);
    }
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << '\n';
    return kConfigError;
  } catch (const NumericalError& e) {
    err << "numerical failure: " << e.what() << '\n';
    return kNumericalError;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kConfigError;
  }
  return kSuccess;
}

}  // namespace qtsm::cli
