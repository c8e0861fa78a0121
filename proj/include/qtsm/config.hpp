#pragma once

// JSON model configuration for the command-line front end.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "qtsm/errors.hpp"
#include "qtsm/model.hpp"
#include "qtsm/pricing.hpp"

namespace qtsm {

struct NumericOptions {
  double grid_step_max = kDefaultMaxStep;
  std::size_t mc_paths = 100000;
  std::uint64_t mc_seed = 1;
  /// Fixed step count for closed-form grids; overrides grid_step_max when set.
  std::optional<int> steps;
};

struct Config {
  FactorModel<double> model;
  QuadraticRate<double> rate;
  std::optional<QuadraticPayoff<double>> payoff;
  NumericOptions numeric;
  /// Repairs applied while loading (e.g. an odd step count made even).
  std::vector<std::string> warnings;

  /// Closed-form grid for maturity T under the numeric options.
  TimeGrid<double> grid(double maturity) const;
};

/// Invalid configuration: every problem found, each prefixed with its JSON path.
class ConfigError : public Error {
 public:
  explicit ConfigError(std::vector<std::string> issues);
  const std::vector<std::string>& issues() const { return issues_; }

 private:
  std::vector<std::string> issues_;
};

Config parse_config(const nlohmann::json& doc);

/// Reads and validates a config file. Parse errors report line and column.
Config load_config(const std::string& path);

}  // namespace qtsm
