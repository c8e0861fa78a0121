#include "qtsm/config.hpp"

#include <fstream>
#include <sstream>

namespace qtsm {

namespace {

using nlohmann::json;

std::string join_issues(const std::vector<std::string>& issues) {
  std::string out = "invalid configuration";
  for (const auto& i : issues) out += "\n  " + i;
  return out;
}

/// Collects problems instead of stopping at the first one.
class Reader {
 public:
  explicit Reader(std::vector<std::string>& issues) : issues_(issues) {}

  void fail(const std::string& path, const std::string& what) { issues_.push_back(path + ": " + what); }

  std::optional<double> number(const json& j, const std::string& path) {
    if (!j.is_number()) {
      fail(path, "expected a number");
      return std::nullopt;
    }
    return j.get<double>();
  }

  /// Nested rows [[..], ..] or a flat row-major list of rows * cols numbers.
  Matrix<double> matrix(const json& j, const std::string& path, Eigen::Index rows, Eigen::Index cols) {
    Matrix<double> m = Matrix<double>::Zero(rows, cols);
    if (!j.is_array()) {
      fail(path, "expected an array");
      return m;
    }
    const bool nested = !j.empty() && j[0].is_array();
    if (nested) {
      if (static_cast<Eigen::Index>(j.size()) != rows) {
        fail(path, "expected " + std::to_string(rows) + " rows, got " + std::to_string(j.size()));
        return m;
      }
      for (Eigen::Index r = 0; r < rows; ++r) {
        const auto& row = j[r];
        const std::string rp = path + "/" + std::to_string(r);
        if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols) {
          fail(rp, "expected a row of " + std::to_string(cols) + " numbers");
          continue;
        }
        for (Eigen::Index c = 0; c < cols; ++c) {
          if (auto v = number(row[c], rp + "/" + std::to_string(c))) m(r, c) = *v;
        }
      }
      return m;
    }
    if (static_cast<Eigen::Index>(j.size()) != rows * cols) {
      fail(path, "expected " + std::to_string(rows) + "x" + std::to_string(cols) + " entries (nested or flat row-major), got " +
                     std::to_string(j.size()));
      return m;
    }
    for (Eigen::Index r = 0; r < rows; ++r)
      for (Eigen::Index c = 0; c < cols; ++c)
        if (auto v = number(j[r * cols + c], path + "/" + std::to_string(r * cols + c))) m(r, c) = *v;
    return m;
  }

  Vector<double> vector(const json& j, const std::string& path, Eigen::Index n) {
    return matrix(j, path, n, 1).col(0);
  }

  const json* member(const json& obj, const std::string& parent, const char* key, bool required) {
    if (obj.contains(key)) return &obj.at(key);
    if (required) fail(parent + "/" + key, "required field missing");
    return nullptr;
  }

 private:
  std::vector<std::string>& issues_;
};

std::string path_for_check(const std::string& name) {
  if (name == "model.finite") return "";
  if (name.rfind("rate.", 0) == 0) return name == "rate.Gamma_psd" ? "/rate/Gamma" : "/rate";
  if (name.rfind("payoff.", 0) == 0) return name == "payoff.aT_nsd" ? "/payoff/aT" : "/payoff";
  return "";
}

}  // namespace

ConfigError::ConfigError(std::vector<std::string> issues) : Error(join_issues(issues)), issues_(std::move(issues)) {}

TimeGrid<double> Config::grid(double maturity) const {
  if (numeric.steps) return TimeGrid<double>(maturity, *numeric.steps);
  return default_grid(maturity, numeric.grid_step_max);
}

Config parse_config(const json& doc) {
  std::vector<std::string> issues;
  Reader rd(issues);
  if (!doc.is_object()) throw ConfigError({"/: expected a JSON object"});

  Config cfg;
  Eigen::Index n = 0;
  if (const json* jn = rd.member(doc, "", "n", true)) {
    if (!jn->is_number_integer() || jn->get<long long>() < 1) {
      rd.fail("/n", "expected an integer >= 1");
    } else {
      n = jn->get<long long>();
    }
  }
  if (n < 1) throw ConfigError(issues);

  auto mat = [&](const json& obj, const std::string& parent, const char* key, Eigen::Index rows, Eigen::Index cols) {
    const json* j = rd.member(obj, parent, key, true);
    return j ? rd.matrix(*j, parent + "/" + key, rows, cols) : Matrix<double>::Zero(rows, cols).eval();
  };
  cfg.model.A = mat(doc, "", "A", n, n);
  cfg.model.B = mat(doc, "", "B", n, 1).col(0);
  cfg.model.sigma = mat(doc, "", "sigma", n, n);
  cfg.model.x0 = mat(doc, "", "x0", n, 1).col(0);

  if (const json* jr = rd.member(doc, "", "rate", true)) {
    if (!jr->is_object()) {
      rd.fail("/rate", "expected an object");
    } else {
      cfg.rate.Gamma = mat(*jr, "/rate", "Gamma", n, n);
      cfg.rate.R = mat(*jr, "/rate", "R", 1, n).row(0);
      if (const json* jk = rd.member(*jr, "/rate", "k", true)) {
        if (auto k = rd.number(*jk, "/rate/k")) cfg.rate.k = *k;
      }
      if (const json* js = rd.member(*jr, "/rate", "strict", false)) {
        if (js->is_boolean()) {
          cfg.rate.strict = js->get<bool>();
        } else {
          rd.fail("/rate/strict", "expected true or false");
        }
      }
    }
  }

  if (const json* jp = rd.member(doc, "", "payoff", false); jp && !jp->is_null()) {
    if (!jp->is_object()) {
      rd.fail("/payoff", "expected an object");
    } else {
      QuadraticPayoff<double> pay;
      pay.aT = mat(*jp, "/payoff", "aT", n, n);
      pay.bT = mat(*jp, "/payoff", "bT", 1, n).row(0);
      if (const json* jc = rd.member(*jp, "/payoff", "cT", true)) {
        if (auto c = rd.number(*jc, "/payoff/cT")) pay.cT = *c;
      }
      cfg.payoff = pay;
    }
  }

  if (const json* jnum = rd.member(doc, "", "numeric", false)) {
    if (!jnum->is_object()) {
      rd.fail("/numeric", "expected an object");
    } else {
      if (const json* j = rd.member(*jnum, "/numeric", "grid_step_max", false)) {
        auto v = rd.number(*j, "/numeric/grid_step_max");
        if (v && !(*v > 0)) rd.fail("/numeric/grid_step_max", "must be positive");
        if (v && *v > 0) cfg.numeric.grid_step_max = *v;
      }
      if (const json* j = rd.member(*jnum, "/numeric", "mc_paths", false)) {
        if (!j->is_number_integer() || j->get<long long>() < 2) {
          rd.fail("/numeric/mc_paths", "expected an integer >= 2");
        } else {
          cfg.numeric.mc_paths = j->get<std::size_t>();
        }
      }
      if (const json* j = rd.member(*jnum, "/numeric", "mc_seed", false)) {
        if (!j->is_number_unsigned()) {
          rd.fail("/numeric/mc_seed", "expected a non-negative integer");
        } else {
          cfg.numeric.mc_seed = j->get<std::uint64_t>();
        }
      }
      if (const json* j = rd.member(*jnum, "/numeric", "steps", false)) {
        if (!j->is_number_integer() || j->get<long long>() < 1 || j->get<long long>() > 100000000) {
          rd.fail("/numeric/steps", "expected an integer in [1, 1e8]");
        } else {
          int steps = j->get<int>();
          if (steps % 2 != 0) {
            cfg.warnings.push_back("/numeric/steps: odd step count " + std::to_string(steps) + " raised to " +
                                   std::to_string(steps + 1));
            ++steps;
          }
          cfg.numeric.steps = steps;
        }
      }
    }
  }

  if (!issues.empty()) throw ConfigError(issues);

  const auto report = validate_model(cfg.model, cfg.rate, cfg.payoff);
  for (const auto& f : report.failures()) {
    const std::string path = path_for_check(f.name);
    issues.push_back((path.empty() ? "/" : path) + ": " + f.name + " failed" + (f.detail.empty() ? "" : " (" + f.detail + ")"));
  }
  if (!issues.empty()) throw ConfigError(issues);
  return cfg;
}

Config load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError({path + ": cannot open file"});
  std::ostringstream buf;
  buf << in.rdbuf();
  const std::string text = buf.str();
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    // Convert the byte offset to a 1-based line and column.
    std::size_t line = 1;
    std::size_t col = 1;
    const std::size_t stop = std::min<std::size_t>(e.byte > 0 ? e.byte - 1 : 0, text.size());
    for (std::size_t i = 0; i < stop; ++i) {
      if (text[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    throw ConfigError({path + ":" + std::to_string(line) + ":" + std::to_string(col) + ": JSON parse error"});
  }
  return parse_config(doc);
}

}  // namespace qtsm
