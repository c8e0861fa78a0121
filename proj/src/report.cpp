#include "qtsm/report.hpp"

#include <charconv>
#include <cmath>
#include <sstream>

namespace qtsm::report {

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

Json matrix_json(const Matrix<double>& m) {
  Json rows = Json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    Json row = Json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

Json vector_json(const Eigen::Ref<const Eigen::VectorXd>& v) {
  Json out = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

Json coefficient_path_json(const CoefficientPath<double>& path) {
  Json out;
  out["product"] = to_string(path.product);
  out["maturity"] = path.grid.maturity();
  out["steps"] = path.grid.steps();
  Json nodes = Json::array();
  for (int i = 0; i <= path.grid.steps(); ++i) {
    Json node;
    node["t"] = path.grid.time(i);
    node["R2"] = matrix_json(path.R2[i]);
    node["R1"] = vector_json(path.R1[i].transpose());
    node["R0"] = path.R0[i];
    nodes.push_back(std::move(node));
  }
  out["nodes"] = std::move(nodes);
  return out;
}

std::string coefficient_path_csv(const CoefficientPath<double>& path) {
  const auto n = path.R2.empty() ? 0 : path.R2.front().rows();
  std::vector<std::string> header{"t"};
  for (Eigen::Index r = 0; r < n; ++r)
    for (Eigen::Index c = 0; c < n; ++c) header.push_back("R2_" + std::to_string(r + 1) + std::to_string(c + 1));
  for (Eigen::Index c = 0; c < n; ++c) header.push_back("R1_" + std::to_string(c + 1));
  header.push_back("R0");
  std::vector<std::vector<std::string>> rows;
  for (int i = 0; i <= path.grid.steps(); ++i) {
    std::vector<std::string> row{format_number(path.grid.time(i))};
    for (Eigen::Index r = 0; r < n; ++r)
      for (Eigen::Index c = 0; c < n; ++c) row.push_back(format_number(path.R2[i](r, c)));
    for (Eigen::Index c = 0; c < n; ++c) row.push_back(format_number(path.R1[i](c)));
    row.push_back(format_number(path.R0[i]));
    rows.push_back(std::move(row));
  }
  return csv(header, rows);
}

Json estimate_json(const mc::McEstimate& e) {
  Json out;
  out["mean"] = e.mean;
  out["stderr"] = e.std_error;
  out["n_paths"] = e.n_paths;
  return out;
}

Json fbsde_json(const mc::FbsdeReport& r) {
  Json out;
  out["mean_abs_terminal_error"] = r.mean_abs_terminal_error;
  out["max_terminal_error"] = r.max_terminal_error;
  out["mean_bsde_increment_residual"] = r.mean_bsde_increment_residual;
  out["max_bsde_increment_residual"] = r.max_bsde_increment_residual;
  out["n_paths"] = r.n_paths;
  out["steps"] = r.steps;
  return out;
}

std::string csv(const std::vector<std::string>& header, const std::vector<std::vector<std::string>>& rows) {
  std::ostringstream out;
  auto line = [&](const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) out << (i ? "," : "") << cells[i];
    out << '\n';
  };
  line(header);
  for (const auto& r : rows) line(r);
  return out.str();
}

}  // namespace qtsm::report
