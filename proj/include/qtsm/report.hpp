#pragma once

// JSON and CSV serialization of results. Keys keep insertion order and numbers
// use the shortest round-trip form, so identical results give identical bytes.

#include <string>
#include <vector>

#include <json.hpp>

#include "qtsm/model.hpp"
#include "qtsm/montecarlo.hpp"
#include "qtsm/riccati.hpp"

namespace qtsm::report {

using Json = nlohmann::ordered_json;

/// Shortest decimal string that parses back to the same double.
std::string format_number(double v);

Json matrix_json(const Matrix<double>& m);
Json vector_json(const Eigen::Ref<const Eigen::VectorXd>& v);

/// {"product", "maturity", "steps", "nodes": [{"t", "R2", "R1", "R0"}, ...]}
Json coefficient_path_json(const CoefficientPath<double>& path);

/// t, R2_ij (row-major), R1_j, R0 per node.
std::string coefficient_path_csv(const CoefficientPath<double>& path);

Json estimate_json(const mc::McEstimate& e);
Json fbsde_json(const mc::FbsdeReport& r);

/// Rows of already-formatted cells joined with commas.
std::string csv(const std::vector<std::string>& header, const std::vector<std::vector<std::string>>& rows);

}  // namespace qtsm::report
