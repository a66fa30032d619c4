// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <string>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

namespace nflift {

/// Version stamped into every JSON document this library writes.
inline constexpr int kSchemaVersion = 1;

// Complex arrays are stored row-major as interleaved [re, im, re, im, ...].
nlohmann::json complex_vector_to_json(const Eigen::VectorXcd& v);
Eigen::VectorXcd complex_vector_from_json(const nlohmann::json& j);
nlohmann::json complex_matrix_to_json(const Eigen::MatrixXcd& m);
Eigen::MatrixXcd complex_matrix_from_json(const nlohmann::json& j, Eigen::Index rows, Eigen::Index cols);

/// Throws Error(kConfig) if `j` has a key outside `allowed`.
void reject_unknown_keys(const nlohmann::json& j, std::initializer_list<const char*> allowed, const std::string& where);

/// Throws Error(kConfig) if the document's schema_version is missing or unsupported.
void check_schema_version(const nlohmann::json& j, const std::string& where);

nlohmann::json read_json_file(const std::filesystem::path& path);
void write_json_file(const std::filesystem::path& path, const nlohmann::json& j);

}  // namespace nflift
