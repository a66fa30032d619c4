// SPDX-License-Identifier: Apache-2.0
#include "nflift/json_io.hpp"

#include <fstream>

#include "nflift/error.hpp"

namespace nflift {

using nlohmann::json;

json complex_vector_to_json(const Eigen::VectorXcd& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    out.push_back(v[i].real());
    out.push_back(v[i].imag());
  }
  return out;
}

Eigen::VectorXcd complex_vector_from_json(const json& j) {
  if (!j.is_array() || j.size() % 2 != 0) {
    throw Error(ErrorKind::kConfig, "complex array must hold an even number of doubles");
  }
  Eigen::VectorXcd v(static_cast<Eigen::Index>(j.size() / 2));
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    v[i] = {j.at(2 * i).get<double>(), j.at(2 * i + 1).get<double>()};
  }
  return v;
}

json complex_matrix_to_json(const Eigen::MatrixXcd& m) {
  json out = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      out.push_back(m(r, c).real());
      out.push_back(m(r, c).imag());
    }
  }
  return out;
}

Eigen::MatrixXcd complex_matrix_from_json(const json& j, Eigen::Index rows, Eigen::Index cols) {
  const Eigen::VectorXcd flat = complex_vector_from_json(j);
  if (flat.size() != rows * cols) {
    throw Error(ErrorKind::kConfig, "complex matrix has " + std::to_string(flat.size()) + " entries, expected " +
                                        std::to_string(rows * cols));
  }
  Eigen::MatrixXcd m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = flat[r * cols + c];
  }
  return m;
}

void reject_unknown_keys(const json& j, std::initializer_list<const char*> allowed, const std::string& where) {
  if (!j.is_object()) throw Error(ErrorKind::kConfig, where + ": expected a JSON object");
  for (const auto& [key, _] : j.items()) {
    bool known = false;
    for (const char* a : allowed) known = known || key == a;
    if (!known) throw Error(ErrorKind::kConfig, where + ": unknown field '" + key + "'");
  }
}

void check_schema_version(const json& j, const std::string& where) {
  if (!j.contains("schema_version")) throw Error(ErrorKind::kConfig, where + ": missing schema_version");
  const int v = j.at("schema_version").get<int>();
  if (v != kSchemaVersion) {
    throw Error(ErrorKind::kConfig, where + ": unsupported schema_version " + std::to_string(v));
  }
}

json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::kIo, "cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw Error(ErrorKind::kConfig, path.string() + ": " + e.what());
  }
}

void write_json_file(const std::filesystem::path& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::kIo, "cannot write " + path.string());
  out << j.dump(2) << '\n';
  if (!out) throw Error(ErrorKind::kIo, "write failed for " + path.string());
}

}  // namespace nflift
