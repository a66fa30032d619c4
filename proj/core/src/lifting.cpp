// SPDX-License-Identifier: Apache-2.0
#include "nflift/lifting.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "nflift/bessel.hpp"
#include "nflift/error.hpp"
#include "nflift/json_io.hpp"

namespace nflift {

using nlohmann::json;

void LiftingConfig::validate() const {
  if (i1 < 0 || i2 < 0) throw Error(ErrorKind::kDomain, "truncation orders must be >= 0");
  if (i1 + 2 * i2 > kMaxBesselOrder) throw Error(ErrorKind::kDomain, "truncation orders too large");
  if (range_grid.empty()) throw Error(ErrorKind::kDomain, "range grid is empty");
  for (std::size_t i = 0; i < range_grid.size(); ++i) {
    if (!(range_grid[i] > 0.0) || !std::isfinite(range_grid[i])) {
      throw Error(ErrorKind::kDomain, "range grid entries must be positive and finite");
    }
    if (i > 0 && !(range_grid[i] > range_grid[i - 1])) {
      throw Error(ErrorKind::kDomain, "range grid must be strictly increasing");
    }
  }
}

std::vector<double> LiftingConfig::uniform_grid(double r_min, double r_max, int n_bins) {
  if (n_bins < 1) throw Error(ErrorKind::kDomain, "range grid needs at least one bin");
  if (!(r_min > 0.0) || (n_bins > 1 && !(r_max > r_min))) {
    throw Error(ErrorKind::kDomain, "range grid needs 0 < r_min < r_max");
  }
  std::vector<double> grid(static_cast<std::size_t>(n_bins));
  for (int i = 0; i < n_bins; ++i) {
    grid[static_cast<std::size_t>(i)] = n_bins == 1 ? r_min : r_min + (r_max - r_min) * i / (n_bins - 1);
  }
  return grid;
}

std::vector<double> LiftingConfig::inverse_uniform_grid(double r_min, double r_max, int n_bins) {
  // Uniform in 1/r, i.e. in the curvature term z2 ~ 1/r; returned in increasing range.
  if (!(r_min > 0.0)) throw Error(ErrorKind::kDomain, "range grid needs 0 < r_min < r_max");
  auto grid = uniform_grid(1.0 / r_max, 1.0 / r_min, n_bins);
  if (n_bins > 1 && !(r_max > r_min)) throw Error(ErrorKind::kDomain, "range grid needs 0 < r_min < r_max");
  for (auto& g : grid) g = 1.0 / g;
  std::reverse(grid.begin(), grid.end());
  if (n_bins > 1) {
    grid.front() = r_min;
    grid.back() = r_max;
  }
  return grid;
}

SelectionMatrix::SelectionMatrix(const LiftingConfig& cfg) : cols_(cfg.num_harmonics()) {
  column_of_row_.resize(static_cast<std::size_t>(cfg.num_pairs()));
  for (int q = -cfg.i2; q <= cfg.i2; ++q) {
    for (int l = -cfg.i1; l <= cfg.i1; ++l) {
      column_of_row_[static_cast<std::size_t>(cfg.pair_index(l, q))] = cfg.harmonic_column(l, q);
    }
  }
}

Eigen::MatrixXd SelectionMatrix::dense() const {
  Eigen::MatrixXd s = Eigen::MatrixXd::Zero(rows(), cols_);
  for (int p = 0; p < rows(); ++p) s(p, column_of_row(p)) = 1.0;
  return s;
}

cdouble j_power(int m) {
  switch (((m % 4) + 4) % 4) {
    case 0: return {1.0, 0.0};
    case 1: return {0.0, 1.0};
    case 2: return {-1.0, 0.0};
    default: return {0.0, -1.0};
  }
}

namespace {

// Row n of C(r) given the Bessel rows for z1(n) and z2(n, r).
void fill_coefficient_row(const LiftingConfig& lifting, const BesselRow& j1, const BesselRow& j2, double z2,
                          Eigen::Ref<Eigen::RowVectorXcd, 0, Eigen::InnerStride<>> row) {
  const cdouble phase = std::polar(1.0, -z2);
  for (int q = -lifting.i2; q <= lifting.i2; ++q) {
    for (int l = -lifting.i1; l <= lifting.i1; ++l) {
      row[lifting.pair_index(l, q)] = phase * j_power(l + q) * (j1(l) * j2(q));
    }
  }
}

void check_range(double range) {
  if (!(range > 0.0) || !std::isfinite(range)) {
    throw Error(ErrorKind::kDomain, "range must be > 0, got " + std::to_string(range));
  }
}

}  // namespace

Eigen::MatrixXcd coefficient_map(const ArrayConfig& array, const LiftingConfig& lifting, double range) {
  array.validate();
  check_range(range);
  Eigen::MatrixXcd c(array.num_antennas, lifting.num_pairs());
  for (int n = 0; n < array.num_antennas; ++n) {
    const double z2 = array.z2(n, range);
    fill_coefficient_row(lifting, BesselRow(lifting.i1, array.z1(n)), BesselRow(lifting.i2, z2), z2, c.row(n));
  }
  return c;
}

Eigen::VectorXcd vandermonde(const LiftingConfig& lifting, double angle) {
  if (!(angle > 0.0 && angle < kPi)) throw Error(ErrorKind::kDomain, "angle must lie in (0, pi)");
  const int off = lifting.max_harmonic();
  const double scale = 1.0 / std::sqrt(static_cast<double>(lifting.num_harmonics()));
  Eigen::VectorXcd v(lifting.num_harmonics());
  for (int k = -off; k <= off; ++k) v[k + off] = std::polar(scale, k * angle);
  return v;
}

Eigen::MatrixXcd LiftedAtom::matrix(const LiftingConfig& lifting) const {
  if (bin < 0 || bin >= lifting.num_bins()) throw Error(ErrorKind::kDomain, "atom bin out of range");
  Eigen::MatrixXcd a = Eigen::MatrixXcd::Zero(lifting.num_bins(), lifting.num_harmonics());
  a.row(bin) = vandermonde(lifting, angle).adjoint();
  return a;
}

BesselVandermondeOperator::BesselVandermondeOperator(ArrayConfig array, LiftingConfig lifting)
    : array_(std::move(array)), lifting_(std::move(lifting)) {
  array_.validate();
  lifting_.validate();
  const int n_r = array_.num_antennas;
  const int n_d = lifting_.num_bins();
  const int n_p = lifting_.num_pairs();
  const int n_b = lifting_.num_harmonics();
  const double sqrt_nb = std::sqrt(static_cast<double>(n_b));
  const SelectionMatrix sel(lifting_);

  std::vector<BesselRow> j1;
  j1.reserve(static_cast<std::size_t>(n_r));
  for (int n = 0; n < n_r; ++n) j1.emplace_back(lifting_.i1, array_.z1(n));

  dictionary_.resize(static_cast<Eigen::Index>(n_r) * n_p, n_d);
  phi_.assign(static_cast<std::size_t>(n_r), Eigen::MatrixXcd::Zero(n_d, n_b));
  Eigen::RowVectorXcd row(n_p);
  for (int i = 0; i < n_d; ++i) {
    const double r = lifting_.range_grid[static_cast<std::size_t>(i)];
    for (int n = 0; n < n_r; ++n) {
      const double z2 = array_.z2(n, r);
      fill_coefficient_row(lifting_, j1[static_cast<std::size_t>(n)], BesselRow(lifting_.i2, z2), z2, row);
      for (int p = 0; p < n_p; ++p) {
        dictionary_(static_cast<Eigen::Index>(p) * n_r + n, i) = row[p];
        phi_[static_cast<std::size_t>(n)](i, sel.column_of_row(p)) += sqrt_nb * row[p];
      }
    }
  }
}

BesselVandermondeOperator::BesselVandermondeOperator(ArrayConfig array, LiftingConfig lifting,
                                                     Eigen::MatrixXcd dictionary, std::vector<Eigen::MatrixXcd> phi)
    : array_(std::move(array)),
      lifting_(std::move(lifting)),
      dictionary_(std::move(dictionary)),
      phi_(std::move(phi)) {}

Eigen::VectorXcd BesselVandermondeOperator::lifted_steering(const LiftedAtom& atom) const {
  if (atom.bin < 0 || atom.bin >= num_bins()) throw Error(ErrorKind::kDomain, "atom bin out of range");
  const Eigen::VectorXcd v = vandermonde(lifting_, atom.angle);
  Eigen::VectorXcd out(num_antennas());
  for (int n = 0; n < num_antennas(); ++n) out[n] = (phi(n).row(atom.bin) * v)(0);
  return out;
}

cdouble lifted_entry(const BesselVandermondeOperator& op, const LiftedAtom& atom, int n) {
  if (n < 0 || n >= op.num_antennas()) throw Error(ErrorKind::kDomain, "antenna index out of range");
  if (atom.bin < 0 || atom.bin >= op.num_bins()) throw Error(ErrorKind::kDomain, "atom bin out of range");
  const Eigen::VectorXcd v = vandermonde(op.lifting(), atom.angle);
  return (op.phi(n).row(atom.bin) * v)(0);
}

Eigen::VectorXcd lifted_series(const ArrayConfig& array, const LiftingConfig& lifting, const SourceLocation& src) {
  src.validate();
  const Eigen::MatrixXcd c = coefficient_map(array, lifting, src.range);
  Eigen::VectorXcd v(lifting.num_pairs());
  for (int q = -lifting.i2; q <= lifting.i2; ++q) {
    for (int l = -lifting.i1; l <= lifting.i1; ++l) v[lifting.pair_index(l, q)] = std::polar(1.0, (l + 2 * q) * src.angle);
  }
  return c * v;
}

TailBound truncation_tail_bound(const ArrayConfig& array, const LiftingConfig& lifting, double range) {
  array.validate();
  check_range(range);
  TailBound out;
  out.bound.resize(static_cast<std::size_t>(array.num_antennas));
  out.cutoff_order.resize(static_cast<std::size_t>(array.num_antennas));
  for (int n = 0; n < array.num_antennas; ++n) {
    const double z1 = array.z1(n);
    const double z2 = array.z2(n, range);
    const int cutoff = static_cast<int>(std::ceil(std::max(z1, z2))) + 80;
    const BesselRow j1(cutoff, z1);
    const BesselRow j2(cutoff, z2);
    double in1 = 0.0, tail1 = 0.0, in2 = 0.0, tail2 = 0.0;
    for (int k = -cutoff; k <= cutoff; ++k) {
      (std::abs(k) <= lifting.i1 ? in1 : tail1) += std::abs(j1(k));
      (std::abs(k) <= lifting.i2 ? in2 : tail2) += std::abs(j2(k));
    }
    out.bound[static_cast<std::size_t>(n)] = tail1 * (in2 + tail2) + tail2 * (in1 + tail1);
    out.cutoff_order[static_cast<std::size_t>(n)] = cutoff;
  }
  return out;
}

std::vector<LiftingErrorRow> lifting_error_report(const ArrayConfig& array, const LiftingConfig& lifting,
                                                  const SourceLocation& src) {
  const Eigen::VectorXcd exact = steering_exact(array, src);
  const Eigen::VectorXcd fresnel = steering_fresnel(array, src);
  const Eigen::VectorXcd lifted = lifted_series(array, lifting, src);
  const TailBound bound = truncation_tail_bound(array, lifting, src.range);
  std::vector<LiftingErrorRow> rows(static_cast<std::size_t>(array.num_antennas));
  for (int n = 0; n < array.num_antennas; ++n) {
    auto& r = rows[static_cast<std::size_t>(n)];
    r.antenna = n;
    r.exact = exact[n];
    r.fresnel = fresnel[n];
    r.lifted = lifted[n];
    r.abs_delta_fresnel = std::abs(exact[n] - fresnel[n]);
    r.abs_delta_tail = std::abs(fresnel[n] - lifted[n]);
    r.tail_bound = bound.bound[static_cast<std::size_t>(n)];
  }
  return rows;
}

json BesselVandermondeOperator::to_json() const {
  json j;
  j["schema_version"] = kSchemaVersion;
  j["num_antennas"] = array_.num_antennas;
  j["spacing_m"] = array_.spacing;
  j["wavelength_m"] = array_.wavelength;
  j["num_bins"] = num_bins();
  j["num_harmonics"] = num_harmonics();
  j["num_pairs"] = lifting_.num_pairs();
  j["i1"] = lifting_.i1;
  j["i2"] = lifting_.i2;
  j["range_grid_m"] = lifting_.range_grid;
  j["dictionary"] = complex_matrix_to_json(dictionary_);
  json phis = json::array();
  for (const auto& p : phi_) phis.push_back(complex_matrix_to_json(p));
  j["phi"] = std::move(phis);
  return j;
}

BesselVandermondeOperator BesselVandermondeOperator::from_json(const json& j) {
  reject_unknown_keys(j,
                      {"schema_version", "num_antennas", "spacing_m", "wavelength_m", "num_bins", "num_harmonics",
                       "num_pairs", "i1", "i2", "range_grid_m", "dictionary", "phi"},
                      "operator");
  check_schema_version(j, "operator");
  ArrayConfig array{j.at("num_antennas").get<int>(), j.at("spacing_m").get<double>(),
                    j.at("wavelength_m").get<double>()};
  LiftingConfig lifting{j.at("i1").get<int>(), j.at("i2").get<int>(),
                        j.at("range_grid_m").get<std::vector<double>>()};
  array.validate();
  lifting.validate();
  if (j.at("num_bins").get<int>() != lifting.num_bins() ||
      j.at("num_harmonics").get<int>() != lifting.num_harmonics() ||
      j.at("num_pairs").get<int>() != lifting.num_pairs()) {
    throw Error(ErrorKind::kConfig, "operator: header dimensions disagree with truncation orders");
  }
  Eigen::MatrixXcd dict = complex_matrix_from_json(
      j.at("dictionary"), static_cast<Eigen::Index>(array.num_antennas) * lifting.num_pairs(), lifting.num_bins());
  const auto& phis = j.at("phi");
  if (!phis.is_array() || static_cast<int>(phis.size()) != array.num_antennas) {
    throw Error(ErrorKind::kConfig, "operator: expected one phi matrix per antenna");
  }
  std::vector<Eigen::MatrixXcd> phi;
  for (const auto& p : phis) phi.push_back(complex_matrix_from_json(p, lifting.num_bins(), lifting.num_harmonics()));
  return BesselVandermondeOperator(std::move(array), std::move(lifting), std::move(dict), std::move(phi));
}

}  // namespace nflift
