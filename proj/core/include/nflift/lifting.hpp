// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json_fwd.hpp>

#include "nflift/geometry.hpp"

namespace nflift {

/// Truncation orders and range grid of the Bessel-Vandermonde lifting.
///
/// Harmonic pairs (l, q) with |l| <= i1, |q| <= i2 are enumerated q-major:
/// pair_index(l, q) = (q + i2) (2 i1 + 1) + (l + i1), zero-based.
struct LiftingConfig {
  int i1 = 0;
  int i2 = 0;
  std::vector<double> range_grid;  // m, strictly increasing

  int num_pairs() const { return (2 * i1 + 1) * (2 * i2 + 1); }  // P
  int max_harmonic() const { return i1 + 2 * i2; }                // I_off
  int num_harmonics() const { return 2 * max_harmonic() + 1; }    // N_b
  int num_bins() const { return static_cast<int>(range_grid.size()); }

  int pair_index(int l, int q) const { return (q + i2) * (2 * i1 + 1) + (l + i1); }
  /// Zero-based harmonic column l + 2q + I_off.
  int harmonic_column(int l, int q) const { return l + 2 * q + max_harmonic(); }

  void validate() const;

  /// n_bins ranges uniformly spanning [r_min, r_max] (inclusive).
  static std::vector<double> uniform_grid(double r_min, double r_max, int n_bins);
  /// n_bins ranges uniformly spaced in 1/r over [r_min, r_max], increasing.
  static std::vector<double> inverse_uniform_grid(double r_min, double r_max, int n_bins);
};

/// Binary P x N_b harmonic selection matrix, stored as the column index of the
/// single 1 in every row.
class SelectionMatrix {
 public:
  explicit SelectionMatrix(const LiftingConfig& cfg);

  int rows() const { return static_cast<int>(column_of_row_.size()); }
  int cols() const { return cols_; }
  int column_of_row(int p) const { return column_of_row_[static_cast<std::size_t>(p)]; }
  Eigen::MatrixXd dense() const;

 private:
  int cols_;
  std::vector<int> column_of_row_;
};

inline SelectionMatrix build_selection(const LiftingConfig& cfg) { return SelectionMatrix(cfg); }

/// j^m for integer m, exact.
cdouble j_power(int m);

/// C(r) (N_r x P): entry (n, (l, q)) = e^{-j z2(n,r)} j^{l+q} J_l(z1(n)) J_q(z2(n,r)).
Eigen::MatrixXcd coefficient_map(const ArrayConfig& array, const LiftingConfig& lifting, double range);

/// Normalised Vandermonde vector, entries e^{j k theta} / sqrt(N_b), k = -I_off..I_off.
Eigen::VectorXcd vandermonde(const LiftingConfig& lifting, double angle);

/// Row-sparse rank-one atom alpha_bin v(theta)^H.
struct LiftedAtom {
  int bin = 0;  // zero-based index into the range grid
  double angle = 0.0;

  Eigen::MatrixXcd matrix(const LiftingConfig& lifting) const;
};

/// The Bessel-Vandermonde operator {Phi_n} and the dictionary D it comes from.
///
/// Phi_n = sqrt(N_b) D^T (I_P kron e_{n+1}) S, assembled by row extraction:
/// row i of Phi_n is sqrt(N_b) * (row n of C(r_i)) * S. Immutable once built.
class BesselVandermondeOperator {
 public:
  BesselVandermondeOperator(ArrayConfig array, LiftingConfig lifting);

  const ArrayConfig& array() const { return array_; }
  const LiftingConfig& lifting() const { return lifting_; }

  int num_antennas() const { return array_.num_antennas; }
  int num_bins() const { return lifting_.num_bins(); }
  int num_harmonics() const { return lifting_.num_harmonics(); }

  /// N_d x N_b matrix for antenna n.
  const Eigen::MatrixXcd& phi(int n) const { return phi_[static_cast<std::size_t>(n)]; }
  /// Column i is vec(C(r_i)) (column stacking), N_r P x N_d.
  const Eigen::MatrixXcd& dictionary() const { return dictionary_; }

  /// <A, Phi_n> for every antenna: the lifted steering vector of `atom`.
  Eigen::VectorXcd lifted_steering(const LiftedAtom& atom) const;

  nlohmann::json to_json() const;
  static BesselVandermondeOperator from_json(const nlohmann::json& j);

 private:
  BesselVandermondeOperator(ArrayConfig array, LiftingConfig lifting, Eigen::MatrixXcd dictionary,
                            std::vector<Eigen::MatrixXcd> phi);

  ArrayConfig array_;
  LiftingConfig lifting_;
  Eigen::MatrixXcd dictionary_;
  std::vector<Eigen::MatrixXcd> phi_;
};

inline BesselVandermondeOperator build_dictionary(const ArrayConfig& array, const LiftingConfig& lifting) {
  return BesselVandermondeOperator(array, lifting);
}

/// <A(r_i, theta), Phi_n> = alpha^T Phi_n v(theta), with <X, Y> = trace(X^H Y).
cdouble lifted_entry(const BesselVandermondeOperator& op, const LiftedAtom& atom, int n);

/// Truncated Jacobi-Anger sum s_n(r, theta) for every antenna at an arbitrary
/// (not necessarily on-grid) range.
Eigen::VectorXcd lifted_series(const ArrayConfig& array, const LiftingConfig& lifting, const SourceLocation& src);

struct TailBound {
  std::vector<double> bound;       // per antenna
  std::vector<int> cutoff_order;   // where the infinite sums were cut, per antenna
};

/// Per-antenna upper bound on the Bessel truncation tail
///   sum_{|l|>I1} sum_q |J_l(z1)||J_q(z2)| + sum_{|q|>I2} sum_l |J_l(z1)||J_q(z2)|,
/// with the infinite sums cut at ceil(max(z1, z2)) + 80.
TailBound truncation_tail_bound(const ArrayConfig& array, const LiftingConfig& lifting, double range);

struct LiftingErrorRow {
  int antenna = 0;
  cdouble exact;    // spherical model
  cdouble fresnel;  // second-order model
  cdouble lifted;   // truncated Jacobi-Anger sum
  double abs_delta_fresnel = 0.0;  // |exact - fresnel|
  double abs_delta_tail = 0.0;     // |fresnel - lifted|
  double tail_bound = 0.0;
  double abs_total() const { return std::abs(exact - lifted); }
};

std::vector<LiftingErrorRow> lifting_error_report(const ArrayConfig& array, const LiftingConfig& lifting,
                                                  const SourceLocation& src);

}  // namespace nflift
