// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json_fwd.hpp>

#include "nflift/sdp.hpp"

namespace nflift {

/// Range-indexed dual polynomials p_i(theta) = e_i^T Z v(theta), Z = adjoint(q).
/// Each p_i is a trigonometric polynomial of degree I_off.
class DualPolynomialBank {
 public:
  explicit DualPolynomialBank(Eigen::MatrixXcd coefficients);

  int num_bins() const { return static_cast<int>(z_.rows()); }
  int num_harmonics() const { return static_cast<int>(z_.cols()); }
  const Eigen::MatrixXcd& coefficients() const { return z_; }

  cdouble value(int bin, double theta) const;

  struct Derivatives {
    cdouble p, dp, d2p;
  };
  Derivatives derivatives(int bin, double theta) const;

 private:
  Eigen::MatrixXcd z_;
  int off_;
  double scale_;
};

struct BankSamples {
  std::vector<double> grid;  // angles in (0, pi)
  Eigen::MatrixXd modulus;   // N_d x grid_size, |p_i(theta_g)|
};

struct SupportEntry {
  int bin = 0;
  double angle = 0.0;         // refined
  double modulus = 0.0;       // |p_bin(angle)|
  double coarse_angle = 0.0;  // grid maximum the refinement started from
  bool used_fallback = false;  // ternary search instead of Newton
};

struct SupportEstimate {
  std::vector<SupportEntry> entries;
  std::vector<std::string> warnings;

  int model_order() const { return static_cast<int>(entries.size()); }
  nlohmann::json to_json() const;
};

struct LocalizeOptions {
  int grid_size = 8192;
  double threshold = 0.99;
};

DualPolynomialBank make_bank(const DualSolution& sol, const SensingStack& stack);

/// |p_i| on a uniform `grid_size`-point grid in (0, pi), every bin.
BankSamples evaluate_bank(const DualPolynomialBank& bank, int grid_size);

/// Radius within which two maxima in one bin are merged: (2 pi / N_b) / 8.
double merge_radius(int num_harmonics);

/// Strict local maxima of |p_i| on the grid with modulus >= threshold, merged
/// per bin (larger wins) within merge_radius. Entries are not yet refined.
SupportEstimate detect_peaks(const DualPolynomialBank& bank, const BankSamples& samples, double threshold);

struct RefinedPeak {
  double angle = 0.0;
  double modulus = 0.0;
  bool used_fallback = false;
};

/// Local maximiser of |p_bin|^2 in [theta_coarse - half_width, theta_coarse + half_width]
/// (clipped to (0, pi)) by safeguarded Newton on the analytic derivative; falls
/// back to ternary search when the bracket shows no sign change.
RefinedPeak refine_peak(const DualPolynomialBank& bank, int bin, double theta_coarse, double half_width);

/// evaluate_bank + detect_peaks + refine_peak on every detection.
SupportEstimate localize(const DualSolution& sol, const SensingStack& stack, const LocalizeOptions& options,
                         BankSamples* samples_out = nullptr);

/// CSV rows "bin,theta_rad,modulus" for every bin and grid point.
void write_bank_csv(std::ostream& out, const BankSamples& samples);

}  // namespace nflift
