// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json_fwd.hpp>

#include "nflift/lifting.hpp"

namespace nflift {

/// Stacked analog combiners B (M x N_r) and their whitened form B' = L^{-1} B,
/// where L L^H = B B^H is the Cholesky factor of the noise covariance / sigma^2.
class CombinerEnsemble {
 public:
  /// Wraps an arbitrary combiner stack; rows are measurements.
  /// Throws Error(kNumerical) when B B^H is numerically rank deficient.
  explicit CombinerEnsemble(Eigen::MatrixXcd combiners, int num_rf = 0, int num_slots = 0, std::uint64_t seed = 0);

  int num_measurements() const { return static_cast<int>(b_.rows()); }
  int num_antennas() const { return static_cast<int>(b_.cols()); }
  int num_rf() const { return num_rf_; }
  int num_slots() const { return num_slots_; }
  std::uint64_t seed() const { return seed_; }

  const Eigen::MatrixXcd& combiners() const { return b_; }
  const Eigen::MatrixXcd& whitened() const { return b_white_; }
  /// Lower-triangular L with L L^H = B B^H.
  const Eigen::MatrixXcd& cholesky() const { return chol_; }
  /// Diagonal jitter that had to be added before factorisation (0 normally).
  double jitter() const { return jitter_; }

  /// L^{-1} y.
  Eigen::VectorXcd whiten(const Eigen::VectorXcd& y) const;

 private:
  Eigen::MatrixXcd b_;
  Eigen::MatrixXcd b_white_;
  Eigen::MatrixXcd chol_;
  int num_rf_;
  int num_slots_;
  std::uint64_t seed_;
  double jitter_ = 0.0;
};

/// P_T slots of N_RF x N_r constant-modulus combiners, entries e^{j phi} / sqrt(N_r)
/// with phi ~ U[0, 2 pi) from a seeded mt19937_64. Requires M = N_RF P_T <= N_r.
CombinerEnsemble draw_combiners(int num_antennas, int num_rf, int num_slots, std::uint64_t seed);

/// Lifted sensing matrices Psi_m = sum_n B'[m, n] Phi_n and the linear map
/// X -> [<X, Psi_m>]_m with <X, Y> = trace(X^H Y). Immutable after construction.
class SensingStack {
 public:
  SensingStack(const Eigen::MatrixXcd& whitened_combiners, const BesselVandermondeOperator& op);

  int num_measurements() const { return static_cast<int>(psi_.size()); }
  int num_bins() const { return num_bins_; }
  int num_harmonics() const { return num_harmonics_; }

  /// N_d x N_b matrix Psi_m (zero-based m).
  const Eigen::MatrixXcd& psi(int m) const { return psi_[static_cast<std::size_t>(m)]; }
  /// N_b x M slice whose column m is (row i of Psi_m)^T.
  const Eigen::MatrixXcd& slice(int i) const { return slices_[static_cast<std::size_t>(i)]; }
  /// M x (N_d N_b); row m is Psi_m flattened row-major.
  const Eigen::MatrixXcd& flat() const { return flat_; }

  /// entry m = trace(X^H Psi_m). Conjugate-linear in X.
  Eigen::VectorXcd forward(const Eigen::MatrixXcd& x) const;

  /// sum_m conj(q_m) Psi_m, the adjoint under <u, v> = u^H v:
  /// q^H forward(X) = <X, adjoint(q)>, and hence Re<forward(X), q> = Re<X, adjoint(q)>.
  Eigen::MatrixXcd adjoint(const Eigen::VectorXcd& q) const;

 private:
  int num_bins_;
  int num_harmonics_;
  std::vector<Eigen::MatrixXcd> psi_;
  std::vector<Eigen::MatrixXcd> slices_;
  Eigen::MatrixXcd flat_;
};

inline SensingStack build_sensing(const CombinerEnsemble& ens, const BesselVandermondeOperator& op) {
  return SensingStack(ens.whitened(), op);
}

/// Noise-ball radius eta = sigma sqrt(M + 2 sqrt(M ln(1/delta))); 0 when sigma = 0.
double noise_radius(double sigma, int num_measurements, double delta = 1e-2);

struct MeasurementSet {
  Eigen::VectorXcd raw;       // y = L y'
  Eigen::VectorXcd whitened;  // y'
  double sigma = 0.0;
  double eta = 0.0;
  std::uint64_t seed = 0;

  int num_measurements() const { return static_cast<int>(whitened.size()); }

  nlohmann::json to_json() const;
  static MeasurementSet from_json(const nlohmann::json& j);
};

/// Lifted-model pilots: y' = forward(X) + w', w' ~ CN(0, sigma^2 I_M).
MeasurementSet simulate(const SensingStack& stack, const CombinerEnsemble& ens, const Eigen::MatrixXcd& x_true,
                        double sigma, std::uint64_t seed, double delta = 1e-2);

/// Physical pilots: y = B h + B w, w ~ CN(0, sigma^2 I_Nr), then y' = L^{-1} y.
MeasurementSet simulate_channel(const CombinerEnsemble& ens, const Eigen::VectorXcd& h, double sigma,
                                std::uint64_t seed, double delta = 1e-2);

/// Draws a CN(0, sigma^2 I) vector of length n.
Eigen::VectorXcd complex_gaussian(Eigen::Index n, double sigma, std::uint64_t seed);

}  // namespace nflift
