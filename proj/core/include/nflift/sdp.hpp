// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <memory>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json_fwd.hpp>

#include "nflift/measurement.hpp"

namespace nflift {

/// Dual of the lifted atomic-norm program in SDP form:
///
///   max_q  Re<y', q> - eta ||q||_2
///   s.t.   [[Q_i, u_i(q)], [u_i(q)^H, 1]] >= 0,   i = 1..N_d
///          <Theta_n, Q_i> = 1_{n=0},               n = -N_b+1..N_b-1
///
/// with u_i(q) = conj(Slice_i) q / sqrt(N_b). For this u_i the range-indexed
/// polynomial p_i(theta) = e_i^T adjoint(q) v(theta) satisfies
/// |p_i(theta)| = |u_i^H [e^{jk theta}]_k|, so the block constraints certify
/// sup_theta |p_i| <= 1 for every bin.
struct SdpProblem {
  Eigen::VectorXcd y;                  // whitened measurements, length M
  double eta = 0.0;                    // noise-ball radius
  std::vector<Eigen::MatrixXcd> slices;  // N_d slices, each N_b x M
  int num_bins = 0;
  int num_harmonics = 0;

  int num_measurements() const { return static_cast<int>(y.size()); }
  int num_blocks() const { return num_bins; }
  int block_size() const { return num_harmonics + 1; }
  int num_equalities() const { return num_bins * (2 * num_harmonics - 1); }

  /// u_i(q) as defined above.
  Eigen::VectorXcd block_vector(int bin, const Eigen::VectorXcd& q) const;
};

SdpProblem assemble(const SensingStack& stack, const MeasurementSet& meas);

struct SolverOptions {
  double tol_primal = 1e-7;
  double tol_dual = 1e-7;
  int max_iter = 50000;
  double step = 1.0;          // initial penalty rho
  int balance_every = 100;    // residual-balancing period
  double balance_ratio = 10.0;
  int log_every = 100;        // convergence-trace period (0 disables)
  double relaxation = 1.0;    // over-relaxation factor in (0, 2)
  int anderson_memory = 10;   // Anderson acceleration depth (0 disables)
  /// Relative eigenvalue floor of sum_i W_i^H W_i; with eta = 0, q directions
  /// below it are dropped, otherwise it regularises the change of variables.
  double range_tol = 1e-12;

  nlohmann::json to_json() const;
  static SolverOptions from_json(const nlohmann::json& j);
};

struct TraceEntry {
  int iteration = 0;
  double objective = 0.0;
  double primal_residual = 0.0;
  double dual_residual = 0.0;
  double rho = 0.0;
};

struct DualSolution {
  Eigen::VectorXcd q;
  std::vector<Eigen::MatrixXcd> blocks;  // Q_i, N_b x N_b Hermitian
  double objective = 0.0;
  double primal_residual = 0.0;
  double dual_residual = 0.0;
  int iterations = 0;
  bool converged = false;
  /// Eigenvalue shift used to make the returned iterate exactly feasible.
  double restoration_shift = 0.0;
  std::vector<TraceEntry> trace;

  nlohmann::json trace_to_json() const;
};

/// Pluggable backend; the native ADMM solver is the default.
class DualSdpSolver {
 public:
  virtual ~DualSdpSolver() = default;
  virtual std::string name() const = 0;
  virtual DualSolution solve(const SdpProblem& problem, const SolverOptions& options) const = 0;
};

/// ADMM over (q, Q_i) and PSD slack blocks S_i:
///  - Q_i: Frobenius projection onto the Toeplitz-trace affine set (per-diagonal averaging),
///  - q:   one linear solve with a fixed Hermitian system (factored once),
///  - S_i: projection onto the PSD cone by eigendecomposition,
///  - the -eta ||q|| term goes through a split copy t = q with a block soft-threshold.
/// On exit the final iterate is shifted/rescaled so every block is PSD and every
/// Toeplitz equality holds to rounding.
class AdmmDualSolver final : public DualSdpSolver {
 public:
  std::string name() const override { return "admm"; }
  DualSolution solve(const SdpProblem& problem, const SolverOptions& options) const override;
};

DualSolution solve(const SdpProblem& problem, const SolverOptions& options = {});

struct FeasibilityReport {
  double min_block_eigenvalue = 0.0;  // over all constraint blocks
  double max_equality_violation = 0.0;  // over all <Theta_n, Q_i> = 1_{n=0}
};

FeasibilityReport check_feasibility(const SdpProblem& problem, const DualSolution& sol);

/// Full (N_b+1) x (N_b+1) constraint block for bin i.
Eigen::MatrixXcd constraint_block(const SdpProblem& problem, const DualSolution& sol, int bin);

/// max over a `grid_size`-point angle grid in (0, pi) of max_i |p_i(theta)|.
double dual_feasibility_margin(const DualSolution& sol, const SensingStack& stack, int grid_size);

}  // namespace nflift
