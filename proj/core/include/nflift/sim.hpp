// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json_fwd.hpp>

#include "nflift/gains.hpp"
#include "nflift/localize.hpp"
#include "nflift/sdp.hpp"

namespace nflift {

enum class GenerationMode { kLifted, kSpherical };

const char* to_string(GenerationMode mode);
GenerationMode generation_mode_from_string(const std::string& s);

/// One propagation path. `bin` indexes the range grid; in spherical mode a
/// path may instead carry an off-grid range (bin = -1).
struct PathSpec {
  int bin = -1;
  double range = 0.0;  // m
  double angle = 0.0;  // rad, in (0, pi)
  cdouble gain = 0.0;
};

struct Scenario {
  ArrayConfig array;
  LiftingConfig lifting;
  std::vector<PathSpec> paths;
  GenerationMode mode = GenerationMode::kLifted;
  std::uint64_t seed = 0;

  /// Throws Error(kConfig) for L > min(N_d, N_b), off-grid paths in lifted mode,
  /// bins out of range, or angles outside (0, pi).
  void validate() const;
  nlohmann::json paths_to_json() const;
};

struct PathDrawOptions {
  int num_paths = 0;
  /// Minimum wrap-around angle gap between paths in the same bin; <0 means 4 (2 pi / N_b).
  double min_separation = -1.0;
  /// Minimum angle gap between paths in different bins.
  double cross_bin_separation = 0.0;
  /// Angles are drawn from (margin, pi - margin).
  double angle_margin = 0.05;
  /// Draw distinct bins while L <= N_d.
  bool distinct_bins = true;
  /// Snap angles to a uniform grid of this many points in (0, pi); 0 keeps them continuous.
  int angle_grid = 0;
  int max_attempts = 10000;
};

/// Random paths on the range grid: gains m e^{j phi}, m ~ U[0.5, 1.5], phi ~ U[0, 2 pi).
/// Returns warnings when the separation policy could not be met.
std::vector<PathSpec> draw_paths(const LiftingConfig& lifting, const PathDrawOptions& opts, std::uint64_t seed,
                                 std::vector<std::string>* warnings = nullptr);

/// Wrap-around distance on the circle, in [0, pi].
double angle_distance(double a, double b);

struct MeasurementParams {
  int num_rf = 4;
  int num_slots = 6;
  double sigma = 0.0;
  double delta = 1e-2;
  std::uint64_t combiner_seed = 1;
  std::uint64_t noise_seed = 2;

  int num_measurements() const { return num_rf * num_slots; }
};

/// Operator, combiners and sensing stack for one (array, lifting, combiner) setup.
struct Workspace {
  BesselVandermondeOperator op;
  CombinerEnsemble combiners;
  SensingStack stack;
};

Workspace make_workspace(const ArrayConfig& array, const LiftingConfig& lifting, const MeasurementParams& params);

struct GeneratedData {
  Eigen::MatrixXcd x_true;  // lifted matrix (lifted mode; zero otherwise)
  Eigen::VectorXcd h_true;  // channel the pilots were taken from
  MeasurementSet measurement;
  std::vector<std::string> warnings;
};

/// Lifted mode: X = sum conj(c_l) A_l, so that y' = forward(X) = sum c_l forward(A_l).
/// Spherical mode: h = sum c_l steering_exact(r_l, theta_l) and y' = B' h + w'.
GeneratedData generate(const Workspace& ws, const Scenario& scn, const MeasurementParams& params);

/// X = sum conj(c_l) A_l for on-grid paths.
Eigen::MatrixXcd lifted_matrix(const LiftingConfig& lifting, const std::vector<PathSpec>& paths);

struct EstimateOptions {
  SolverOptions solver;
  LocalizeOptions localize;
  int margin_grid = 16384;
};

struct EstimateResult {
  SdpProblem problem;
  DualSolution solution;
  FeasibilityReport feasibility;
  double margin = 0.0;
  BankSamples samples;
  SupportEstimate support;
  GainEstimate gains;
  double seconds_solve = 0.0;
  double seconds_localize = 0.0;
};

/// assemble -> solve -> localize -> gains on stored measurements. Errors carry the stage label.
EstimateResult estimate(const Workspace& ws, const MeasurementSet& meas, const EstimateOptions& options,
                        const DualSdpSolver& solver = AdmmDualSolver{});

struct PathMatch {
  int truth = 0;
  int estimate = -1;  // -1 when missed
  double angle_error = 0.0;  // rad, wrap-aware
  bool bin_hit = false;
  double gain_rel_error = 0.0;
};

struct RecoveryMetrics {
  std::vector<PathMatch> matches;  // one per true path
  int num_true = 0;
  int num_estimated = 0;
  int misses = 0;
  int false_alarms = 0;
  double max_angle_error = 0.0;
  double max_gain_rel_error = 0.0;
  bool all_bins_hit = true;
  double true_atomic_sum = 0.0;       // sum |c_l|
  double estimated_atomic_sum = 0.0;  // sum |c_hat_l|
};

/// Minimum-cost assignment (Hungarian). cost is rows x cols; returns, for each
/// row, the assigned column or -1 (when rows > cols).
std::vector<int> assign_min_cost(const Eigen::MatrixXd& cost);

/// Angle error plus a fixed penalty for a bin mismatch, assignment-matched.
RecoveryMetrics metrics(const std::vector<PathSpec>& truth, const SupportEstimate& support, const GainEstimate& gains);

struct RecoveryReport {
  RecoveryMetrics metrics;
  EstimateResult estimate;
  GeneratedData data;
  std::vector<PathSpec> truth;
  double seconds_total = 0.0;

  nlohmann::json to_json() const;
};

RecoveryReport run_pipeline(const Scenario& scn, const MeasurementParams& params, const EstimateOptions& options);

}  // namespace nflift
