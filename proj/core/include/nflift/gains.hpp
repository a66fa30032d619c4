// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>
#include <nlohmann/json_fwd.hpp>

#include "nflift/localize.hpp"

namespace nflift {

struct GainEstimate {
  Eigen::VectorXcd gains;
  double residual_norm = 0.0;  // ||y' - G c||_2
  double condition = 1.0;      // cond(G^H G) = (sigma_max / sigma_min)^2
};

/// G[m, l] = <A(r_l, theta_l), Psi_m>, i.e. column l = forward(A_l).
Eigen::MatrixXcd build_gain_matrix(const SensingStack& stack, const SupportEstimate& support,
                                   const LiftingConfig& lifting);

/// Least squares min_c ||y' - G c|| by Householder QR. Throws Error(kNumerical)
/// naming the most collinear column pair when cond(G^H G) > 1e10.
GainEstimate solve_gains(const Eigen::MatrixXcd& g, const Eigen::VectorXcd& y);

nlohmann::json gains_to_json(const SupportEstimate& support, const GainEstimate& gains, const LiftingConfig& lifting);

}  // namespace nflift
