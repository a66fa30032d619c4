// SPDX-License-Identifier: Apache-2.0
#include "nflift/gains.hpp"

#include <cmath>
#include <limits>
#include <string>

#include <Eigen/QR>
#include <Eigen/SVD>
#include <nlohmann/json.hpp>

#include "nflift/error.hpp"
#include "nflift/json_io.hpp"

namespace nflift {

using nlohmann::json;

namespace {
constexpr double kMaxCondition = 1e10;
}

Eigen::MatrixXcd build_gain_matrix(const SensingStack& stack, const SupportEstimate& support,
                                   const LiftingConfig& lifting) {
  if (support.entries.empty()) throw Error(ErrorKind::kDomain, "build_gain_matrix: empty support");
  Eigen::MatrixXcd g(stack.num_measurements(), support.model_order());
  for (int l = 0; l < support.model_order(); ++l) {
    const auto& e = support.entries[static_cast<std::size_t>(l)];
    g.col(l) = stack.forward(LiftedAtom{e.bin, e.angle}.matrix(lifting));
  }
  return g;
}

GainEstimate solve_gains(const Eigen::MatrixXcd& g, const Eigen::VectorXcd& y) {
  if (g.cols() == 0) throw Error(ErrorKind::kDomain, "solve_gains: empty support");
  if (g.rows() != y.size()) throw Error(ErrorKind::kDomain, "solve_gains: G and y' disagree on M");
  if (g.cols() > g.rows()) {
    throw Error(ErrorKind::kDomain, "solve_gains: more paths (" + std::to_string(g.cols()) + ") than measurements (" +
                                        std::to_string(g.rows()) + ")");
  }
  GainEstimate out;
  const Eigen::JacobiSVD<Eigen::MatrixXcd> svd(g);
  const auto& sv = svd.singularValues();
  const double smin = sv[sv.size() - 1];
  out.condition = smin > 0.0 ? std::pow(sv[0] / smin, 2) : std::numeric_limits<double>::infinity();
  if (!(out.condition <= kMaxCondition)) {
    Eigen::Index worst_a = 0, worst_b = std::min<Eigen::Index>(1, g.cols() - 1);
    double worst = -1.0;
    for (Eigen::Index a = 0; a < g.cols(); ++a) {
      for (Eigen::Index b = a + 1; b < g.cols(); ++b) {
        const double denom = g.col(a).norm() * g.col(b).norm();
        const double c = denom > 0.0 ? std::abs(g.col(a).dot(g.col(b))) / denom : 1.0;
        if (c > worst) {
          worst = c;
          worst_a = a;
          worst_b = b;
        }
      }
    }
    throw Error(ErrorKind::kNumerical, "solve_gains: G^H G is rank deficient (condition " +
                                           std::to_string(out.condition) + "); support entries " +
                                           std::to_string(worst_a) + " and " + std::to_string(worst_b) +
                                           " are nearly collinear");
  }
  const Eigen::HouseholderQR<Eigen::MatrixXcd> qr(g);
  out.gains = qr.solve(y);
  out.residual_norm = (y - g * out.gains).norm();
  return out;
}

json gains_to_json(const SupportEstimate& support, const GainEstimate& gains, const LiftingConfig& lifting) {
  json paths = json::array();
  for (int l = 0; l < support.model_order(); ++l) {
    const auto& e = support.entries[static_cast<std::size_t>(l)];
    const cdouble c = gains.gains[l];
    paths.push_back({{"bin", e.bin},
                     {"range_m", lifting.range_grid[static_cast<std::size_t>(e.bin)]},
                     {"angle_rad", e.angle},
                     {"gain", {c.real(), c.imag()}},
                     {"gain_abs", std::abs(c)}});
  }
  return json{{"schema_version", kSchemaVersion},
              {"paths", std::move(paths)},
              {"residual_norm", gains.residual_norm},
              {"condition", gains.condition}};
}

}  // namespace nflift
