// SPDX-License-Identifier: Apache-2.0
#include "nflift/localize.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <ostream>
#include <string>

#include <nlohmann/json.hpp>

#include "nflift/error.hpp"
#include "nflift/json_io.hpp"

namespace nflift {

using nlohmann::json;

namespace {
constexpr double kPeakCap = 1.0 + 1e-3;
constexpr double kAngleEdge = 1e-12;
}  // namespace

DualPolynomialBank::DualPolynomialBank(Eigen::MatrixXcd coefficients)
    : z_(std::move(coefficients)),
      off_(static_cast<int>(z_.cols() - 1) / 2),
      scale_(1.0 / std::sqrt(static_cast<double>(z_.cols()))) {
  if (z_.cols() % 2 != 1) throw Error(ErrorKind::kDomain, "dual polynomial needs an odd number of harmonics");
}

cdouble DualPolynomialBank::value(int bin, double theta) const {
  cdouble acc = 0.0;
  for (int k = -off_; k <= off_; ++k) acc += z_(bin, k + off_) * std::polar(1.0, k * theta);
  return acc * scale_;
}

DualPolynomialBank::Derivatives DualPolynomialBank::derivatives(int bin, double theta) const {
  Derivatives d{0.0, 0.0, 0.0};
  for (int k = -off_; k <= off_; ++k) {
    const cdouble term = z_(bin, k + off_) * std::polar(1.0, k * theta);
    d.p += term;
    d.dp += cdouble(0.0, k) * term;
    d.d2p += -static_cast<double>(k) * k * term;
  }
  d.p *= scale_;
  d.dp *= scale_;
  d.d2p *= scale_;
  return d;
}

json SupportEstimate::to_json() const {
  json entries_json = json::array();
  for (const auto& e : entries) {
    entries_json.push_back({{"bin", e.bin},
                            {"angle_rad", e.angle},
                            {"modulus", e.modulus},
                            {"coarse_angle_rad", e.coarse_angle},
                            {"used_fallback", e.used_fallback}});
  }
  return json{{"schema_version", kSchemaVersion},
              {"model_order", model_order()},
              {"entries", std::move(entries_json)},
              {"warnings", warnings}};
}

DualPolynomialBank make_bank(const DualSolution& sol, const SensingStack& stack) {
  return DualPolynomialBank(stack.adjoint(sol.q));
}

BankSamples evaluate_bank(const DualPolynomialBank& bank, int grid_size) {
  BankSamples s;
  s.grid = uniform_angle_grid(grid_size);
  s.modulus.resize(bank.num_bins(), grid_size);
  const int nb = bank.num_harmonics();
  const int off = (nb - 1) / 2;
  const double scale = 1.0 / std::sqrt(static_cast<double>(nb));
  Eigen::VectorXcd v(nb);
  for (int g = 0; g < grid_size; ++g) {
    const double theta = s.grid[static_cast<std::size_t>(g)];
    for (int k = -off; k <= off; ++k) v[k + off] = std::polar(scale, k * theta);
    s.modulus.col(g) = (bank.coefficients() * v).cwiseAbs();
  }
  return s;
}

double merge_radius(int num_harmonics) { return (2.0 * kPi / num_harmonics) / 8.0; }

namespace {

// Greedy merge in descending modulus: keep an entry unless a kept entry of the
// same bin lies within `radius`.
std::vector<SupportEntry> merge_entries(std::vector<SupportEntry> in, double radius) {
  std::stable_sort(in.begin(), in.end(),
                   [](const SupportEntry& a, const SupportEntry& b) { return a.modulus > b.modulus; });
  std::vector<SupportEntry> kept;
  for (const auto& e : in) {
    const bool close = std::any_of(kept.begin(), kept.end(), [&](const SupportEntry& k) {
      return k.bin == e.bin && std::abs(k.angle - e.angle) <= radius;
    });
    if (!close) kept.push_back(e);
  }
  std::sort(kept.begin(), kept.end(), [](const SupportEntry& a, const SupportEntry& b) {
    return a.bin != b.bin ? a.bin < b.bin : a.angle < b.angle;
  });
  return kept;
}

}  // namespace

SupportEstimate detect_peaks(const DualPolynomialBank& bank, const BankSamples& samples, double threshold) {
  if (!(threshold > 0.0 && threshold <= 1.0)) throw Error(ErrorKind::kDomain, "peak threshold must lie in (0, 1]");
  if (samples.modulus.rows() != bank.num_bins() ||
      samples.modulus.cols() != static_cast<Eigen::Index>(samples.grid.size())) {
    throw Error(ErrorKind::kDomain, "detect_peaks: samples do not match the polynomial bank");
  }
  SupportEstimate est;
  const Eigen::Index g_count = samples.modulus.cols();
  std::vector<SupportEntry> found;
  for (int i = 0; i < bank.num_bins(); ++i) {
    const auto row = samples.modulus.row(i);
    for (Eigen::Index g = 0; g < g_count; ++g) {
      const double m = row[g];
      if (m < threshold) continue;
      const bool left = (g == 0) || m > row[g - 1];
      const bool right = (g == g_count - 1) || m > row[g + 1];
      if (g_count > 1 && left && right) {
        const double theta = samples.grid[static_cast<std::size_t>(g)];
        found.push_back({i, theta, m, theta, false});
      }
    }
  }
  est.entries = merge_entries(std::move(found), merge_radius(bank.num_harmonics()));
  for (const auto& e : est.entries) {
    if (e.modulus > kPeakCap) {
      est.warnings.push_back("peak modulus " + std::to_string(e.modulus) + " in bin " + std::to_string(e.bin) +
                             " exceeds 1 + 1e-3; the dual solution is likely infeasible");
    }
  }
  return est;
}

RefinedPeak refine_peak(const DualPolynomialBank& bank, int bin, double theta_coarse, double half_width) {
  if (bin < 0 || bin >= bank.num_bins()) throw Error(ErrorKind::kDomain, "refine_peak: bin out of range");
  auto slope = [&](double th) {
    const auto d = bank.derivatives(bin, th);
    return 2.0 * (std::conj(d.p) * d.dp).real();
  };
  auto power = [&](double th) { return std::norm(bank.value(bin, th)); };

  const double start_power = power(theta_coarse);
  RefinedPeak out{theta_coarse, std::sqrt(start_power), false};
  const double f0 = slope(theta_coarse);
  if (f0 == 0.0) return out;

  double lo = std::max(theta_coarse - half_width, kAngleEdge);
  double hi = std::min(theta_coarse + half_width, kPi - kAngleEdge);
  double x = theta_coarse;

  if (slope(lo) >= 0.0 && slope(hi) <= 0.0) {
    if (f0 > 0.0) lo = x;
    else hi = x;
    for (int iter = 0; iter < 100 && hi - lo > 1e-14; ++iter) {
      const auto d = bank.derivatives(bin, x);
      const double f = 2.0 * (std::conj(d.p) * d.dp).real();
      const double fp = 2.0 * (std::norm(d.dp) + (std::conj(d.p) * d.d2p).real());
      if (f > 0.0) lo = std::max(lo, x);
      else if (f < 0.0) hi = std::min(hi, x);
      else break;
      double next = (fp < 0.0) ? x - f / fp : 0.5 * (lo + hi);
      if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
      const double step = std::abs(next - x);
      x = next;
      if (step < 1e-15) break;
    }
  } else {
    // No sign change across the bracket: ternary search on |p|^2.
    out.used_fallback = true;
    for (int iter = 0; iter < 200 && hi - lo > 1e-13; ++iter) {
      const double m1 = lo + (hi - lo) / 3.0;
      const double m2 = hi - (hi - lo) / 3.0;
      if (power(m1) < power(m2)) lo = m1;
      else hi = m2;
    }
    x = 0.5 * (lo + hi);
  }

  const double refined_power = power(x);
  if (refined_power >= start_power) {
    out.angle = x;
    out.modulus = std::sqrt(refined_power);
  }
  return out;
}

SupportEstimate localize(const DualSolution& sol, const SensingStack& stack, const LocalizeOptions& options,
                         BankSamples* samples_out) {
  const DualPolynomialBank bank = make_bank(sol, stack);
  BankSamples samples = evaluate_bank(bank, options.grid_size);
  SupportEstimate est = detect_peaks(bank, samples, options.threshold);
  if (!sol.converged) est.warnings.push_back("dual solver did not converge; support may be unreliable");
  const double step = kPi / (options.grid_size + 1.0);
  for (auto& e : est.entries) {
    const RefinedPeak r = refine_peak(bank, e.bin, e.coarse_angle, step);
    e.angle = r.angle;
    e.modulus = r.modulus;
    e.used_fallback = r.used_fallback;
  }
  est.entries = merge_entries(std::move(est.entries), merge_radius(bank.num_harmonics()));
  if (samples_out) *samples_out = std::move(samples);
  return est;
}

void write_bank_csv(std::ostream& out, const BankSamples& samples) {
  out << "bin,theta_rad,modulus\n";
  out << std::setprecision(17);
  for (Eigen::Index i = 0; i < samples.modulus.rows(); ++i) {
    for (std::size_t g = 0; g < samples.grid.size(); ++g) {
      out << i << ',' << samples.grid[g] << ',' << samples.modulus(i, static_cast<Eigen::Index>(g)) << '\n';
    }
  }
}

}  // namespace nflift
