// SPDX-License-Identifier: Apache-2.0
#include "nflift/bessel.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "nflift/error.hpp"

namespace nflift {
namespace {

constexpr double kSeriesCutoff = 2.0;
constexpr double kRescaleAbove = 1e140;  // f^2 summed over the recurrence must stay finite
constexpr double kRescaleBy = 1e-140;

void check_argument(int order, double x) {
  if (!std::isfinite(x)) throw Error(ErrorKind::kDomain, "bessel_j: argument must be finite");
  if (x < 0.0) throw Error(ErrorKind::kDomain, "bessel_j: argument must be >= 0, got " + std::to_string(x));
  if (std::abs(order) > kMaxBesselOrder) {
    throw Error(ErrorKind::kDomain,
                "bessel_j: |order| " + std::to_string(std::abs(order)) + " exceeds cap " +
                    std::to_string(kMaxBesselOrder));
  }
}

// sum_k (-1)^k (x/2)^{2k+n} / (k! (n+k)!), n >= 0, 0 < x < 2.
double power_series(int n, double x) {
  const double half = 0.5 * x;
  double term = std::exp(n * std::log(half) - std::lgamma(n + 1.0));
  if (term == 0.0) return 0.0;
  const double q = -half * half;
  double sum = term;
  for (int k = 1; k < 200; ++k) {
    term *= q / (static_cast<double>(k) * static_cast<double>(n + k));
    sum += term;
    if (std::abs(term) <= 1e-17 * std::abs(sum)) break;
  }
  return sum;
}

// Miller backward recurrence: fills out[k] = J_k(x), k = 0..n_max, for x >= 2.
void miller(int n_max, double x, std::vector<double>& out) {
  const int ceil_x = static_cast<int>(std::ceil(x));
  const int start = ceil_x + std::max(n_max, 40) + 20 + 10 * static_cast<int>(std::ceil(std::cbrt(x)));

  out.assign(static_cast<std::size_t>(n_max) + 1, 0.0);
  double f_next = 0.0;  // f_{k+1}
  double f = 1.0;       // f_k
  double sum_sq = 0.0;  // sum_{k>=1} f_k^2
  double sum_even = 0.0;  // sum_{k>=1} f_{2k}
  for (int k = start; k >= 1; --k) {
    if (k <= n_max) out[static_cast<std::size_t>(k)] = f;
    sum_sq += f * f;
    if (k % 2 == 0) sum_even += f;
    const double f_prev = (2.0 * k / x) * f - f_next;
    f_next = f;
    f = f_prev;
    if (std::abs(f) > kRescaleAbove) {
      f *= kRescaleBy;
      f_next *= kRescaleBy;
      sum_sq *= kRescaleBy * kRescaleBy;
      sum_even *= kRescaleBy;
      for (int j = k; j <= n_max; ++j) out[static_cast<std::size_t>(j)] *= kRescaleBy;
    }
  }
  out[0] = f;
  // Magnitude from the quadratic identity, sign from J_0 + 2 sum J_{2k} = 1.
  double scale = std::sqrt(f * f + 2.0 * sum_sq);
  if (f + 2.0 * sum_even < 0.0) scale = -scale;
  for (double& v : out) v /= scale;
}

}  // namespace

double bessel_j(int order, double x) {
  check_argument(order, x);
  const int n = std::abs(order);
  const double sign = (order < 0 && (n % 2 == 1)) ? -1.0 : 1.0;
  if (x == 0.0) return n == 0 ? 1.0 : 0.0;
  if (x < kSeriesCutoff) return sign * power_series(n, x);
  std::vector<double> row;
  miller(n, x, row);
  return sign * row[static_cast<std::size_t>(n)];
}

BesselRow::BesselRow(int max_order, double x) : max_order_(max_order), x_(x) {
  if (max_order < 0) throw Error(ErrorKind::kDomain, "bessel_j_row: max_order must be >= 0");
  check_argument(max_order, x);
  std::vector<double> pos;
  if (x == 0.0) {
    pos.assign(static_cast<std::size_t>(max_order) + 1, 0.0);
    pos[0] = 1.0;
  } else if (x < kSeriesCutoff) {
    pos.resize(static_cast<std::size_t>(max_order) + 1);
    for (int k = 0; k <= max_order; ++k) pos[static_cast<std::size_t>(k)] = power_series(k, x);
  } else {
    miller(max_order, x, pos);
  }
  values_.resize(2 * static_cast<std::size_t>(max_order) + 1);
  for (int k = 0; k <= max_order; ++k) {
    const double v = pos[static_cast<std::size_t>(k)];
    values_[static_cast<std::size_t>(max_order + k)] = v;
    values_[static_cast<std::size_t>(max_order - k)] = (k % 2 == 0) ? v : -v;
  }
}

}  // namespace nflift
