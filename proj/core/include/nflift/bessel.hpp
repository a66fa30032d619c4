// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <span>
#include <vector>

namespace nflift {

/// Largest |order| accepted by the Bessel routines.
inline constexpr int kMaxBesselOrder = 10000;

/// Bessel function of the first kind J_n(x) for integer n and real x >= 0.
///
/// Uses the power series for x < 2 and Miller's backward recurrence,
/// normalised with J_0^2 + 2 sum_{k>=1} J_k^2 = 1, otherwise. Absolute error is
/// below 1e-12 for x <= 1e3 and |n| <= x + 200. Throws Error(kDomain) for
/// negative, NaN or infinite x and for |n| > kMaxBesselOrder.
double bessel_j(int order, double x);

/// J_n(x) for n = -max_order..max_order, evaluated in one recurrence pass.
/// Negative orders are filled from J_{-n} = (-1)^n J_n, so the reflection
/// identity holds exactly.
class BesselRow {
 public:
  BesselRow(int max_order, double x);

  int max_order() const noexcept { return max_order_; }
  double argument() const noexcept { return x_; }

  /// J_order(x); requires |order| <= max_order().
  double operator()(int order) const { return values_[static_cast<std::size_t>(order + max_order_)]; }

  /// Values ordered from -max_order to +max_order.
  std::span<const double> values() const noexcept { return values_; }

 private:
  int max_order_;
  double x_;
  std::vector<double> values_;
};

inline BesselRow bessel_j_row(int max_order, double x) { return BesselRow(max_order, x); }

}  // namespace nflift
