// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <complex>
#include <vector>

#include <Eigen/Dense>

namespace nflift {

inline constexpr double kSpeedOfLight = 299792458.0;  // m/s
inline constexpr double kPi = 3.14159265358979323846;

using cdouble = std::complex<double>;

/// Uniform linear array along the x axis, antenna n at (n d, 0).
struct ArrayConfig {
  int num_antennas = 0;
  double spacing = 0.0;     // m
  double wavelength = 0.0;  // m

  /// Half-wavelength array at carrier `carrier_hz`.
  static ArrayConfig half_wavelength(int num_antennas, double carrier_hz);

  double wavenumber() const { return 2.0 * kPi / wavelength; }
  double aperture() const { return (num_antennas - 1) * spacing; }
  /// sqrt(k) * aperture^{3/2}: ranges beyond this keep the Fresnel remainder small.
  double far_fresnel_range() const;

  /// z1(n) = k n d.
  double z1(int n) const { return wavenumber() * n * spacing; }
  /// z2(n, r) = k n^2 d^2 / (4 r).
  double z2(int n, double range) const;

  /// Throws Error(kDomain) unless N >= 2, d > 0, lambda > 0.
  void validate() const;
};

/// Polar position of a scatterer relative to antenna 0. Angle is measured from
/// the array axis and must lie in the open interval (0, pi).
struct SourceLocation {
  double range = 0.0;  // m
  double angle = 0.0;  // rad

  void validate() const;
};

/// |p - antenna_n| = sqrt(r^2 + (nd)^2 - 2 r nd cos(theta)).
double element_distance(const ArrayConfig& cfg, const SourceLocation& src, int n);

/// Spherical-wave response exp(-j k (r^(n) - r)); entry 0 is exactly 1.
Eigen::VectorXcd steering_exact(const ArrayConfig& cfg, const SourceLocation& src);

/// Plane-wave response exp(j k n d cos(theta)).
Eigen::VectorXcd steering_farfield(const ArrayConfig& cfg, double angle);

/// Second-order (Fresnel) response exp(j z1 cos(theta)) exp(-j z2 (1 - cos(2 theta))).
Eigen::VectorXcd steering_fresnel(const ArrayConfig& cfg, const SourceLocation& src);

/// Residual of the Fresnel expansion of r^(n) - r, in metres:
///   (r^(n) - r) - (-nd cos(theta) + (nd)^2 (1 - cos(2 theta)) / (4 r)).
/// Evaluated in a cancellation-free form so it stays accurate for r >> nd.
double fresnel_phase_error(const ArrayConfig& cfg, const SourceLocation& src, int n);

/// `grid_size` angles pi (g + 1) / (grid_size + 1), g = 0..grid_size-1, strictly inside (0, pi).
std::vector<double> uniform_angle_grid(int grid_size);

}  // namespace nflift
