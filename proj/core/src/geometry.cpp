// SPDX-License-Identifier: Apache-2.0
#include "nflift/geometry.hpp"

#include <cmath>
#include <string>

#include "nflift/error.hpp"

namespace nflift {

ArrayConfig ArrayConfig::half_wavelength(int num_antennas, double carrier_hz) {
  if (!(carrier_hz > 0.0) || !std::isfinite(carrier_hz)) {
    throw Error(ErrorKind::kDomain, "carrier frequency must be positive and finite");
  }
  ArrayConfig cfg;
  cfg.num_antennas = num_antennas;
  cfg.wavelength = kSpeedOfLight / carrier_hz;
  cfg.spacing = 0.5 * cfg.wavelength;
  cfg.validate();
  return cfg;
}

double ArrayConfig::far_fresnel_range() const {
  return std::sqrt(wavenumber()) * std::pow(aperture(), 1.5);
}

double ArrayConfig::z2(int n, double range) const {
  const double nd = n * spacing;
  return wavenumber() * nd * nd / (4.0 * range);
}

void ArrayConfig::validate() const {
  if (num_antennas < 2) throw Error(ErrorKind::kDomain, "array needs at least 2 antennas");
  if (!(spacing > 0.0) || !std::isfinite(spacing)) throw Error(ErrorKind::kDomain, "antenna spacing must be > 0");
  if (!(wavelength > 0.0) || !std::isfinite(wavelength)) throw Error(ErrorKind::kDomain, "wavelength must be > 0");
}

void SourceLocation::validate() const {
  if (!(range > 0.0) || !std::isfinite(range)) {
    throw Error(ErrorKind::kDomain, "source range must be > 0, got " + std::to_string(range));
  }
  if (!(angle > 0.0 && angle < kPi)) {
    throw Error(ErrorKind::kDomain, "source angle must lie in (0, pi), got " + std::to_string(angle));
  }
}

namespace {

void check_index(const ArrayConfig& cfg, int n) {
  if (n < 0 || n >= cfg.num_antennas) {
    throw Error(ErrorKind::kDomain, "antenna index " + std::to_string(n) + " out of range");
  }
}

// r^(n) - r without subtracting two nearly equal numbers.
double path_difference(const ArrayConfig& cfg, const SourceLocation& src, int n) {
  const double nd = n * cfg.spacing;
  const double rn = element_distance(cfg, src, n);
  return (nd * nd - 2.0 * src.range * nd * std::cos(src.angle)) / (rn + src.range);
}

}  // namespace

double element_distance(const ArrayConfig& cfg, const SourceLocation& src, int n) {
  check_index(cfg, n);
  const double nd = n * cfg.spacing;
  const double r = src.range;
  return std::sqrt(r * r + nd * nd - 2.0 * r * nd * std::cos(src.angle));
}

Eigen::VectorXcd steering_exact(const ArrayConfig& cfg, const SourceLocation& src) {
  cfg.validate();
  src.validate();
  const double k = cfg.wavenumber();
  Eigen::VectorXcd a(cfg.num_antennas);
  a[0] = 1.0;
  for (int n = 1; n < cfg.num_antennas; ++n) a[n] = std::polar(1.0, -k * path_difference(cfg, src, n));
  return a;
}

Eigen::VectorXcd steering_farfield(const ArrayConfig& cfg, double angle) {
  cfg.validate();
  if (!(angle > 0.0 && angle < kPi)) throw Error(ErrorKind::kDomain, "angle must lie in (0, pi)");
  const double c = std::cos(angle);
  Eigen::VectorXcd a(cfg.num_antennas);
  for (int n = 0; n < cfg.num_antennas; ++n) a[n] = std::polar(1.0, cfg.z1(n) * c);
  return a;
}

Eigen::VectorXcd steering_fresnel(const ArrayConfig& cfg, const SourceLocation& src) {
  cfg.validate();
  src.validate();
  const double c1 = std::cos(src.angle);
  const double c2 = 1.0 - std::cos(2.0 * src.angle);
  Eigen::VectorXcd a(cfg.num_antennas);
  for (int n = 0; n < cfg.num_antennas; ++n) {
    a[n] = std::polar(1.0, cfg.z1(n) * c1 - cfg.z2(n, src.range) * c2);
  }
  return a;
}

double fresnel_phase_error(const ArrayConfig& cfg, const SourceLocation& src, int n) {
  cfg.validate();
  src.validate();
  check_index(cfg, n);
  // With a = nd/r, u = a^2 - 2 a cos(theta), s = sqrt(1 + u):
  //   sqrt(1+u) - 1 - u/2 + u^2/8 = u^3 (s + 3) / (8 (s + 1)^3)
  // and the Fresnel form equals r (u/2 - u^2/8) - r (a^3 cos/2 - a^4/8).
  const double r = src.range;
  const double a = n * cfg.spacing / r;
  const double c = std::cos(src.angle);
  const double u = a * a - 2.0 * a * c;
  const double s = std::sqrt(1.0 + u);
  const double sp1 = s + 1.0;
  const double third_order = u * u * u * (s + 3.0) / (8.0 * sp1 * sp1 * sp1);
  return r * (third_order + 0.5 * a * a * a * c - 0.125 * a * a * a * a);
}

std::vector<double> uniform_angle_grid(int grid_size) {
  if (grid_size < 1) throw Error(ErrorKind::kDomain, "angle grid needs at least one point");
  std::vector<double> grid(static_cast<std::size_t>(grid_size));
  for (int g = 0; g < grid_size; ++g) grid[static_cast<std::size_t>(g)] = kPi * (g + 1) / (grid_size + 1.0);
  return grid;
}

}  // namespace nflift
