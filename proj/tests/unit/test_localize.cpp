// SPDX-License-Identifier: Apache-2.0
#include <cmath>
#include <random>
#include <sstream>
#include <string>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "nflift/error.hpp"
#include "nflift/localize.hpp"

namespace {

using namespace nflift;

constexpr int kNb = 15;

// Row whose polynomial is the normalised Dirichlet kernel centred at theta0:
// p(theta) = (1/N_b) sum_k e^{j k (theta - theta0)}, a unit peak exactly at theta0.
Eigen::RowVectorXcd dirichlet_row(double theta0, cdouble phase = 1.0) {
  Eigen::RowVectorXcd z(kNb);
  const int off = kNb / 2;
  for (int k = -off; k <= off; ++k) z[k + off] = phase * std::polar(1.0 / std::sqrt(double(kNb)), -k * theta0);
  return z;
}

DualPolynomialBank two_bin_bank(double a0, double a1) {
  Eigen::MatrixXcd z(2, kNb);
  z.row(0) = dirichlet_row(a0, cdouble(0, 1));
  z.row(1) = 0.5 * dirichlet_row(a1);
  return DualPolynomialBank(z);
}

TEST(Bank, ValueMatchesDefinition) {
  const auto bank = two_bin_bank(1.0, 2.0);
  EXPECT_EQ(bank.num_bins(), 2);
  EXPECT_EQ(bank.num_harmonics(), kNb);
  EXPECT_NEAR(std::abs(bank.value(0, 1.0)), 1.0, 1e-14);
  EXPECT_NEAR(std::abs(bank.value(1, 2.0)), 0.5, 1e-14);
  // Dirichlet kernel: sin(N x / 2) / (N sin(x / 2)).
  const double x = 0.37;
  EXPECT_NEAR(std::abs(bank.value(0, 1.0 + x)), std::abs(std::sin(kNb * x / 2) / (kNb * std::sin(x / 2))), 1e-14);
  EXPECT_THROW(DualPolynomialBank(Eigen::MatrixXcd::Zero(1, 4)), Error);
}

TEST(Bank, DerivativesMatchFiniteDifferences) {
  Eigen::MatrixXcd z(1, kNb);
  for (int k = 0; k < kNb; ++k) z(0, k) = {std::cos(1.3 * k), std::sin(0.7 * k * k)};
  const DualPolynomialBank bank(z);
  const double th = 0.83, h = 1e-5;
  const auto d = bank.derivatives(0, th);
  EXPECT_LT(std::abs(d.p - bank.value(0, th)), 1e-14);
  const cdouble fd1 = (bank.value(0, th + h) - bank.value(0, th - h)) / (2 * h);
  const cdouble fd2 = (bank.value(0, th + h) - 2.0 * bank.value(0, th) + bank.value(0, th - h)) / (h * h);
  EXPECT_LT(std::abs(d.dp - fd1), 1e-7 * std::abs(d.dp) + 1e-8);
  EXPECT_LT(std::abs(d.d2p - fd2), 1e-3 * std::abs(d.d2p) + 1e-4);
}

TEST(Bank, SamplesOnInteriorGrid) {
  const auto bank = two_bin_bank(1.0, 2.0);
  const auto s = evaluate_bank(bank, 64);
  ASSERT_EQ(s.grid.size(), 64u);
  ASSERT_EQ(s.modulus.rows(), 2);
  EXPECT_GT(s.grid.front(), 0.0);
  EXPECT_LT(s.grid.back(), kPi);
  for (int g = 0; g < 64; g += 9) {
    EXPECT_NEAR(s.modulus(1, g), std::abs(bank.value(1, s.grid[static_cast<std::size_t>(g)])), 1e-14);
  }
}

TEST(Peaks, RefinementIsSuperResolved) {
  const double a0 = 1.2345678901, a1 = 2.0123456789;
  const auto bank = two_bin_bank(a0, a1);
  const auto s = evaluate_bank(bank, 512);
  const auto est = detect_peaks(bank, s, 0.45);
  ASSERT_EQ(est.model_order(), 2);
  const double step = kPi / 513;
  const auto r0 = refine_peak(bank, 0, est.entries[0].coarse_angle, step);
  EXPECT_NEAR(r0.angle, a0, 1e-10);
  EXPECT_NEAR(r0.modulus, 1.0, 1e-14);
  EXPECT_FALSE(r0.used_fallback);
  const auto r1 = refine_peak(bank, 1, est.entries[1].coarse_angle, step);
  EXPECT_NEAR(r1.angle, a1, 1e-10);
  EXPECT_NEAR(r1.modulus, 0.5, 1e-14);
}

TEST(Peaks, FallbackWhenBracketMissesThePeak) {
  const auto bank = two_bin_bank(1.0, 2.0);
  const auto r = refine_peak(bank, 0, 1.06, 0.01);  // monotone on [1.05, 1.07]
  EXPECT_TRUE(r.used_fallback);
  EXPECT_GE(r.modulus, std::abs(bank.value(0, 1.06)));
  EXPECT_NEAR(r.angle, 1.05, 1e-6);
  EXPECT_THROW(refine_peak(bank, 2, 1.0, 0.1), Error);
}

TEST(Peaks, ThresholdAndMerging) {
  const auto bank = two_bin_bank(1.0, 2.0);
  BankSamples s;
  s.grid = {0.5, 0.6, 0.61, 0.62, 0.7, 0.8, 0.9};
  s.modulus.resize(2, 7);
  // bin 0: peaks at 0.6 (0.995) and 0.62 (0.999) within the merge radius, plus a peak at 0.8 under threshold.
  s.modulus.row(0) << 0.1, 0.995, 0.5, 0.999, 0.2, 0.98, 0.1;
  s.modulus.row(1) << 0.1, 0.2, 0.3, 0.4, 0.995, 0.3, 0.2;
  const auto est = detect_peaks(bank, s, 0.99);
  ASSERT_EQ(est.model_order(), 2);
  EXPECT_EQ(est.entries[0].bin, 0);
  EXPECT_DOUBLE_EQ(est.entries[0].angle, 0.62);
  EXPECT_EQ(est.entries[1].bin, 1);
  EXPECT_DOUBLE_EQ(est.entries[1].angle, 0.7);
  EXPECT_NEAR(merge_radius(kNb), 2 * kPi / kNb / 8, 1e-15);
  EXPECT_THROW(detect_peaks(bank, s, 0.0), Error);
  EXPECT_THROW(detect_peaks(bank, s, 1.5), Error);
}

TEST(Peaks, OverUnitPeakWarns) {
  const DualPolynomialBank bank(dirichlet_row(0.6));
  BankSamples s;
  s.grid = {0.5, 0.6, 0.7};
  s.modulus.resize(1, 3);
  s.modulus << 0.2, 1.01, 0.2;
  const auto est = detect_peaks(bank, s, 0.99);
  ASSERT_EQ(est.model_order(), 1);
  EXPECT_EQ(est.warnings.size(), 1u);
  s.modulus.resize(2, 3);
  EXPECT_THROW(detect_peaks(bank, s, 0.99), Error);
}

TEST(Peaks, SupportJsonAndCsv) {
  SupportEstimate est;
  est.entries.push_back({3, 1.5, 0.9999, 1.49, false});
  const auto j = est.to_json();
  EXPECT_EQ(j.at("schema_version"), 1);
  EXPECT_EQ(j.at("model_order"), 1);
  EXPECT_EQ(j.at("entries")[0].at("bin"), 3);

  const auto bank = two_bin_bank(1.0, 2.0);
  const auto s = evaluate_bank(bank, 10);
  std::ostringstream out;
  write_bank_csv(out, s);
  std::istringstream in(out.str());
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "bin,theta_rad,modulus");
  int rows = 0;
  while (std::getline(in, line)) ++rows;
  EXPECT_EQ(rows, 20);
}

TEST(Peaks, RefinementMatchesBruteForceArgmax) {
  std::mt19937_64 rng(8);
  std::normal_distribution<double> n;
  for (int trial = 0; trial < 3; ++trial) {
    Eigen::MatrixXcd z(1, kNb);
    for (int k = 0; k < kNb; ++k) z(0, k) = {n(rng), n(rng)};
    const DualPolynomialBank bank(z);
    const int grid = 10000000;
    double best = -1.0, best_theta = 0.0;
    for (int g = 1; g < grid; ++g) {
      const double th = kPi * g / grid;
      const double m = std::norm(bank.value(0, th));
      if (m > best) {
        best = m;
        best_theta = th;
      }
    }
    const auto samples = evaluate_bank(bank, 1024);
    Eigen::Index g = 0;
    samples.modulus.row(0).maxCoeff(&g);
    if (g == 0 || g == 1023) continue;  // maximum at the edge of (0, pi): not an interior peak
    const auto r = refine_peak(bank, 0, samples.grid[static_cast<std::size_t>(g)], kPi / 1025);
    EXPECT_NEAR(r.angle, best_theta, 1e-6) << "trial " << trial;
  }
}

}  // namespace
