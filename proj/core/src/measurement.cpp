// SPDX-License-Identifier: Apache-2.0
#include "nflift/measurement.hpp"

#include <cmath>
#include <random>
#include <string>

#include <Eigen/Eigenvalues>

#include "nflift/error.hpp"
#include "nflift/json_io.hpp"

namespace nflift {

using nlohmann::json;

CombinerEnsemble::CombinerEnsemble(Eigen::MatrixXcd combiners, int num_rf, int num_slots, std::uint64_t seed)
    : b_(std::move(combiners)), num_rf_(num_rf), num_slots_(num_slots), seed_(seed) {
  const Eigen::Index m = b_.rows();
  if (m == 0 || b_.cols() == 0) throw Error(ErrorKind::kDomain, "combiner stack is empty");
  if (m > b_.cols()) {
    throw Error(ErrorKind::kConfig, "whitening needs M <= N_r (M = " + std::to_string(m) +
                                        ", N_r = " + std::to_string(b_.cols()) + "); B B^H would be singular");
  }
  const Eigen::MatrixXcd gram = b_ * b_.adjoint();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> eig(gram, Eigen::EigenvaluesOnly);
  const double lo = eig.eigenvalues().minCoeff();
  const double hi = eig.eigenvalues().maxCoeff();
  if (!(lo >= 1e-10 * hi)) {
    throw Error(ErrorKind::kNumerical,
                "combiner Gram matrix is numerically rank deficient; draw the combiners with a different seed");
  }

  const double scale = gram.trace().real() / static_cast<double>(m);
  Eigen::LLT<Eigen::MatrixXcd> llt(gram);
  if (llt.info() != Eigen::Success) {
    jitter_ = 1e-12 * scale;
    llt.compute(gram + jitter_ * Eigen::MatrixXcd::Identity(m, m));
    if (llt.info() != Eigen::Success || jitter_ > 1e-8 * scale) {
      throw Error(ErrorKind::kNumerical, "Cholesky factorisation of B B^H failed");
    }
  }
  chol_ = llt.matrixL();
  b_white_ = chol_.triangularView<Eigen::Lower>().solve(b_);
}

Eigen::VectorXcd CombinerEnsemble::whiten(const Eigen::VectorXcd& y) const {
  if (y.size() != b_.rows()) throw Error(ErrorKind::kDomain, "whiten: length mismatch");
  return chol_.triangularView<Eigen::Lower>().solve(y);
}

CombinerEnsemble draw_combiners(int num_antennas, int num_rf, int num_slots, std::uint64_t seed) {
  if (num_antennas < 1 || num_rf < 1 || num_slots < 1) {
    throw Error(ErrorKind::kDomain, "draw_combiners: N_r, N_RF and P_T must be >= 1");
  }
  const int m = num_rf * num_slots;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> phase(0.0, 2.0 * kPi);
  const double mag = 1.0 / std::sqrt(static_cast<double>(num_antennas));
  Eigen::MatrixXcd b(m, num_antennas);
  for (int row = 0; row < m; ++row) {
    for (int n = 0; n < num_antennas; ++n) b(row, n) = std::polar(mag, phase(rng));
  }
  return CombinerEnsemble(std::move(b), num_rf, num_slots, seed);
}

SensingStack::SensingStack(const Eigen::MatrixXcd& whitened_combiners, const BesselVandermondeOperator& op)
    : num_bins_(op.num_bins()), num_harmonics_(op.num_harmonics()) {
  if (whitened_combiners.cols() != op.num_antennas()) {
    throw Error(ErrorKind::kDomain, "combiner width does not match the operator's antenna count");
  }
  const int m_count = static_cast<int>(whitened_combiners.rows());
  psi_.assign(static_cast<std::size_t>(m_count), Eigen::MatrixXcd::Zero(num_bins_, num_harmonics_));
  for (int m = 0; m < m_count; ++m) {
    auto& psi = psi_[static_cast<std::size_t>(m)];
    for (int n = 0; n < op.num_antennas(); ++n) psi += whitened_combiners(m, n) * op.phi(n);
  }
  slices_.assign(static_cast<std::size_t>(num_bins_), Eigen::MatrixXcd(num_harmonics_, m_count));
  flat_.resize(m_count, static_cast<Eigen::Index>(num_bins_) * num_harmonics_);
  for (int m = 0; m < m_count; ++m) {
    const auto& psi = psi_[static_cast<std::size_t>(m)];
    for (int i = 0; i < num_bins_; ++i) {
      slices_[static_cast<std::size_t>(i)].col(m) = psi.row(i).transpose();
      flat_.block(m, static_cast<Eigen::Index>(i) * num_harmonics_, 1, num_harmonics_) = psi.row(i);
    }
  }
}

Eigen::VectorXcd SensingStack::forward(const Eigen::MatrixXcd& x) const {
  if (x.rows() != num_bins_ || x.cols() != num_harmonics_) throw Error(ErrorKind::kDomain, "forward: shape mismatch");
  Eigen::VectorXcd xv(flat_.cols());
  for (int i = 0; i < num_bins_; ++i) {
    xv.segment(static_cast<Eigen::Index>(i) * num_harmonics_, num_harmonics_) = x.row(i).transpose().conjugate();
  }
  return flat_ * xv;
}

Eigen::MatrixXcd SensingStack::adjoint(const Eigen::VectorXcd& q) const {
  if (q.size() != flat_.rows()) throw Error(ErrorKind::kDomain, "adjoint: length mismatch");
  const Eigen::VectorXcd zv = flat_.transpose() * q.conjugate();
  Eigen::MatrixXcd z(num_bins_, num_harmonics_);
  for (int i = 0; i < num_bins_; ++i) {
    z.row(i) = zv.segment(static_cast<Eigen::Index>(i) * num_harmonics_, num_harmonics_).transpose();
  }
  return z;
}

double noise_radius(double sigma, int num_measurements, double delta) {
  if (sigma < 0.0) throw Error(ErrorKind::kDomain, "noise std must be >= 0");
  if (!(delta > 0.0 && delta < 1.0)) throw Error(ErrorKind::kDomain, "delta must lie in (0, 1)");
  if (sigma == 0.0) return 0.0;
  const double m = num_measurements;
  return sigma * std::sqrt(m + 2.0 * std::sqrt(m * std::log(1.0 / delta)));
}

Eigen::VectorXcd complex_gaussian(Eigen::Index n, double sigma, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, sigma / std::sqrt(2.0));
  Eigen::VectorXcd w(n);
  for (Eigen::Index k = 0; k < n; ++k) {
    const double re = normal(rng);
    const double im = normal(rng);
    w[k] = {re, im};
  }
  return w;
}

MeasurementSet simulate(const SensingStack& stack, const CombinerEnsemble& ens, const Eigen::MatrixXcd& x_true,
                        double sigma, std::uint64_t seed, double delta) {
  if (sigma < 0.0) throw Error(ErrorKind::kDomain, "noise std must be >= 0");
  if (stack.num_measurements() != ens.num_measurements()) {
    throw Error(ErrorKind::kDomain, "simulate: sensing stack and combiners disagree on M");
  }
  MeasurementSet out;
  out.whitened = stack.forward(x_true);
  if (sigma > 0.0) out.whitened += complex_gaussian(out.whitened.size(), sigma, seed);
  out.raw = ens.cholesky() * out.whitened;
  out.sigma = sigma;
  out.eta = noise_radius(sigma, out.num_measurements(), delta);
  out.seed = seed;
  return out;
}

MeasurementSet simulate_channel(const CombinerEnsemble& ens, const Eigen::VectorXcd& h, double sigma,
                                std::uint64_t seed, double delta) {
  if (sigma < 0.0) throw Error(ErrorKind::kDomain, "noise std must be >= 0");
  if (h.size() != ens.num_antennas()) throw Error(ErrorKind::kDomain, "simulate_channel: channel length mismatch");
  Eigen::VectorXcd received = h;
  if (sigma > 0.0) received += complex_gaussian(h.size(), sigma, seed);
  MeasurementSet out;
  out.raw = ens.combiners() * received;
  out.whitened = ens.whiten(out.raw);
  out.sigma = sigma;
  out.eta = noise_radius(sigma, out.num_measurements(), delta);
  out.seed = seed;
  return out;
}

namespace {

json pairs_to_json(const Eigen::VectorXcd& v) {
  json out = json::array();
  for (Eigen::Index k = 0; k < v.size(); ++k) out.push_back({v[k].real(), v[k].imag()});
  return out;
}

Eigen::VectorXcd pairs_from_json(const json& j) {
  if (!j.is_array()) throw Error(ErrorKind::kConfig, "expected an array of [re, im] pairs");
  Eigen::VectorXcd v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t k = 0; k < j.size(); ++k) {
    const auto& p = j[k];
    if (!p.is_array() || p.size() != 2) throw Error(ErrorKind::kConfig, "expected an [re, im] pair");
    v[static_cast<Eigen::Index>(k)] = {p[0].get<double>(), p[1].get<double>()};
  }
  return v;
}

}  // namespace

json MeasurementSet::to_json() const {
  json j;
  j["schema_version"] = kSchemaVersion;
  j["M"] = num_measurements();
  j["sigma"] = sigma;
  j["eta"] = eta;
  j["seed"] = seed;
  j["y_whitened"] = pairs_to_json(whitened);
  j["y_raw"] = pairs_to_json(raw);
  return j;
}

MeasurementSet MeasurementSet::from_json(const json& j) {
  reject_unknown_keys(j, {"schema_version", "M", "sigma", "eta", "seed", "y_whitened", "y_raw"}, "measurement");
  check_schema_version(j, "measurement");
  MeasurementSet out;
  out.sigma = j.at("sigma").get<double>();
  out.eta = j.at("eta").get<double>();
  out.seed = j.at("seed").get<std::uint64_t>();
  out.whitened = pairs_from_json(j.at("y_whitened"));
  out.raw = j.contains("y_raw") ? pairs_from_json(j.at("y_raw")) : Eigen::VectorXcd();
  const int m = j.at("M").get<int>();
  if (m != out.num_measurements()) throw Error(ErrorKind::kConfig, "measurement: M disagrees with y_whitened length");
  if (m == 0) throw Error(ErrorKind::kConfig, "measurement: empty measurement vector");
  if (out.sigma < 0.0 || out.eta < 0.0) throw Error(ErrorKind::kConfig, "measurement: sigma and eta must be >= 0");
  return out;
}

}  // namespace nflift
