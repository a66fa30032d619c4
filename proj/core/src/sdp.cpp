// SPDX-License-Identifier: Apache-2.0
#include "nflift/sdp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <nlohmann/json.hpp>

#include "nflift/error.hpp"
#include "nflift/json_io.hpp"

namespace nflift {

using nlohmann::json;

Eigen::VectorXcd SdpProblem::block_vector(int bin, const Eigen::VectorXcd& q) const {
  return slices[static_cast<std::size_t>(bin)].conjugate() * q / std::sqrt(static_cast<double>(num_harmonics));
}

SdpProblem assemble(const SensingStack& stack, const MeasurementSet& meas) {
  if (meas.num_measurements() != stack.num_measurements()) {
    throw Error(ErrorKind::kDomain, "assemble: measurement length " + std::to_string(meas.num_measurements()) +
                                        " does not match sensing stack M = " +
                                        std::to_string(stack.num_measurements()));
  }
  if (meas.eta < 0.0) throw Error(ErrorKind::kDomain, "assemble: eta must be >= 0");
  SdpProblem p;
  p.y = meas.whitened;
  p.eta = meas.eta;
  p.num_bins = stack.num_bins();
  p.num_harmonics = stack.num_harmonics();
  p.slices.reserve(static_cast<std::size_t>(p.num_bins));
  for (int i = 0; i < p.num_bins; ++i) p.slices.push_back(stack.slice(i));
  return p;
}

json SolverOptions::to_json() const {
  return json{{"tol_primal", tol_primal},       {"tol_dual", tol_dual},         {"max_iter", max_iter},
              {"step", step},                   {"balance_every", balance_every}, {"balance_ratio", balance_ratio},
              {"log_every", log_every}, {"relaxation", relaxation}, {"anderson_memory", anderson_memory}, {"range_tol", range_tol}};
}

SolverOptions SolverOptions::from_json(const json& j) {
  reject_unknown_keys(j, {"tol_primal", "tol_dual", "max_iter", "step", "balance_every", "balance_ratio", "log_every", "relaxation",
                          "anderson_memory", "range_tol"},
                      "solver");
  SolverOptions o;
  o.tol_primal = j.value("tol_primal", o.tol_primal);
  o.tol_dual = j.value("tol_dual", o.tol_dual);
  o.max_iter = j.value("max_iter", o.max_iter);
  o.step = j.value("step", o.step);
  o.balance_every = j.value("balance_every", o.balance_every);
  o.balance_ratio = j.value("balance_ratio", o.balance_ratio);
  o.log_every = j.value("log_every", o.log_every);
  o.relaxation = j.value("relaxation", o.relaxation);
  o.anderson_memory = j.value("anderson_memory", o.anderson_memory);
  o.range_tol = j.value("range_tol", o.range_tol);
  if (!(o.tol_primal > 0.0) || !(o.tol_dual > 0.0) || o.max_iter < 1 || !(o.step > 0.0) || o.balance_every < 0 ||
      !(o.balance_ratio > 1.0) || o.log_every < 0 || !(o.relaxation > 0.0 && o.relaxation < 2.0) || o.anderson_memory < 0 ||
      !(o.range_tol >= 0.0 && o.range_tol < 1.0)) {
    throw Error(ErrorKind::kConfig, "solver: options out of range");
  }
  return o;
}

json DualSolution::trace_to_json() const {
  json entries = json::array();
  for (const auto& t : trace) {
    entries.push_back({{"iteration", t.iteration},
                       {"objective", t.objective},
                       {"primal_residual", t.primal_residual},
                       {"dual_residual", t.dual_residual},
                       {"rho", t.rho}});
  }
  return json{{"schema_version", kSchemaVersion},
              {"iterations", iterations},
              {"converged", converged},
              {"objective", objective},
              {"primal_residual", primal_residual},
              {"dual_residual", dual_residual},
              {"restoration_shift", restoration_shift},
              {"trace", std::move(entries)}};
}

namespace {

// Frobenius projection of a Hermitian matrix onto {Q : <Theta_n, Q> = 1_{n=0}}.
void project_toeplitz_trace(Eigen::MatrixXcd& q, double trace = 1.0) {
  const Eigen::Index nb = q.rows();
  q = 0.5 * (q + q.adjoint()).eval();
  for (Eigen::Index n = 0; n < nb; ++n) {
    const Eigen::Index len = nb - n;
    cdouble mean = 0.0;
    for (Eigen::Index a = 0; a < len; ++a) mean += q(a, a + n);
    mean /= static_cast<double>(len);
    const cdouble target = (n == 0) ? cdouble(trace / static_cast<double>(len)) : cdouble(0.0);
    for (Eigen::Index a = 0; a < len; ++a) {
      q(a, a + n) += target - mean;
      if (n > 0) q(a + n, a) = std::conj(q(a, a + n));
    }
  }
  for (Eigen::Index a = 0; a < nb; ++a) q(a, a) = q(a, a).real();
}

Eigen::MatrixXcd project_psd(const Eigen::MatrixXcd& m, Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd>& eig) {
  eig.compute(m);
  const Eigen::VectorXd lambda = eig.eigenvalues().cwiseMax(0.0);
  const Eigen::MatrixXcd& v = eig.eigenvectors();
  return v * lambda.asDiagonal() * v.adjoint();
}

double min_eigenvalue(const Eigen::MatrixXcd& m) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> eig(m, Eigen::EigenvaluesOnly);
  return eig.eigenvalues().minCoeff();
}

Eigen::MatrixXcd make_block(const Eigen::MatrixXcd& q_block, const Eigen::VectorXcd& u) {
  const Eigen::Index nb = q_block.rows();
  Eigen::MatrixXcd b(nb + 1, nb + 1);
  b.topLeftCorner(nb, nb) = q_block;
  b.topRightCorner(nb, 1) = u;
  b.bottomLeftCorner(1, nb) = u.adjoint();
  b(nb, nb) = 1.0;
  return b;
}

double objective_value(const SdpProblem& p, const Eigen::VectorXcd& q) {
  return p.y.dot(q).real() - p.eta * q.norm();
}

}  // namespace

namespace {

// ADMM state packed in one vector: per bin the slack block S_i and scaled dual U_i,
// then the split copy t and its scaled dual v. Anderson extrapolation works on this vector.
class AdmmIteration {
 public:
  AdmmIteration(const SdpProblem& p, double alpha, double range_tol)
      : nd_(p.num_bins), nb_(p.num_harmonics), bs_(nb_ + 1), m_(p.num_measurements()), alpha_(alpha) {
    // The block maps u_i = W_i q are typically far from full rank in q. Work in
    // q = P q~ with P = V (Lambda + mu)^{-1/2}, where V Lambda V^H = sum_i W_i^H W_i,
    // so that sum_i G_i^H G_i (G_i = W_i P) is (nearly) the identity.
    const double inv_sqrt_nb = 1.0 / std::sqrt(static_cast<double>(nb_));
    std::vector<Eigen::MatrixXcd> w(static_cast<std::size_t>(nd_));
    Eigen::MatrixXcd gram = Eigen::MatrixXcd::Zero(m_, m_);
    for (int i = 0; i < nd_; ++i) {
      w[static_cast<std::size_t>(i)] = p.slices[static_cast<std::size_t>(i)].conjugate() * inv_sqrt_nb;
      gram += w[static_cast<std::size_t>(i)].adjoint() * w[static_cast<std::size_t>(i)];
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(gram);
    const Eigen::VectorXd lambda = es.eigenvalues().cwiseMax(0.0);
    const double lmax = std::max(lambda.maxCoeff(), 1e-300);
    const double floor = range_tol * lmax;

    // With eta = 0 the norm term vanishes: q needs no split copy, and directions the
    // blocks cannot see carry no objective either, so they are dropped.
    split_ = p.eta > 0.0;
    std::vector<Eigen::Index> keep;
    for (Eigen::Index k = 0; k < m_; ++k) {
      if (split_ || lambda[k] > floor) keep.push_back(k);
    }
    if (keep.empty()) keep.push_back(m_ - 1);
    const auto r = static_cast<Eigen::Index>(keep.size());
    p_.resize(m_, r);
    sys_.resize(r);
    for (Eigen::Index c = 0; c < r; ++c) {
      const Eigen::Index k = keep[static_cast<std::size_t>(c)];
      const double lam = lambda[k];
      const double d2 = split_ ? 1.0 / (lam + floor) : 1.0 / lam;
      p_.col(c) = es.eigenvectors().col(k) * std::sqrt(d2);
      sys_[c] = 2.0 * lam * d2 + (split_ ? d2 : 0.0);
    }
    g_.resize(static_cast<std::size_t>(nd_));
    for (int i = 0; i < nd_; ++i) g_[static_cast<std::size_t>(i)] = w[static_cast<std::size_t>(i)] * p_;

    const double y_scale = p.y.norm() > 0.0 ? p.y.norm() : 1.0;
    y_tilde_ = p_.adjoint() * (p.y / y_scale);
    eta_unit_ = p.eta / y_scale;
    q_blocks_.assign(static_cast<std::size_t>(nd_), Eigen::MatrixXcd::Zero(nb_, nb_));
    eig_ = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd>(bs_);
  }

  Eigen::Index reduced_dimension() const { return p_.cols(); }

  Eigen::Index size() const { return 2 * nd_ * bs_ * bs_ + 2 * m_; }

  Eigen::VectorXcd initial_state() const {
    Eigen::VectorXcd z = Eigen::VectorXcd::Zero(size());
    const Eigen::MatrixXcd q0 = Eigen::MatrixXcd::Identity(nb_, nb_) / static_cast<double>(nb_);
    for (int i = 0; i < nd_; ++i) slack(z, i) = make_block(q0, Eigen::VectorXcd::Zero(nb_));
    return z;
  }

  struct Residuals {
    double primal = 0.0, dual = 0.0, eps_primal = 0.0, eps_dual = 0.0;
    bool ok() const { return primal <= eps_primal && dual <= eps_dual; }
    double score() const { return std::max(primal / eps_primal, dual / eps_dual); }
  };

  // One ADMM sweep z -> next. Leaves the x-iterate (q, Q_i) in q() / blocks().
  Residuals sweep(const Eigen::VectorXcd& z, Eigen::VectorXcd& next, double rho, double tol_p, double tol_d) {
    next.resize(size());
    Eigen::VectorXcd rhs = y_tilde_ / rho;
    if (split_) rhs += p_.adjoint() * (t(z) - v(z));
    for (int i = 0; i < nd_; ++i) {
      Eigen::MatrixXcd k = slack(z, i) - dual(z, i);
      k(nb_, nb_) -= 1.0;
      auto& qb = q_blocks_[static_cast<std::size_t>(i)];
      qb = k.topLeftCorner(nb_, nb_);
      project_toeplitz_trace(qb);
      const Eigen::VectorXcd k_col = 0.5 * (k.topRightCorner(nb_, 1) + k.bottomLeftCorner(1, nb_).adjoint());
      rhs += 2.0 * g_[static_cast<std::size_t>(i)].adjoint() * k_col;
    }
    const Eigen::VectorXcd q_tilde = rhs.cwiseQuotient(sys_);
    q_ = p_ * q_tilde;
    if (!q_.allFinite()) throw Error(ErrorKind::kNumerical, "solve: NaN in iterates");

    double dz_sq = 0.0, primal_sq = 0.0, lifted_sq = 0.0, slack_sq = 0.0, dual_sq = 0.0;
    for (int i = 0; i < nd_; ++i) {
      const Eigen::MatrixXcd lifted = make_block(q_blocks_[static_cast<std::size_t>(i)], g_[static_cast<std::size_t>(i)] * q_tilde);
      const Eigen::MatrixXcd s_old = slack(z, i);
      const Eigen::MatrixXcd relaxed = alpha_ * lifted + (1.0 - alpha_) * s_old;
      Eigen::MatrixXcd s_new = project_psd(relaxed + dual(z, i), eig_);
      dual(next, i) = dual(z, i) + relaxed - s_new;
      dz_sq += (s_new - s_old).squaredNorm();
      primal_sq += (lifted - s_new).squaredNorm();
      lifted_sq += lifted.squaredNorm();
      slack_sq += s_new.squaredNorm();
      dual_sq += dual(next, i).squaredNorm();
      slack(next, i) = s_new;
    }
    if (!split_) {
      t(next).setZero();
      v(next).setZero();
      lifted_sq += q_.squaredNorm();
      return finish(primal_sq, dz_sq, lifted_sq, slack_sq, dual_sq, rho, tol_p, tol_d);
    }
    const Eigen::VectorXcd q_relaxed = alpha_ * q_ + (1.0 - alpha_) * t(z);
    const Eigen::VectorXcd a = q_relaxed + v(z);
    const double a_norm = a.norm();
    const double thresh = eta_unit_ / rho;
    t(next) = (a_norm > thresh) ? Eigen::VectorXcd((1.0 - thresh / a_norm) * a) : Eigen::VectorXcd::Zero(m_);
    v(next) = v(z) + q_relaxed - t(next);
    dz_sq += (t(next) - t(z)).squaredNorm();
    primal_sq += (q_ - t(next)).squaredNorm();
    lifted_sq += q_.squaredNorm();
    slack_sq += t(next).squaredNorm();
    dual_sq += v(next).squaredNorm();
    return finish(primal_sq, dz_sq, lifted_sq, slack_sq, dual_sq, rho, tol_p, tol_d);
  }

  // Scaled duals follow rho: U <- U / factor when rho <- rho * factor.
  void rescale_duals(Eigen::VectorXcd& z, double factor) const {
    for (int i = 0; i < nd_; ++i) dual(z, i) /= factor;
    v(z) /= factor;
  }

  bool split() const { return split_; }
  const Eigen::VectorXcd& q() const { return q_; }
  const std::vector<Eigen::MatrixXcd>& blocks() const { return q_blocks_; }

 private:
  static Residuals finish(double primal_sq, double dz_sq, double lifted_sq, double slack_sq, double dual_sq,
                          double rho, double tol_p, double tol_d) {
    Residuals r;
    r.primal = std::sqrt(primal_sq);
    r.dual = rho * std::sqrt(dz_sq);
    r.eps_primal = tol_p * std::max({1.0, std::sqrt(lifted_sq), std::sqrt(slack_sq)});
    r.eps_dual = tol_d * std::max(1.0, rho * std::sqrt(dual_sq));
    return r;
  }

  Eigen::Map<Eigen::MatrixXcd> slack(Eigen::VectorXcd& z, int i) const {
    return {z.data() + 2 * i * bs_ * bs_, bs_, bs_};
  }
  Eigen::Map<const Eigen::MatrixXcd> slack(const Eigen::VectorXcd& z, int i) const {
    return {z.data() + 2 * i * bs_ * bs_, bs_, bs_};
  }
  Eigen::Map<Eigen::MatrixXcd> dual(Eigen::VectorXcd& z, int i) const {
    return {z.data() + (2 * i + 1) * bs_ * bs_, bs_, bs_};
  }
  Eigen::Map<const Eigen::MatrixXcd> dual(const Eigen::VectorXcd& z, int i) const {
    return {z.data() + (2 * i + 1) * bs_ * bs_, bs_, bs_};
  }
  Eigen::VectorBlock<Eigen::VectorXcd> t(Eigen::VectorXcd& z) const { return z.segment(2 * nd_ * bs_ * bs_, m_); }
  Eigen::VectorBlock<const Eigen::VectorXcd> t(const Eigen::VectorXcd& z) const { return z.segment(2 * nd_ * bs_ * bs_, m_); }
  Eigen::VectorBlock<Eigen::VectorXcd> v(Eigen::VectorXcd& z) const { return z.segment(2 * nd_ * bs_ * bs_ + m_, m_); }
  Eigen::VectorBlock<const Eigen::VectorXcd> v(const Eigen::VectorXcd& z) const { return z.segment(2 * nd_ * bs_ * bs_ + m_, m_); }

  int nd_, nb_;
  Eigen::Index bs_, m_;
  double alpha_;
  bool split_ = true;
  Eigen::MatrixXcd p_;                // M x r change of variables
  Eigen::VectorXd sys_;               // diagonal of the q~ normal equations
  std::vector<Eigen::MatrixXcd> g_;   // N_b x r block maps in q~
  Eigen::VectorXcd y_tilde_;
  double eta_unit_ = 0.0;
  Eigen::VectorXcd q_;
  std::vector<Eigen::MatrixXcd> q_blocks_;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> eig_;
};

// Type-II Anderson acceleration on real coordinates, so that real mixing weights
// keep the Hermitian blocks Hermitian.
class Anderson {
 public:
  explicit Anderson(int memory) : mem_(memory) {}

  void reset() {
    cols_ = 0;
    has_prev_ = false;
  }

  // Feeds (z, T z); returns the extrapolated point or T z when there is no history yet.
  Eigen::VectorXcd extrapolate(const Eigen::VectorXcd& z, const Eigen::VectorXcd& tz) {
    const Eigen::VectorXcd g = tz - z;
    if (!has_prev_) {
      dg_.resize(2 * z.size(), mem_);
      df_.resize(2 * z.size(), mem_);
    } else {
      const int slot = head_;
      dg_.col(slot) = as_real(g - g_prev_);
      df_.col(slot) = as_real(tz - tz_prev_);
      head_ = (head_ + 1) % mem_;
      cols_ = std::min(cols_ + 1, mem_);
    }
    g_prev_ = g;
    tz_prev_ = tz;
    has_prev_ = true;
    if (cols_ == 0) return tz;

    const auto dg = dg_.leftCols(cols_);
    Eigen::MatrixXd gram = dg.transpose() * dg;
    const double reg = 1e-10 * std::max(gram.trace(), 1e-300);
    gram.diagonal().array() += reg;
    const Eigen::VectorXd gamma = gram.ldlt().solve(dg.transpose() * as_real(g));
    if (!gamma.allFinite()) {
      reset();
      return tz;
    }
    Eigen::VectorXd out = as_real(tz) - df_.leftCols(cols_) * gamma;
    Eigen::VectorXcd z_next(z.size());
    for (Eigen::Index k = 0; k < z.size(); ++k) z_next[k] = cdouble(out[2 * k], out[2 * k + 1]);
    return z_next;
  }

 private:
  static Eigen::VectorXd as_real(const Eigen::VectorXcd& x) {
    return Eigen::Map<const Eigen::VectorXd>(reinterpret_cast<const double*>(x.data()), 2 * x.size());
  }

  int mem_;
  int cols_ = 0;
  int head_ = 0;
  bool has_prev_ = false;
  Eigen::MatrixXd dg_, df_;
  Eigen::VectorXcd g_prev_, tz_prev_;
};

}  // namespace

DualSolution AdmmDualSolver::solve(const SdpProblem& p, const SolverOptions& opt) const {
  const int m = p.num_measurements();
  const int nd = p.num_bins;
  const int nb = p.num_harmonics;
  if (m == 0) throw Error(ErrorKind::kDomain, "solve: no measurements");
  if (nd < 1 || nb < 1 || static_cast<int>(p.slices.size()) != nd) throw Error(ErrorKind::kDomain, "solve: malformed problem");
  for (const auto& s : p.slices) {
    if (s.rows() != nb || s.cols() != m) throw Error(ErrorKind::kDomain, "solve: slice shape mismatch");
  }

  AdmmIteration admm(p, opt.relaxation, opt.range_tol);
  Anderson accel(std::max(opt.anderson_memory, 1));
  const bool use_aa = opt.anderson_memory > 0;
  double rho = opt.step;

  DualSolution sol;
  Eigen::VectorXcd z = admm.initial_state();
  Eigen::VectorXcd tz;
  Eigen::VectorXcd fallback;      // plain ADMM image of the last accepted point
  double fallback_residual = 0.0;  // ||T z - z|| at that point
  bool checking = false;
  bool balance_due = false;

  double best_score = std::numeric_limits<double>::infinity();
  Eigen::VectorXcd best_q;
  std::vector<Eigen::MatrixXcd> best_blocks;

  int it = 0;
  for (it = 1; it <= opt.max_iter; ++it) {
    const auto res = admm.sweep(z, tz, rho, opt.tol_primal, opt.tol_dual);
    const double fp_residual = (tz - z).norm();
    sol.primal_residual = res.primal;
    sol.dual_residual = res.dual;
    if (res.score() < best_score) {
      best_score = res.score();
      best_q = admm.q();
      best_blocks = admm.blocks();
    }
    if (opt.log_every > 0 && (it % opt.log_every == 0 || it == 1)) {
      sol.trace.push_back({it, objective_value(p, admm.q()), res.primal, res.dual, rho});
    }
    if (res.ok()) {
      sol.converged = true;
      break;
    }

    if (opt.balance_every > 0 && it % opt.balance_every == 0) balance_due = true;

    // Safeguard: an extrapolated point must not increase the fixed-point residual.
    if (checking && fp_residual > fallback_residual) {
      z = fallback;
      accel.reset();
      checking = false;
      continue;
    }

    if (balance_due) {
      balance_due = false;
      double factor = 1.0;
      if (res.primal > opt.balance_ratio * res.dual) factor = 2.0;
      else if (res.dual > opt.balance_ratio * res.primal) factor = 0.5;
      if (factor != 1.0) {
        rho *= factor;
        admm.rescale_duals(tz, factor);
        accel.reset();
        z = std::move(tz);
        checking = false;
        continue;
      }
    }

    if (use_aa) {
      fallback = tz;
      fallback_residual = fp_residual;
      z = accel.extrapolate(z, tz);
      checking = true;
    } else {
      z = std::move(tz);
    }
  }
  sol.iterations = std::min(it, opt.max_iter);

  Eigen::VectorXcd q = sol.converged ? admm.q() : best_q;
  std::vector<Eigen::MatrixXcd> q_blocks = sol.converged ? admm.blocks() : best_blocks;

  // Shift every block by delta I and rescale: Q_i <- (Q_i + delta I) / s, q <- q / sqrt(s (1 + delta)),
  // s = 1 + N_b delta. Congruence keeps the shifted blocks PSD and the Toeplitz sums exact.
  double worst = 0.0;
  for (int i = 0; i < nd; ++i) {
    const auto iu = static_cast<std::size_t>(i);
    worst = std::min(worst, min_eigenvalue(make_block(q_blocks[iu], p.block_vector(i, q))));
  }
  if (worst < 0.0) {
    const double delta = -worst * (1.0 + 1e-6) + 1e-15;
    const double s = 1.0 + nb * delta;
    for (auto& qb : q_blocks) {
      qb += delta * Eigen::MatrixXcd::Identity(nb, nb);
      qb /= s;
    }
    q /= std::sqrt(s * (1.0 + delta));
    sol.restoration_shift = delta;
  }
  sol.q = std::move(q);
  sol.blocks = std::move(q_blocks);
  sol.objective = objective_value(p, sol.q);
  if (opt.log_every > 0 && (sol.trace.empty() || sol.trace.back().iteration != sol.iterations)) {
    sol.trace.push_back({sol.iterations, sol.objective, sol.primal_residual, sol.dual_residual, rho});
  }
  return sol;
}

DualSolution solve(const SdpProblem& problem, const SolverOptions& options) {
  return AdmmDualSolver{}.solve(problem, options);
}

Eigen::MatrixXcd constraint_block(const SdpProblem& problem, const DualSolution& sol, int bin) {
  if (bin < 0 || bin >= problem.num_bins) throw Error(ErrorKind::kDomain, "constraint_block: bin out of range");
  return make_block(sol.blocks[static_cast<std::size_t>(bin)], problem.block_vector(bin, sol.q));
}

FeasibilityReport check_feasibility(const SdpProblem& problem, const DualSolution& sol) {
  FeasibilityReport rep;
  rep.min_block_eigenvalue = std::numeric_limits<double>::infinity();
  const int nb = problem.num_harmonics;
  for (int i = 0; i < problem.num_bins; ++i) {
    rep.min_block_eigenvalue = std::min(rep.min_block_eigenvalue, min_eigenvalue(constraint_block(problem, sol, i)));
    const auto& qb = sol.blocks[static_cast<std::size_t>(i)];
    for (int n = -(nb - 1); n <= nb - 1; ++n) {
      cdouble sum = 0.0;
      for (int a = 0; a < nb; ++a) {
        const int b = a + n;
        if (b >= 0 && b < nb) sum += qb(a, b);
      }
      const double target = (n == 0) ? 1.0 : 0.0;
      rep.max_equality_violation = std::max(rep.max_equality_violation, std::abs(sum - target));
    }
  }
  return rep;
}

double dual_feasibility_margin(const DualSolution& sol, const SensingStack& stack, int grid_size) {
  const Eigen::MatrixXcd z = stack.adjoint(sol.q);
  const int nb = stack.num_harmonics();
  const int off = (nb - 1) / 2;
  const double scale = 1.0 / std::sqrt(static_cast<double>(nb));
  double margin = 0.0;
  Eigen::VectorXcd v(nb);
  for (double theta : uniform_angle_grid(grid_size)) {
    for (int k = -off; k <= off; ++k) v[k + off] = std::polar(scale, k * theta);
    margin = std::max(margin, (z * v).cwiseAbs().maxCoeff());
  }
  return margin;
}

}  // namespace nflift
