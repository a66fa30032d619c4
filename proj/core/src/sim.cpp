// SPDX-License-Identifier: Apache-2.0
#include "nflift/sim.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <string>

#include <nlohmann/json.hpp>

#include "nflift/error.hpp"
#include "nflift/json_io.hpp"

namespace nflift {

using nlohmann::json;

namespace {

constexpr double kBinPenalty = 10.0;

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

template <class F>
auto run_stage(const char* stage, F&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const Error& e) {
    throw e.with_stage(stage);
  } catch (const std::exception& e) {
    throw Error(ErrorKind::kNumerical, e.what(), stage);
  }
}

json complex_to_json(cdouble c) { return json::array({c.real(), c.imag()}); }

}  // namespace

const char* to_string(GenerationMode mode) {
  return mode == GenerationMode::kLifted ? "lifted" : "spherical";
}

GenerationMode generation_mode_from_string(const std::string& s) {
  if (s == "lifted") return GenerationMode::kLifted;
  if (s == "spherical") return GenerationMode::kSpherical;
  throw Error(ErrorKind::kConfig, "unknown generation mode '" + s + "' (expected lifted or spherical)");
}

double angle_distance(double a, double b) {
  double d = std::fmod(std::abs(a - b), 2.0 * kPi);
  return d > kPi ? 2.0 * kPi - d : d;
}

void Scenario::validate() const {
  array.validate();
  lifting.validate();
  const int nd = lifting.num_bins();
  const int cap = std::min(nd, lifting.num_harmonics());
  if (static_cast<int>(paths.size()) > cap) {
    throw Error(ErrorKind::kConfig, "number of paths " + std::to_string(paths.size()) + " exceeds min(N_d, N_b) = " +
                                        std::to_string(cap));
  }
  for (std::size_t l = 0; l < paths.size(); ++l) {
    const auto& p = paths[l];
    const std::string who = "path " + std::to_string(l);
    if (p.bin >= nd) throw Error(ErrorKind::kConfig, who + ": bin " + std::to_string(p.bin) + " out of range");
    if (p.bin < 0) {
      if (mode == GenerationMode::kLifted) throw Error(ErrorKind::kConfig, who + ": lifted mode needs an on-grid bin");
      if (!(p.range > 0.0) || !std::isfinite(p.range)) throw Error(ErrorKind::kConfig, who + ": range must be > 0");
    }
    if (!(p.angle > 0.0 && p.angle < kPi)) throw Error(ErrorKind::kConfig, who + ": angle must lie in (0, pi)");
    if (!std::isfinite(p.gain.real()) || !std::isfinite(p.gain.imag())) {
      throw Error(ErrorKind::kConfig, who + ": gain is not finite");
    }
  }
}

json Scenario::paths_to_json() const {
  json out = json::array();
  for (const auto& p : paths) {
    const double r = p.bin >= 0 ? lifting.range_grid[static_cast<std::size_t>(p.bin)] : p.range;
    out.push_back({{"bin", p.bin}, {"range_m", r}, {"angle_rad", p.angle}, {"gain", complex_to_json(p.gain)}});
  }
  return out;
}

std::vector<PathSpec> draw_paths(const LiftingConfig& lifting, const PathDrawOptions& opts, std::uint64_t seed,
                                 std::vector<std::string>* warnings) {
  lifting.validate();
  const int nd = lifting.num_bins();
  const int l_count = opts.num_paths;
  if (l_count < 0) throw Error(ErrorKind::kConfig, "number of paths must be >= 0");
  if (l_count > std::min(nd, lifting.num_harmonics())) {
    throw Error(ErrorKind::kConfig, "number of paths exceeds min(N_d, N_b)");
  }
  if (!(opts.angle_margin >= 0.0 && opts.angle_margin < kPi / 2)) {
    throw Error(ErrorKind::kConfig, "angle margin must lie in [0, pi/2)");
  }
  const double sep = opts.min_separation < 0.0 ? 4.0 * 2.0 * kPi / lifting.num_harmonics() : opts.min_separation;

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> angle_dist(opts.angle_margin, kPi - opts.angle_margin);
  std::uniform_real_distribution<double> mag_dist(0.5, 1.5);
  std::uniform_real_distribution<double> phase_dist(0.0, 2.0 * kPi);
  std::uniform_int_distribution<int> bin_dist(0, nd - 1);

  auto snap = [&](double a) {
    if (opts.angle_grid <= 0) return a;
    const double step = kPi / (opts.angle_grid + 1.0);
    const double g = std::clamp(std::round(a / step), 1.0, static_cast<double>(opts.angle_grid));
    return g * step;
  };

  std::vector<PathSpec> best;
  double best_slack = -std::numeric_limits<double>::infinity();
  const int attempts = std::max(1, opts.max_attempts);
  for (int a = 0; a < attempts; ++a) {
    std::vector<PathSpec> paths(static_cast<std::size_t>(l_count));
    std::vector<int> bins(static_cast<std::size_t>(nd));
    std::iota(bins.begin(), bins.end(), 0);
    if (opts.distinct_bins) std::shuffle(bins.begin(), bins.end(), rng);
    for (int l = 0; l < l_count; ++l) {
      auto& p = paths[static_cast<std::size_t>(l)];
      p.bin = opts.distinct_bins ? bins[static_cast<std::size_t>(l)] : bin_dist(rng);
      p.range = lifting.range_grid[static_cast<std::size_t>(p.bin)];
      p.angle = snap(angle_dist(rng));
    }
    // Smallest margin by which the separation policy is met (negative = violated).
    double slack = std::numeric_limits<double>::infinity();
    for (int i = 0; i < l_count; ++i) {
      for (int j = i + 1; j < l_count; ++j) {
        const auto& pi = paths[static_cast<std::size_t>(i)];
        const auto& pj = paths[static_cast<std::size_t>(j)];
        const double need = pi.bin == pj.bin ? sep : opts.cross_bin_separation;
        slack = std::min(slack, angle_distance(pi.angle, pj.angle) - need);
      }
    }
    if (slack > best_slack) {
      best_slack = slack;
      best = std::move(paths);
    }
    if (best_slack >= 0.0) break;
  }
  if (best_slack < 0.0 && warnings) {
    warnings->push_back("could not meet the angle separation policy after " + std::to_string(attempts) +
                        " draws; closest pair misses it by " + std::to_string(-best_slack) + " rad");
  }
  for (auto& p : best) p.gain = std::polar(mag_dist(rng), phase_dist(rng));
  return best;
}

Workspace make_workspace(const ArrayConfig& array, const LiftingConfig& lifting, const MeasurementParams& params) {
  return run_stage("setup", [&] {
    array.validate();
    lifting.validate();
    if (params.num_rf <= 0 || params.num_slots <= 0) {
      throw Error(ErrorKind::kConfig, "num_rf and num_slots must be positive");
    }
    BesselVandermondeOperator op(array, lifting);
    CombinerEnsemble ens = draw_combiners(array.num_antennas, params.num_rf, params.num_slots, params.combiner_seed);
    SensingStack stack = build_sensing(ens, op);
    return Workspace{std::move(op), std::move(ens), std::move(stack)};
  });
}

Eigen::MatrixXcd lifted_matrix(const LiftingConfig& lifting, const std::vector<PathSpec>& paths) {
  Eigen::MatrixXcd x = Eigen::MatrixXcd::Zero(lifting.num_bins(), lifting.num_harmonics());
  for (const auto& p : paths) {
    if (p.bin < 0) throw Error(ErrorKind::kConfig, "lifted matrix needs on-grid paths");
    x += std::conj(p.gain) * LiftedAtom{p.bin, p.angle}.matrix(lifting);
  }
  return x;
}

GeneratedData generate(const Workspace& ws, const Scenario& scn, const MeasurementParams& params) {
  return run_stage("generate", [&] {
    scn.validate();
    if (!(params.sigma >= 0.0) || !std::isfinite(params.sigma)) throw Error(ErrorKind::kConfig, "sigma must be >= 0");
    GeneratedData out;
    const int nr = scn.array.num_antennas;
    out.h_true = Eigen::VectorXcd::Zero(nr);
    if (scn.mode == GenerationMode::kLifted) {
      out.x_true = lifted_matrix(scn.lifting, scn.paths);
      for (const auto& p : scn.paths) out.h_true += p.gain * ws.op.lifted_steering(LiftedAtom{p.bin, p.angle});
      out.measurement = simulate(ws.stack, ws.combiners, out.x_true, params.sigma, params.noise_seed, params.delta);
    } else {
      out.x_true = Eigen::MatrixXcd::Zero(scn.lifting.num_bins(), scn.lifting.num_harmonics());
      for (const auto& p : scn.paths) {
        const double r = p.bin >= 0 ? scn.lifting.range_grid[static_cast<std::size_t>(p.bin)] : p.range;
        out.h_true += p.gain * steering_exact(scn.array, SourceLocation{r, p.angle});
      }
      out.measurement = simulate_channel(ws.combiners, out.h_true, params.sigma, params.noise_seed, params.delta);
    }
    const double sep = 4.0 * 2.0 * kPi / scn.lifting.num_harmonics();
    for (std::size_t i = 0; i < scn.paths.size(); ++i) {
      for (std::size_t j = i + 1; j < scn.paths.size(); ++j) {
        const auto& a = scn.paths[i];
        const auto& b = scn.paths[j];
        if (a.bin == b.bin && angle_distance(a.angle, b.angle) < sep) {
          out.warnings.push_back("paths " + std::to_string(i) + " and " + std::to_string(j) +
                                 " share a bin and are closer than 4 (2 pi / N_b)");
        }
      }
    }
    return out;
  });
}

EstimateResult estimate(const Workspace& ws, const MeasurementSet& meas, const EstimateOptions& options,
                        const DualSdpSolver& solver) {
  EstimateResult res;
  if (meas.num_measurements() != ws.stack.num_measurements()) {
    throw Error(ErrorKind::kConfig,
                "measurement length " + std::to_string(meas.num_measurements()) + " does not match M = " +
                    std::to_string(ws.stack.num_measurements()),
                "assemble");
  }
  res.problem = run_stage("assemble", [&] { return assemble(ws.stack, meas); });

  auto t0 = Clock::now();
  res.solution = run_stage("solve", [&] { return solver.solve(res.problem, options.solver); });
  res.feasibility = check_feasibility(res.problem, res.solution);
  res.seconds_solve = seconds_since(t0);

  t0 = Clock::now();
  res.support = run_stage("localize", [&] {
    if (options.margin_grid > 0) res.margin = dual_feasibility_margin(res.solution, ws.stack, options.margin_grid);
    return localize(res.solution, ws.stack, options.localize, &res.samples);
  });
  res.seconds_localize = seconds_since(t0);

  res.gains = run_stage("gains", [&] {
    if (res.support.entries.empty()) return GainEstimate{};
    const Eigen::MatrixXcd g = build_gain_matrix(ws.stack, res.support, ws.op.lifting());
    return solve_gains(g, meas.whitened);
  });
  return res;
}

std::vector<int> assign_min_cost(const Eigen::MatrixXd& cost) {
  const int rows = static_cast<int>(cost.rows());
  const int cols = static_cast<int>(cost.cols());
  if (rows == 0) return {};
  if (cols == 0) return std::vector<int>(static_cast<std::size_t>(rows), -1);
  if (rows > cols) {
    const std::vector<int> t = assign_min_cost(cost.transpose());
    std::vector<int> out(static_cast<std::size_t>(rows), -1);
    for (int c = 0; c < cols; ++c) {
      if (t[static_cast<std::size_t>(c)] >= 0) out[static_cast<std::size_t>(t[static_cast<std::size_t>(c)])] = c;
    }
    return out;
  }
  // Potentials-based Hungarian method, 1-based with a virtual column 0.
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(static_cast<std::size_t>(rows + 1), 0.0), v(static_cast<std::size_t>(cols + 1), 0.0);
  std::vector<int> p(static_cast<std::size_t>(cols + 1), 0), way(static_cast<std::size_t>(cols + 1), 0);
  for (int i = 1; i <= rows; ++i) {
    p[0] = i;
    int j0 = 0;
    std::vector<double> minv(static_cast<std::size_t>(cols + 1), inf);
    std::vector<char> used(static_cast<std::size_t>(cols + 1), 0);
    do {
      used[static_cast<std::size_t>(j0)] = 1;
      const int i0 = p[static_cast<std::size_t>(j0)];
      double delta = inf;
      int j1 = 0;
      for (int j = 1; j <= cols; ++j) {
        if (used[static_cast<std::size_t>(j)]) continue;
        const double cur = cost(i0 - 1, j - 1) - u[static_cast<std::size_t>(i0)] - v[static_cast<std::size_t>(j)];
        if (cur < minv[static_cast<std::size_t>(j)]) {
          minv[static_cast<std::size_t>(j)] = cur;
          way[static_cast<std::size_t>(j)] = j0;
        }
        if (minv[static_cast<std::size_t>(j)] < delta) {
          delta = minv[static_cast<std::size_t>(j)];
          j1 = j;
        }
      }
      for (int j = 0; j <= cols; ++j) {
        if (used[static_cast<std::size_t>(j)]) {
          u[static_cast<std::size_t>(p[static_cast<std::size_t>(j)])] += delta;
          v[static_cast<std::size_t>(j)] -= delta;
        } else {
          minv[static_cast<std::size_t>(j)] -= delta;
        }
      }
      j0 = j1;
    } while (p[static_cast<std::size_t>(j0)] != 0);
    do {
      const int j1 = way[static_cast<std::size_t>(j0)];
      p[static_cast<std::size_t>(j0)] = p[static_cast<std::size_t>(j1)];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<int> out(static_cast<std::size_t>(rows), -1);
  for (int j = 1; j <= cols; ++j) {
    if (p[static_cast<std::size_t>(j)] > 0) out[static_cast<std::size_t>(p[static_cast<std::size_t>(j)] - 1)] = j - 1;
  }
  return out;
}

RecoveryMetrics metrics(const std::vector<PathSpec>& truth, const SupportEstimate& support, const GainEstimate& gains) {
  RecoveryMetrics m;
  m.num_true = static_cast<int>(truth.size());
  m.num_estimated = support.model_order();
  Eigen::MatrixXd cost(m.num_true, m.num_estimated);
  for (int t = 0; t < m.num_true; ++t) {
    for (int e = 0; e < m.num_estimated; ++e) {
      const auto& tp = truth[static_cast<std::size_t>(t)];
      const auto& ep = support.entries[static_cast<std::size_t>(e)];
      cost(t, e) = angle_distance(tp.angle, ep.angle) + (tp.bin == ep.bin ? 0.0 : kBinPenalty);
    }
  }
  const std::vector<int> assign = assign_min_cost(cost);
  const bool have_gains = gains.gains.size() == m.num_estimated;
  for (int t = 0; t < m.num_true; ++t) {
    const auto& tp = truth[static_cast<std::size_t>(t)];
    m.true_atomic_sum += std::abs(tp.gain);
    PathMatch pm;
    pm.truth = t;
    pm.estimate = assign[static_cast<std::size_t>(t)];
    if (pm.estimate < 0) {
      ++m.misses;
      m.all_bins_hit = false;
      pm.angle_error = std::numeric_limits<double>::infinity();
      pm.gain_rel_error = std::numeric_limits<double>::infinity();
    } else {
      const auto& ep = support.entries[static_cast<std::size_t>(pm.estimate)];
      pm.angle_error = angle_distance(tp.angle, ep.angle);
      pm.bin_hit = tp.bin == ep.bin;
      m.all_bins_hit = m.all_bins_hit && pm.bin_hit;
      pm.gain_rel_error = have_gains ? std::abs(gains.gains[pm.estimate] - tp.gain) / std::abs(tp.gain)
                                     : std::numeric_limits<double>::infinity();
      m.max_angle_error = std::max(m.max_angle_error, pm.angle_error);
      m.max_gain_rel_error = std::max(m.max_gain_rel_error, pm.gain_rel_error);
    }
    m.matches.push_back(pm);
  }
  if (m.misses > 0) {
    m.max_angle_error = std::numeric_limits<double>::infinity();
    m.max_gain_rel_error = std::numeric_limits<double>::infinity();
  }
  m.false_alarms = m.num_estimated - (m.num_true - m.misses);
  if (have_gains) m.estimated_atomic_sum = gains.gains.cwiseAbs().sum();
  return m;
}

namespace {

json finite_or_null(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

}  // namespace

json RecoveryReport::to_json() const {
  json matches = json::array();
  for (const auto& pm : metrics.matches) {
    matches.push_back({{"truth", pm.truth},
                       {"estimate", pm.estimate},
                       {"angle_error_rad", finite_or_null(pm.angle_error)},
                       {"bin_hit", pm.bin_hit},
                       {"gain_rel_error", finite_or_null(pm.gain_rel_error)}});
  }
  const auto& sol = estimate.solution;
  return json{{"schema_version", kSchemaVersion},
              {"num_true", metrics.num_true},
              {"num_estimated", metrics.num_estimated},
              {"misses", metrics.misses},
              {"false_alarms", metrics.false_alarms},
              {"all_bins_hit", metrics.all_bins_hit},
              {"max_angle_error_rad", finite_or_null(metrics.max_angle_error)},
              {"max_gain_rel_error", finite_or_null(metrics.max_gain_rel_error)},
              {"true_atomic_sum", metrics.true_atomic_sum},
              {"estimated_atomic_sum", metrics.estimated_atomic_sum},
              {"matches", std::move(matches)},
              {"solver",
               {{"iterations", sol.iterations},
                {"converged", sol.converged},
                {"objective", sol.objective},
                {"primal_residual", sol.primal_residual},
                {"dual_residual", sol.dual_residual},
                {"restoration_shift", sol.restoration_shift},
                {"min_block_eigenvalue", estimate.feasibility.min_block_eigenvalue},
                {"max_equality_violation", estimate.feasibility.max_equality_violation},
                {"dual_margin", estimate.margin}}},
              {"gain_condition", estimate.gains.condition},
              {"gain_residual", estimate.gains.residual_norm},
              {"warnings", [&] {
                 std::vector<std::string> w = data.warnings;
                 w.insert(w.end(), estimate.support.warnings.begin(), estimate.support.warnings.end());
                 return w;
               }()},
              {"timing_s",
               {{"solve", estimate.seconds_solve}, {"localize", estimate.seconds_localize}, {"total", seconds_total}}}};
}

RecoveryReport run_pipeline(const Scenario& scn, const MeasurementParams& params, const EstimateOptions& options) {
  const auto t0 = Clock::now();
  RecoveryReport rep;
  const Workspace ws = make_workspace(scn.array, scn.lifting, params);
  rep.truth = scn.paths;
  rep.data = generate(ws, scn, params);
  rep.estimate = estimate(ws, rep.data.measurement, options);
  rep.metrics = metrics(scn.paths, rep.estimate.support, rep.estimate.gains);
  rep.seconds_total = seconds_since(t0);
  return rep;
}

}  // namespace nflift
