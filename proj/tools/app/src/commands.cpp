// SPDX-License-Identifier: Apache-2.0
#include "nflift_app/commands.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>

#include "nflift/json_io.hpp"

namespace nflift::app {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw Error(ErrorKind::kIo, "cannot create output directory " + dir.string());
}

template <class F>
void write_text(const fs::path& path, F&& body) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::kIo, "cannot write " + path.string());
  body(out);
  out.flush();
  if (!out) throw Error(ErrorKind::kIo, "write failed for " + path.string());
}

class Writer {
 public:
  Writer(const CommandContext& ctx, CommandResult& res) : ctx_(ctx), res_(res) { ensure_dir(ctx.out_dir); }

  void json_file(const std::string& name, const json& j) {
    write_json_file(ctx_.out_dir / name, j);
    res_.files.push_back(name);
  }
  template <class F>
  void text_file(const std::string& name, F&& body) {
    write_text(ctx_.out_dir / name, std::forward<F>(body));
    res_.files.push_back(name);
  }
  void snapshot() {
    json j = ctx_.config.to_json();
    j["command"] = ctx_.command;
    json_file("config.json", j);
  }

 private:
  const CommandContext& ctx_;
  CommandResult& res_;
};

void log(const CommandContext& ctx, const std::string& line) {
  if (ctx.log && ctx.config.verbosity > 0) *ctx.log << line << '\n';
}

json truth_to_json(const Scenario& scn, const GeneratedData& data, const std::vector<std::string>& draw_warnings) {
  std::vector<std::string> warnings = draw_warnings;
  warnings.insert(warnings.end(), data.warnings.begin(), data.warnings.end());
  return json{{"schema_version", kSchemaVersion},
              {"mode", to_string(scn.mode)},
              {"seed", scn.seed},
              {"range_grid_m", scn.lifting.range_grid},
              {"paths", scn.paths_to_json()},
              {"h_true", complex_vector_to_json(data.h_true)},
              {"warnings", warnings}};
}

void write_estimate_artifacts(Writer& w, const EstimateResult& est, const LiftingConfig& lifting,
                              const std::vector<PathSpec>& truth) {
  w.json_file("support.json", est.support.to_json());
  w.json_file("gains.json", gains_to_json(est.support, est.gains, lifting));
  w.json_file("solver_trace.json", est.solution.trace_to_json());
  w.text_file("dual_poly.csv", [&](std::ostream& o) { write_bank_csv(o, est.samples); });
  w.text_file("amplitudes.csv",
              [&](std::ostream& o) { write_amplitudes_csv(o, truth, est.support, est.gains, lifting); });
}

std::string fmt(double x) {
  std::ostringstream s;
  s << std::setprecision(3) << x;
  return s.str();
}

// Thresholds of the noiseless lifted-mode exact-recovery check.
constexpr double kExactAngleTol = 1e-3;
constexpr double kExactGainTol = 1e-4;

bool exact_recovery(const RecoveryMetrics& m) {
  return m.misses == 0 && m.false_alarms == 0 && m.all_bins_hit && m.max_angle_error <= kExactAngleTol &&
         m.max_gain_rel_error <= kExactGainTol;
}

}  // namespace

int exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kConfig:
    case ErrorKind::kDomain: return kExitConfig;
    case ErrorKind::kSolver:
    case ErrorKind::kNumerical: return kExitSolver;
    case ErrorKind::kIo: return kExitIo;
  }
  return kExitUsage;
}

std::vector<SweepRow> lifting_sweep(const RunConfig& cfg) {
  const ArrayConfig array = cfg.array();
  const LiftingConfig base = cfg.lifting();
  const std::vector<double> ranges = cfg.validate.ranges.empty() ? base.range_grid : cfg.validate.ranges;
  const std::vector<SweepOrder> i1s = cfg.validate.i1.empty() ? std::vector<SweepOrder>{base.i1} : cfg.validate.i1;
  const std::vector<SweepOrder> i2s = cfg.validate.i2.empty() ? std::vector<SweepOrder>{base.i2} : cfg.validate.i2;
  const int last = array.num_antennas - 1;

  std::vector<SweepRow> rows;
  for (double r : ranges) {
    for (const auto& o1 : i1s) {
      for (const auto& o2 : i2s) {
        LiftingConfig l;
        l.i1 = o1 ? *o1 : static_cast<int>(std::ceil(array.z1(last))) + 25;
        l.i2 = o2 ? *o2 : static_cast<int>(std::ceil(array.z2(last, r))) + 15;
        l.range_grid = {r};
        const auto report = lifting_error_report(array, l, SourceLocation{r, cfg.validate.angle});
        for (const auto& e : report) {
          rows.push_back({r, e.antenna, l.i1, l.i2, e.abs_delta_fresnel, e.abs_delta_tail, e.tail_bound});
        }
      }
    }
  }
  return rows;
}

void write_sweep_csv(std::ostream& out, const std::vector<SweepRow>& rows) {
  out << "r,n,I1,I2,abs_delta_fresnel,abs_delta_tail_actual,tail_bound\n";
  out << std::setprecision(17);
  for (const auto& r : rows) {
    out << r.range << ',' << r.antenna << ',' << r.i1 << ',' << r.i2 << ',' << r.abs_delta_fresnel << ','
        << r.abs_delta_tail << ',' << r.tail_bound << '\n';
  }
}

void write_amplitudes_csv(std::ostream& out, const std::vector<PathSpec>& truth, const SupportEstimate& support,
                          const GainEstimate& gains, const LiftingConfig& lifting) {
  out << "kind,bin,range_m,angle_rad,gain_re,gain_im,gain_abs\n";
  out << std::setprecision(17);
  for (const auto& p : truth) {
    const double r = p.bin >= 0 ? lifting.range_grid[static_cast<std::size_t>(p.bin)] : p.range;
    out << "true," << p.bin << ',' << r << ',' << p.angle << ',' << p.gain.real() << ',' << p.gain.imag() << ','
        << std::abs(p.gain) << '\n';
  }
  const bool have_gains = gains.gains.size() == support.model_order();
  for (int l = 0; l < support.model_order(); ++l) {
    const auto& e = support.entries[static_cast<std::size_t>(l)];
    const cdouble c = have_gains ? gains.gains[l] : cdouble(std::nan(""), std::nan(""));
    out << "estimated," << e.bin << ',' << lifting.range_grid[static_cast<std::size_t>(e.bin)] << ',' << e.angle << ','
        << c.real() << ',' << c.imag() << ',' << std::abs(c) << '\n';
  }
}

CommandResult cmd_validate_lifting(const CommandContext& ctx) {
  CommandResult res;
  Writer w(ctx, res);
  w.snapshot();
  const auto rows = lifting_sweep(ctx.config);
  w.text_file("lifting_errors.csv", [&](std::ostream& o) { write_sweep_csv(o, rows); });
  double worst_tail = 0.0, worst_fresnel = 0.0;
  for (const auto& r : rows) {
    worst_tail = std::max(worst_tail, r.abs_delta_tail);
    worst_fresnel = std::max(worst_fresnel, r.abs_delta_fresnel);
  }
  res.summary = std::to_string(rows.size()) + " rows; max |delta_fresnel| = " + fmt(worst_fresnel) +
                ", max |delta_tail| = " + fmt(worst_tail);
  return res;
}

CommandResult cmd_simulate(const CommandContext& ctx) {
  CommandResult res;
  Writer w(ctx, res);
  w.snapshot();
  std::vector<std::string> warnings;
  const Scenario scn = ctx.config.scenario(&warnings);
  const Workspace ws = make_workspace(scn.array, scn.lifting, ctx.config.measurement);
  const GeneratedData data = generate(ws, scn, ctx.config.measurement);
  w.json_file("measurement.json", data.measurement.to_json());
  w.json_file("truth.json", truth_to_json(scn, data, warnings));
  res.summary = std::to_string(scn.paths.size()) + " paths, M = " + std::to_string(data.measurement.num_measurements()) +
                ", eta = " + fmt(data.measurement.eta);
  return res;
}

CommandResult cmd_estimate(const CommandContext& ctx) {
  CommandResult res;
  Writer w(ctx, res);
  w.snapshot();
  const RunConfig& cfg = ctx.config;
  const fs::path meas_path = cfg.measurement_file.empty() ? ctx.out_dir / "measurement.json" : fs::path(cfg.measurement_file);
  if (!fs::exists(meas_path)) throw Error(ErrorKind::kIo, "measurement file " + meas_path.string() + " not found");
  const MeasurementSet meas = MeasurementSet::from_json(read_json_file(meas_path));
  const LiftingConfig lifting = cfg.lifting();
  const Workspace ws = make_workspace(cfg.array(), lifting, cfg.measurement);
  log(ctx, "solving: M = " + std::to_string(meas.num_measurements()) + ", N_d = " + std::to_string(lifting.num_bins()) +
               ", N_b = " + std::to_string(lifting.num_harmonics()));
  const EstimateResult est = estimate(ws, meas, cfg.estimate);

  std::vector<PathSpec> truth;
  const fs::path truth_path = meas_path.parent_path() / "truth.json";
  if (fs::exists(truth_path)) {
    for (const auto& p : read_json_file(truth_path).at("paths")) {
      const auto g = p.at("gain").get<std::vector<double>>();
      truth.push_back({p.at("bin").get<int>(), p.at("range_m").get<double>(), p.at("angle_rad").get<double>(),
                       cdouble(g.at(0), g.at(1))});
    }
  }
  write_estimate_artifacts(w, est, lifting, truth);
  w.json_file("estimate.json", json{{"schema_version", kSchemaVersion},
                                    {"model_order", est.support.model_order()},
                                    {"converged", est.solution.converged},
                                    {"iterations", est.solution.iterations},
                                    {"objective", est.solution.objective},
                                    {"dual_margin", est.margin},
                                    {"min_block_eigenvalue", est.feasibility.min_block_eigenvalue},
                                    {"max_equality_violation", est.feasibility.max_equality_violation},
                                    {"seconds_solve", est.seconds_solve},
                                    {"seconds_localize", est.seconds_localize}});
  res.summary = std::to_string(est.support.model_order()) + " paths detected, " +
                std::to_string(est.solution.iterations) + " iterations, margin " + fmt(est.margin);
  if (!est.solution.converged) {
    res.exit_code = kExitSolver;
    res.summary += " (solver did not converge; primal " + fmt(est.solution.primal_residual) + ", dual " +
                   fmt(est.solution.dual_residual) + ")";
  }
  return res;
}

CommandResult cmd_experiment(const CommandContext& ctx) {
  CommandResult res;
  Writer w(ctx, res);
  w.snapshot();
  const RunConfig& base = ctx.config;

  json trials = json::array();
  int exact = 0;
  bool all_converged = true;
  for (int t = 0; t < base.trials; ++t) {
    RunConfig cfg = base;
    cfg.scenario_seed += static_cast<std::uint64_t>(t);
    cfg.measurement.combiner_seed += static_cast<std::uint64_t>(t);
    cfg.measurement.noise_seed += static_cast<std::uint64_t>(t);
    std::vector<std::string> warnings;
    const Scenario scn = cfg.scenario(&warnings);
    RecoveryReport rep;
    try {
      rep = run_pipeline(scn, cfg.measurement, cfg.estimate);
    } catch (const Error& e) {
      // A single run reports the failure directly; a sweep records it and moves on.
      if (base.trials == 1 || e.kind() == ErrorKind::kConfig || e.kind() == ErrorKind::kIo) throw;
      log(ctx, "trial " + std::to_string(t) + ": " + e.what());
      all_converged = false;
      trials.push_back({{"trial", t},
                        {"seeds", {{"scenario", cfg.scenario_seed}, {"combiner", cfg.measurement.combiner_seed},
                                   {"noise", cfg.measurement.noise_seed}}},
                        {"exact_recovery", false},
                        {"error", {{"kind", to_string(e.kind())}, {"stage", e.stage()}, {"message", e.what()}}}});
      continue;
    }
    rep.data.warnings.insert(rep.data.warnings.begin(), warnings.begin(), warnings.end());
    const bool ok = exact_recovery(rep.metrics);
    exact += ok ? 1 : 0;
    all_converged = all_converged && rep.estimate.solution.converged;
    log(ctx, "trial " + std::to_string(t) + ": L_hat = " + std::to_string(rep.metrics.num_estimated) + ", max dtheta = " +
                 fmt(rep.metrics.max_angle_error) + ", max gain err = " + fmt(rep.metrics.max_gain_rel_error) + ", " +
                 fmt(rep.seconds_total) + " s");
    json summary = rep.to_json();
    summary["trial"] = t;
    summary["seeds"] = {{"scenario", cfg.scenario_seed},
                        {"combiner", cfg.measurement.combiner_seed},
                        {"noise", cfg.measurement.noise_seed}};
    summary["exact_recovery"] = ok;
    if (t == 0) {
      w.json_file("measurement.json", rep.data.measurement.to_json());
      w.json_file("truth.json", truth_to_json(scn, rep.data, warnings));
      write_estimate_artifacts(w, rep.estimate, scn.lifting, scn.paths);
      w.json_file("report.json", summary);
    }
    trials.push_back(std::move(summary));
  }
  if (base.trials > 1) {
    w.json_file("trials.json", json{{"schema_version", kSchemaVersion},
                                    {"trials", base.trials},
                                    {"exact_recoveries", exact},
                                    {"angle_tol_rad", kExactAngleTol},
                                    {"gain_rel_tol", kExactGainTol},
                                    {"runs", std::move(trials)}});
  }
  res.summary = std::to_string(exact) + "/" + std::to_string(base.trials) + " trials recovered exactly (" +
                to_string(base.mode) + " mode)";
  if (!all_converged) {
    res.exit_code = kExitSolver;
    res.summary += "; at least one trial failed or did not converge";
  }
  return res;
}

CommandResult run_command(const CommandContext& ctx) {
  if (ctx.command == "validate-lifting") return cmd_validate_lifting(ctx);
  if (ctx.command == "simulate") return cmd_simulate(ctx);
  if (ctx.command == "estimate") return cmd_estimate(ctx);
  if (ctx.command == "experiment") return cmd_experiment(ctx);
  throw Error(ErrorKind::kConfig, "unknown command '" + ctx.command + "'");
}

}  // namespace nflift::app
