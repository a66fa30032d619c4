// SPDX-License-Identifier: Apache-2.0
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <sys/wait.h>
#include <unistd.h>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "nflift/json_io.hpp"
#include "nflift_app/commands.hpp"

namespace {

using namespace nflift;
using namespace nflift::app;
namespace fs = std::filesystem;
using nlohmann::json;

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("nflift_cli_" + name + "_" + std::to_string(::getpid()));
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

fs::path write_config(const fs::path& dir, const json& j) {
  const fs::path p = dir / "in.json";
  std::ofstream(p) << j.dump(2);
  return p;
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(NFLIFT_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

CommandContext context(const std::string& command, RunConfig cfg, const fs::path& out) {
  CommandContext ctx;
  ctx.command = command;
  ctx.config = std::move(cfg);
  ctx.out_dir = out;
  return ctx;
}

TEST(RunConfig, DefaultsRoundTrip) {
  const RunConfig c;
  const json j = c.to_json();
  EXPECT_EQ(j.at("schema_version"), kSchemaVersion);
  EXPECT_EQ(RunConfig::from_json(j).to_json(), j);
  for (const auto& name : preset_names()) {
    const json pj = preset(name).to_json();
    EXPECT_EQ(RunConfig::from_json(pj).to_json(), pj) << name;
  }
}

TEST(RunConfig, PaperPreset) {
  const RunConfig c = preset("paper-sec4");
  EXPECT_EQ(c.num_antennas, 64);
  EXPECT_EQ(c.carrier_hz, 100e9);
  EXPECT_EQ(c.i1, 5);
  EXPECT_EQ(c.i2, 1);
  EXPECT_EQ(c.draw.num_paths, 3);
  const auto l = c.lifting();
  ASSERT_EQ(l.num_bins(), 10);
  EXPECT_DOUBLE_EQ(l.range_grid.front(), 0.1);
  EXPECT_DOUBLE_EQ(l.range_grid.back(), 6.0);
  EXPECT_NEAR(l.range_grid[1] - l.range_grid[0], 5.9 / 9, 1e-12);
  EXPECT_NEAR(c.array().spacing, c.array().wavelength / 2, 1e-18);
  EXPECT_THROW(preset("nope"), Error);
}

TEST(RunConfig, StrictParsing) {
  json j = RunConfig{}.to_json();
  j["surprise"] = true;
  EXPECT_THROW(RunConfig::from_json(j), Error);
  j = RunConfig{}.to_json();
  j["array"]["num_antenas"] = 8;
  EXPECT_THROW(RunConfig::from_json(j), Error);
  j = RunConfig{}.to_json();
  j.erase("schema_version");
  EXPECT_THROW(RunConfig::from_json(j), Error);
  j = RunConfig{}.to_json();
  j["schema_version"] = 2;
  EXPECT_THROW(RunConfig::from_json(j), Error);
  j = RunConfig{}.to_json();
  j["array"]["num_antennas"] = "many";
  try {
    RunConfig::from_json(j);
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kConfig);
  }
  j = RunConfig{}.to_json();
  j["lifting"]["grid"] = "log";
  EXPECT_THROW(RunConfig::from_json(j), Error);
  j = RunConfig{}.to_json();
  j["lifting"]["range_max_m"] = 0.05;
  EXPECT_THROW(RunConfig::from_json(j), Error);
}

TEST(RunConfig, SeedOverrides) {
  RunConfig c;
  apply_seed_override(c, "scenario=17");
  apply_seed_override(c, "combiner=3");
  apply_seed_override(c, "noise=0");
  EXPECT_EQ(c.scenario_seed, 17u);
  EXPECT_EQ(c.measurement.combiner_seed, 3u);
  EXPECT_EQ(c.measurement.noise_seed, 0u);
  EXPECT_THROW(apply_seed_override(c, "scenario"), Error);
  EXPECT_THROW(apply_seed_override(c, "weather=1"), Error);
  EXPECT_THROW(apply_seed_override(c, "noise=-4"), Error);
  EXPECT_THROW(apply_seed_override(c, "noise=4x"), Error);
}

TEST(RunConfig, FileMergesOverPreset) {
  const auto dir = scratch("merge");
  const auto path = write_config(dir, {{"schema_version", 1},
                                       {"measurement", {{"num_slots", 4}}},
                                       {"lifting", {{"grid", "explicit"}, {"ranges_m", {0.5, 1.0}}}}});
  const RunConfig c = resolve_config(std::string("paper-sec4"), path, {"scenario=5"});
  EXPECT_EQ(c.num_antennas, 64);
  EXPECT_EQ(c.measurement.num_rf, 4);
  EXPECT_EQ(c.measurement.num_slots, 4);
  EXPECT_EQ(c.lifting().range_grid, std::vector<double>({0.5, 1.0}));
  EXPECT_EQ(c.scenario_seed, 5u);
  EXPECT_THROW(resolve_config(std::nullopt, dir / "missing.json", {}), Error);
  fs::remove_all(dir);
}

TEST(ValidateLifting, FirstAntennaRowsAreZero) {
  RunConfig c = preset("paper-sec4");
  const auto rows = lifting_sweep(c);
  ASSERT_EQ(rows.size(), 10u * 4u * 64u);
  bool saw_51 = false;
  for (const auto& r : rows) {
    saw_51 = saw_51 || (r.i1 == 5 && r.i2 == 1);
    if (r.antenna == 0) {
      EXPECT_EQ(r.abs_delta_fresnel, 0.0);
      EXPECT_EQ(r.abs_delta_tail, 0.0);
      EXPECT_EQ(r.tail_bound, 0.0);
    }
  }
  EXPECT_TRUE(saw_51);
}

TEST(ValidateLifting, ConvergedOrdersMakeTailNegligible) {
  RunConfig c;
  c.num_antennas = 16;
  c.validate.ranges = {0.3, 2.0};
  c.validate.i1 = {std::nullopt};
  c.validate.i2 = {std::nullopt};
  for (const auto& r : lifting_sweep(c)) EXPECT_LE(r.abs_delta_tail, 1e-8) << "r=" << r.range << " n=" << r.antenna;
}

TEST(ValidateLifting, CsvLayout) {
  const auto dir = scratch("sweep");
  RunConfig c;
  c.num_antennas = 4;
  c.grid = GridSpec{GridSpacing::kUniform, 1.0, 2.0, 2, {}};
  const auto res = cmd_validate_lifting(context("validate-lifting", c, dir));
  EXPECT_EQ(res.exit_code, kExitOk);
  const std::string csv = slurp(dir / "lifting_errors.csv");
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "r,n,I1,I2,abs_delta_fresnel,abs_delta_tail_actual,tail_bound");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 1 + 2 * 4);
  EXPECT_TRUE(fs::exists(dir / "config.json"));
  fs::remove_all(dir);
}

TEST(Simulate, DeterministicAndRoundTrips) {
  const auto a = scratch("sim_a");
  const auto b = scratch("sim_b");
  const RunConfig c = preset("exact-recovery");
  cmd_simulate(context("simulate", c, a));
  cmd_simulate(context("simulate", c, b));
  EXPECT_EQ(slurp(a / "measurement.json"), slurp(b / "measurement.json"));
  EXPECT_EQ(slurp(a / "truth.json"), slurp(b / "truth.json"));
  const auto ms = MeasurementSet::from_json(read_json_file(a / "measurement.json"));
  EXPECT_EQ(ms.to_json(), read_json_file(a / "measurement.json"));
  EXPECT_EQ(ms.sigma, 0.0);
  // sigma = 0: y' equals the noiseless forward model exactly.
  const Scenario scn = c.scenario();
  const Workspace ws = make_workspace(scn.array, scn.lifting, c.measurement);
  EXPECT_EQ((ms.whitened - ws.stack.forward(lifted_matrix(scn.lifting, scn.paths))).norm(), 0.0);
  fs::remove_all(a);
  fs::remove_all(b);
}

TEST(Estimate, RecoversStoredMeasurement) {
  const auto dir = scratch("est");
  const RunConfig c = preset("exact-recovery");
  cmd_simulate(context("simulate", c, dir));
  const auto res = cmd_estimate(context("estimate", c, dir));
  EXPECT_EQ(res.exit_code, kExitOk);
  const json support = read_json_file(dir / "support.json");
  const json truth = read_json_file(dir / "truth.json");
  ASSERT_EQ(support.at("model_order"), truth.at("paths").size());
  const json gains = read_json_file(dir / "gains.json");
  for (const auto& t : truth.at("paths")) {
    bool found = false;
    for (const auto& e : gains.at("paths")) {
      if (e.at("bin") != t.at("bin")) continue;
      found = true;
      EXPECT_NEAR(e.at("angle_rad").get<double>(), t.at("angle_rad").get<double>(), 1e-3);
      const double dre = e.at("gain")[0].get<double>() - t.at("gain")[0].get<double>();
      const double dim = e.at("gain")[1].get<double>() - t.at("gain")[1].get<double>();
      EXPECT_LE(std::hypot(dre, dim), 1e-4 * std::hypot(t.at("gain")[0].get<double>(), t.at("gain")[1].get<double>()));
    }
    EXPECT_TRUE(found);
  }
  for (const char* f : {"dual_poly.csv", "amplitudes.csv", "solver_trace.json", "estimate.json", "config.json"}) {
    EXPECT_TRUE(fs::exists(dir / f)) << f;
  }
  // Rerun determinism.
  const std::string first = slurp(dir / "gains.json");
  cmd_estimate(context("estimate", c, dir));
  EXPECT_EQ(slurp(dir / "gains.json"), first);
  fs::remove_all(dir);
}

TEST(Estimate, MissingOrEmptyMeasurement) {
  const auto dir = scratch("est_missing");
  RunConfig c = preset("exact-recovery");
  try {
    cmd_estimate(context("estimate", c, dir));
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_EQ(exit_code_for(e.kind()), kExitIo);
  }
  std::ofstream(dir / "measurement.json")
      << json{{"schema_version", 1}, {"M", 0}, {"sigma", 0.0}, {"eta", 0.0}, {"seed", 0}, {"y_whitened", json::array()}}
             .dump();
  try {
    cmd_estimate(context("estimate", c, dir));
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_EQ(exit_code_for(e.kind()), kExitConfig);
  }
  fs::remove_all(dir);
}

TEST(Experiment, NoPathsGivesEmptySupport) {
  const auto dir = scratch("exp_empty");
  RunConfig c = preset("exact-recovery");
  c.draw.num_paths = 0;
  const auto res = cmd_experiment(context("experiment", c, dir));
  EXPECT_EQ(res.exit_code, kExitOk);
  EXPECT_EQ(read_json_file(dir / "support.json").at("model_order"), 0);
  EXPECT_EQ(read_json_file(dir / "report.json").at("num_estimated"), 0);
  fs::remove_all(dir);
}

TEST(Experiment, SmallExactRecoveryPresetMeetsThresholds) {
  const auto dir = scratch("exp_exact");
  const auto res = cmd_experiment(context("experiment", preset("exact-recovery"), dir));
  EXPECT_EQ(res.exit_code, kExitOk);
  const json r = read_json_file(dir / "report.json");
  EXPECT_TRUE(r.at("exact_recovery").get<bool>());
  EXPECT_TRUE(r.at("all_bins_hit").get<bool>());
  EXPECT_LE(r.at("max_angle_error_rad").get<double>(), 1e-3);
  EXPECT_LE(r.at("max_gain_rel_error").get<double>(), 1e-4);
  const std::string amps = slurp(dir / "amplitudes.csv");
  EXPECT_EQ(amps.substr(0, amps.find('\n')), "kind,bin,range_m,angle_rad,gain_re,gain_im,gain_abs");
  fs::remove_all(dir);
}

TEST(Experiment, SnapshotReproducesRun) {
  const auto a = scratch("snap_a");
  const auto b = scratch("snap_b");
  RunConfig c = preset("exact-recovery");
  c.scenario_seed = 4;
  cmd_experiment(context("experiment", c, a));
  const RunConfig again = resolve_config(std::nullopt, a / "config.json", {});
  cmd_experiment(context("experiment", again, b));
  EXPECT_EQ(slurp(a / "gains.json"), slurp(b / "gains.json"));
  EXPECT_EQ(slurp(a / "config.json"), slurp(b / "config.json"));
  fs::remove_all(a);
  fs::remove_all(b);
}

TEST(ExitCodes, Mapping) {
  EXPECT_EQ(exit_code_for(ErrorKind::kConfig), kExitConfig);
  EXPECT_EQ(exit_code_for(ErrorKind::kSolver), kExitSolver);
  EXPECT_EQ(exit_code_for(ErrorKind::kIo), kExitIo);
  EXPECT_NE(kExitConfig, kExitSolver);
  EXPECT_NE(kExitSolver, kExitIo);
}

TEST(Binary, ExitCodes) {
  const auto dir = scratch("bin");
  const std::string out = " --out " + (dir / "o").string();
  EXPECT_EQ(run_cli("validate-lifting --preset exact-recovery" + out), kExitOk);
  EXPECT_EQ(run_cli("frobnicate"), kExitUsage);
  const auto bad = write_config(dir, {{"schema_version", 1}, {"bogus", 1}});
  EXPECT_EQ(run_cli("simulate --config " + bad.string() + out), kExitConfig);
  EXPECT_EQ(run_cli("simulate --preset exact-recovery --seed-override wind=2" + out), kExitConfig);
  EXPECT_EQ(run_cli("estimate --preset exact-recovery --out " + (dir / "empty").string()), kExitIo);
  // Output path blocked by a regular file.
  std::ofstream(dir / "blocker") << "x";
  EXPECT_EQ(run_cli("simulate --preset exact-recovery --out " + (dir / "blocker").string()), kExitIo);
  // One iteration cannot converge.
  const auto short_solve = write_config(dir, {{"schema_version", 1}, {"solver", {{"max_iter", 1}}}});
  EXPECT_EQ(run_cli("experiment --preset exact-recovery --config " + short_solve.string() + out), kExitSolver);
  fs::remove_all(dir);
}

}  // namespace
