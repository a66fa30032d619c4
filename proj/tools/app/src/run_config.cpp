// SPDX-License-Identifier: Apache-2.0
#include "nflift_app/run_config.hpp"

#include <cmath>

#include "nflift/error.hpp"
#include "nflift/json_io.hpp"

namespace nflift::app {

using nlohmann::json;

namespace {

const char* to_string(GridSpacing s) {
  switch (s) {
    case GridSpacing::kUniform: return "uniform";
    case GridSpacing::kInverse: return "inverse";
    case GridSpacing::kExplicit: return "explicit";
  }
  return "uniform";
}

GridSpacing spacing_from_string(const std::string& s) {
  if (s == "uniform") return GridSpacing::kUniform;
  if (s == "inverse") return GridSpacing::kInverse;
  if (s == "explicit") return GridSpacing::kExplicit;
  throw Error(ErrorKind::kConfig, "lifting.grid: expected uniform, inverse or explicit, got '" + s + "'");
}

json order_to_json(const SweepOrder& o) { return o ? json(*o) : json("converged"); }

SweepOrder order_from_json(const json& j) {
  if (j.is_string()) {
    if (j.get<std::string>() != "converged") throw Error(ErrorKind::kConfig, "validate: order must be an integer or \"converged\"");
    return std::nullopt;
  }
  const int v = j.get<int>();
  if (v < 0) throw Error(ErrorKind::kConfig, "validate: truncation orders must be >= 0");
  return v;
}

json path_to_json(const PathSpec& p) {
  return json{{"bin", p.bin}, {"range_m", p.range}, {"angle_rad", p.angle}, {"gain", {p.gain.real(), p.gain.imag()}}};
}

PathSpec path_from_json(const json& j) {
  reject_unknown_keys(j, {"bin", "range_m", "angle_rad", "gain"}, "scenario.paths[]");
  PathSpec p;
  p.bin = j.value("bin", -1);
  p.range = j.value("range_m", 0.0);
  p.angle = j.at("angle_rad").get<double>();
  const auto g = j.at("gain").get<std::vector<double>>();
  if (g.size() != 2) throw Error(ErrorKind::kConfig, "scenario.paths[].gain must be [re, im]");
  p.gain = {g[0], g[1]};
  return p;
}

RunConfig parse(const json& j) {
  reject_unknown_keys(j, {"schema_version", "array", "lifting", "scenario", "measurement", "seeds", "solver", "localize",
                          "validate", "estimate", "experiment", "verbosity", "command"},
                      "config");
  check_schema_version(j, "config");
  RunConfig c;

  if (j.contains("array")) {
    const json& a = j.at("array");
    reject_unknown_keys(a, {"num_antennas", "carrier_hz", "spacing_wavelengths"}, "array");
    c.num_antennas = a.value("num_antennas", c.num_antennas);
    c.carrier_hz = a.value("carrier_hz", c.carrier_hz);
    c.spacing_wavelengths = a.value("spacing_wavelengths", c.spacing_wavelengths);
  }
  if (j.contains("lifting")) {
    const json& l = j.at("lifting");
    reject_unknown_keys(l, {"i1", "i2", "grid", "range_min_m", "range_max_m", "num_bins", "ranges_m"}, "lifting");
    c.i1 = l.value("i1", c.i1);
    c.i2 = l.value("i2", c.i2);
    c.grid.spacing = spacing_from_string(l.value("grid", std::string(to_string(c.grid.spacing))));
    c.grid.range_min = l.value("range_min_m", c.grid.range_min);
    c.grid.range_max = l.value("range_max_m", c.grid.range_max);
    c.grid.num_bins = l.value("num_bins", c.grid.num_bins);
    if (l.contains("ranges_m")) c.grid.ranges = l.at("ranges_m").get<std::vector<double>>();
    if (c.grid.spacing == GridSpacing::kExplicit && c.grid.ranges.empty()) {
      throw Error(ErrorKind::kConfig, "lifting: grid \"explicit\" needs ranges_m");
    }
    if (c.grid.spacing != GridSpacing::kExplicit && !c.grid.ranges.empty()) {
      throw Error(ErrorKind::kConfig, "lifting: ranges_m is only used with grid \"explicit\"");
    }
  }
  if (j.contains("scenario")) {
    const json& s = j.at("scenario");
    reject_unknown_keys(s, {"mode", "num_paths", "min_separation_rad", "cross_bin_separation_rad", "angle_margin_rad",
                            "distinct_bins", "angle_grid", "max_attempts", "paths"},
                        "scenario");
    c.mode = generation_mode_from_string(s.value("mode", std::string(nflift::to_string(c.mode))));
    c.draw.num_paths = s.value("num_paths", c.draw.num_paths);
    c.draw.min_separation = s.value("min_separation_rad", c.draw.min_separation);
    c.draw.cross_bin_separation = s.value("cross_bin_separation_rad", c.draw.cross_bin_separation);
    c.draw.angle_margin = s.value("angle_margin_rad", c.draw.angle_margin);
    c.draw.distinct_bins = s.value("distinct_bins", c.draw.distinct_bins);
    c.draw.angle_grid = s.value("angle_grid", c.draw.angle_grid);
    c.draw.max_attempts = s.value("max_attempts", c.draw.max_attempts);
    if (s.contains("paths")) {
      for (const auto& p : s.at("paths")) c.paths.push_back(path_from_json(p));
      if (!s.contains("num_paths")) c.draw.num_paths = static_cast<int>(c.paths.size());
    }
    if (c.draw.num_paths < 0) throw Error(ErrorKind::kConfig, "scenario.num_paths must be >= 0");
    if (!c.paths.empty() && c.draw.num_paths != static_cast<int>(c.paths.size())) {
      throw Error(ErrorKind::kConfig, "scenario: num_paths disagrees with the explicit path list");
    }
  }
  if (j.contains("measurement")) {
    const json& m = j.at("measurement");
    reject_unknown_keys(m, {"num_rf", "num_slots", "sigma", "delta"}, "measurement");
    c.measurement.num_rf = m.value("num_rf", c.measurement.num_rf);
    c.measurement.num_slots = m.value("num_slots", c.measurement.num_slots);
    c.measurement.sigma = m.value("sigma", c.measurement.sigma);
    c.measurement.delta = m.value("delta", c.measurement.delta);
    if (c.measurement.num_rf < 1 || c.measurement.num_slots < 1) {
      throw Error(ErrorKind::kConfig, "measurement: num_rf and num_slots must be >= 1");
    }
    if (!(c.measurement.sigma >= 0.0)) throw Error(ErrorKind::kConfig, "measurement.sigma must be >= 0");
    if (!(c.measurement.delta > 0.0 && c.measurement.delta < 1.0)) {
      throw Error(ErrorKind::kConfig, "measurement.delta must lie in (0, 1)");
    }
  }
  if (j.contains("seeds")) {
    const json& s = j.at("seeds");
    reject_unknown_keys(s, {"scenario", "combiner", "noise"}, "seeds");
    c.scenario_seed = s.value("scenario", c.scenario_seed);
    c.measurement.combiner_seed = s.value("combiner", c.measurement.combiner_seed);
    c.measurement.noise_seed = s.value("noise", c.measurement.noise_seed);
  }
  if (j.contains("solver")) c.estimate.solver = SolverOptions::from_json(j.at("solver"));
  if (j.contains("localize")) {
    const json& l = j.at("localize");
    reject_unknown_keys(l, {"grid_size", "threshold", "margin_grid"}, "localize");
    c.estimate.localize.grid_size = l.value("grid_size", c.estimate.localize.grid_size);
    c.estimate.localize.threshold = l.value("threshold", c.estimate.localize.threshold);
    c.estimate.margin_grid = l.value("margin_grid", c.estimate.margin_grid);
    if (c.estimate.localize.grid_size < 3) throw Error(ErrorKind::kConfig, "localize.grid_size must be >= 3");
    if (!(c.estimate.localize.threshold > 0.0 && c.estimate.localize.threshold <= 1.0)) {
      throw Error(ErrorKind::kConfig, "localize.threshold must lie in (0, 1]");
    }
    if (c.estimate.margin_grid < 0) throw Error(ErrorKind::kConfig, "localize.margin_grid must be >= 0");
  }
  if (j.contains("validate")) {
    const json& v = j.at("validate");
    reject_unknown_keys(v, {"ranges_m", "angle_rad", "i1", "i2"}, "validate");
    if (v.contains("ranges_m")) c.validate.ranges = v.at("ranges_m").get<std::vector<double>>();
    c.validate.angle = v.value("angle_rad", c.validate.angle);
    if (v.contains("i1")) {
      for (const auto& o : v.at("i1")) c.validate.i1.push_back(order_from_json(o));
    }
    if (v.contains("i2")) {
      for (const auto& o : v.at("i2")) c.validate.i2.push_back(order_from_json(o));
    }
    for (double r : c.validate.ranges) {
      if (!(r > 0.0)) throw Error(ErrorKind::kConfig, "validate.ranges_m must be positive");
    }
  }
  if (j.contains("estimate")) {
    const json& e = j.at("estimate");
    reject_unknown_keys(e, {"measurement"}, "estimate");
    c.measurement_file = e.value("measurement", c.measurement_file);
  }
  if (j.contains("experiment")) {
    const json& e = j.at("experiment");
    reject_unknown_keys(e, {"trials"}, "experiment");
    c.trials = e.value("trials", c.trials);
    if (c.trials < 1) throw Error(ErrorKind::kConfig, "experiment.trials must be >= 1");
  }
  c.verbosity = j.value("verbosity", c.verbosity);

  // Surface array/grid problems at parse time rather than mid-run.
  c.array().validate();
  c.lifting().validate();
  return c;
}

}  // namespace

ArrayConfig RunConfig::array() const {
  if (!(carrier_hz > 0.0) || !std::isfinite(carrier_hz)) throw Error(ErrorKind::kConfig, "array.carrier_hz must be > 0");
  if (!(spacing_wavelengths > 0.0)) throw Error(ErrorKind::kConfig, "array.spacing_wavelengths must be > 0");
  ArrayConfig a;
  a.num_antennas = num_antennas;
  a.wavelength = kSpeedOfLight / carrier_hz;
  a.spacing = spacing_wavelengths * a.wavelength;
  return a;
}

LiftingConfig RunConfig::lifting() const {
  LiftingConfig l;
  l.i1 = i1;
  l.i2 = i2;
  try {
    switch (grid.spacing) {
      case GridSpacing::kUniform: l.range_grid = LiftingConfig::uniform_grid(grid.range_min, grid.range_max, grid.num_bins); break;
      case GridSpacing::kInverse:
        l.range_grid = LiftingConfig::inverse_uniform_grid(grid.range_min, grid.range_max, grid.num_bins);
        break;
      case GridSpacing::kExplicit: l.range_grid = grid.ranges; break;
    }
    l.validate();
  } catch (const Error& e) {
    throw Error(ErrorKind::kConfig, std::string("lifting: ") + e.what());
  }
  return l;
}

Scenario RunConfig::scenario(std::vector<std::string>* warnings) const {
  Scenario s;
  s.array = array();
  s.lifting = lifting();
  s.mode = mode;
  s.seed = scenario_seed;
  if (!paths.empty()) {
    s.paths = paths;
    for (auto& p : s.paths) {
      if (p.bin >= 0 && p.bin < s.lifting.num_bins()) p.range = s.lifting.range_grid[static_cast<std::size_t>(p.bin)];
    }
  } else {
    s.paths = draw_paths(s.lifting, draw, scenario_seed, warnings);
  }
  s.validate();
  return s;
}

json RunConfig::to_json() const {
  json lift{{"i1", i1}, {"i2", i2}, {"grid", to_string(grid.spacing)}};
  if (grid.spacing == GridSpacing::kExplicit) {
    lift["ranges_m"] = grid.ranges;
  } else {
    lift["range_min_m"] = grid.range_min;
    lift["range_max_m"] = grid.range_max;
    lift["num_bins"] = grid.num_bins;
  }
  json scn{{"mode", nflift::to_string(mode)},
           {"num_paths", draw.num_paths},
           {"min_separation_rad", draw.min_separation},
           {"cross_bin_separation_rad", draw.cross_bin_separation},
           {"angle_margin_rad", draw.angle_margin},
           {"distinct_bins", draw.distinct_bins},
           {"angle_grid", draw.angle_grid},
           {"max_attempts", draw.max_attempts}};
  if (!paths.empty()) {
    json p = json::array();
    for (const auto& path : paths) p.push_back(path_to_json(path));
    scn["paths"] = std::move(p);
  }
  json val{{"angle_rad", validate.angle}};
  if (!validate.ranges.empty()) val["ranges_m"] = validate.ranges;
  if (!validate.i1.empty()) {
    val["i1"] = json::array();
    for (const auto& o : validate.i1) val["i1"].push_back(order_to_json(o));
  }
  if (!validate.i2.empty()) {
    val["i2"] = json::array();
    for (const auto& o : validate.i2) val["i2"].push_back(order_to_json(o));
  }
  json est = json::object();
  if (!measurement_file.empty()) est["measurement"] = measurement_file;
  return json{{"schema_version", kSchemaVersion},
              {"array", {{"num_antennas", num_antennas}, {"carrier_hz", carrier_hz}, {"spacing_wavelengths", spacing_wavelengths}}},
              {"lifting", std::move(lift)},
              {"scenario", std::move(scn)},
              {"measurement",
               {{"num_rf", measurement.num_rf},
                {"num_slots", measurement.num_slots},
                {"sigma", measurement.sigma},
                {"delta", measurement.delta}}},
              {"seeds",
               {{"scenario", scenario_seed}, {"combiner", measurement.combiner_seed}, {"noise", measurement.noise_seed}}},
              {"solver", estimate.solver.to_json()},
              {"localize",
               {{"grid_size", estimate.localize.grid_size},
                {"threshold", estimate.localize.threshold},
                {"margin_grid", estimate.margin_grid}}},
              {"validate", std::move(val)},
              {"estimate", std::move(est)},
              {"experiment", {{"trials", trials}}},
              {"verbosity", verbosity}};
}

RunConfig RunConfig::from_json(const json& j) {
  try {
    return parse(j);
  } catch (const json::exception& e) {
    throw Error(ErrorKind::kConfig, std::string("config: ") + e.what());
  }
}

std::vector<std::string> preset_names() { return {"paper-sec4", "exact-recovery"}; }

RunConfig preset(const std::string& name) {
  RunConfig c;
  // Certificates carry spurious near-unit lobes (the dual optimum is not
  // unique), so the presets detect only peaks within 1e-4 of unit modulus.
  c.estimate.localize.threshold = 0.9999;
  if (name == "paper-sec4") {
    c.num_antennas = 64;
    c.carrier_hz = 100e9;
    c.i1 = 5;
    c.i2 = 1;
    c.grid = GridSpec{GridSpacing::kUniform, 0.1, 6.0, 10, {}};
    c.draw.num_paths = 3;
    c.measurement.num_rf = 4;
    c.measurement.num_slots = 8;
    c.validate.i1 = {5, std::nullopt};
    c.validate.i2 = {1, std::nullopt};
    return c;
  }
  if (name == "exact-recovery") {
    c.num_antennas = 32;
    c.carrier_hz = 100e9;
    c.i1 = 5;
    c.i2 = 1;
    c.grid = GridSpec{GridSpacing::kInverse, 0.1, 6.0, 6, {}};
    c.draw.num_paths = 2;
    c.measurement.num_rf = 4;
    c.measurement.num_slots = 6;
    return c;
  }
  throw Error(ErrorKind::kConfig, "unknown preset '" + name + "'");
}

void apply_seed_override(RunConfig& cfg, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos) throw Error(ErrorKind::kConfig, "seed override '" + assignment + "' is not k=v");
  const std::string key = assignment.substr(0, eq);
  const std::string val = assignment.substr(eq + 1);
  std::uint64_t v = 0;
  try {
    std::size_t used = 0;
    if (val.empty() || val.front() == '-') throw std::invalid_argument("negative");
    v = std::stoull(val, &used);
    if (used != val.size()) throw std::invalid_argument("trailing");
  } catch (const std::exception&) {
    throw Error(ErrorKind::kConfig, "seed override '" + assignment + "': value is not a non-negative integer");
  }
  if (key == "scenario") cfg.scenario_seed = v;
  else if (key == "combiner") cfg.measurement.combiner_seed = v;
  else if (key == "noise") cfg.measurement.noise_seed = v;
  else throw Error(ErrorKind::kConfig, "seed override: unknown seed '" + key + "' (scenario, combiner, noise)");
}

RunConfig resolve_config(const std::optional<std::string>& preset_name,
                         const std::optional<std::filesystem::path>& config_path,
                         const std::vector<std::string>& seed_overrides) {
  RunConfig cfg = preset_name ? preset(*preset_name) : RunConfig{};
  if (config_path) {
    json base = cfg.to_json();
    const json file = read_json_file(*config_path);
    if (!file.is_object()) throw Error(ErrorKind::kConfig, config_path->string() + ": expected a JSON object");
    check_schema_version(file, config_path->string());
    // Validate the file on its own first so unknown keys are reported against it.
    reject_unknown_keys(file, {"schema_version", "array", "lifting", "scenario", "measurement", "seeds", "solver",
                               "localize", "validate", "estimate", "experiment", "verbosity", "command"},
                        config_path->string());
    // Explicit grids replace generated ones wholesale.
    if (file.contains("lifting") && file.at("lifting").is_object()) {
      const json& l = file.at("lifting");
      if (l.value("grid", std::string()) == "explicit") {
        base["lifting"].erase("range_min_m");
        base["lifting"].erase("range_max_m");
        base["lifting"].erase("num_bins");
      } else if (l.contains("grid")) {
        base["lifting"].erase("ranges_m");
      }
    }
    base.merge_patch(file);
    base.erase("command");  // informational in snapshots
    cfg = RunConfig::from_json(base);
  }
  for (const auto& s : seed_overrides) apply_seed_override(cfg, s);
  return cfg;
}

}  // namespace nflift::app
