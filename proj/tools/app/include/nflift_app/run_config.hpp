// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "nflift/sim.hpp"

namespace nflift::app {

enum class GridSpacing { kUniform, kInverse, kExplicit };

struct GridSpec {
  GridSpacing spacing = GridSpacing::kUniform;
  double range_min = 0.1;  // m
  double range_max = 6.0;  // m
  int num_bins = 6;
  std::vector<double> ranges;  // only for kExplicit
};

/// A truncation order in the validate-lifting sweep; nullopt means "converged":
/// ceil(z1_max) + 25 for I1, ceil(z2_max) + 15 for I2.
using SweepOrder = std::optional<int>;

struct ValidateSpec {
  std::vector<double> ranges;  // empty: the lifting grid
  double angle = kPi / 3.0;
  std::vector<SweepOrder> i1;  // empty: the lifting config's I1
  std::vector<SweepOrder> i2;
};

/// Everything a run needs. Parsed strictly: unknown keys are errors, and
/// to_json() writes every field including defaults (the config snapshot).
struct RunConfig {
  int num_antennas = 32;
  double carrier_hz = 100e9;
  double spacing_wavelengths = 0.5;

  int i1 = 5;
  int i2 = 1;
  GridSpec grid;

  GenerationMode mode = GenerationMode::kLifted;
  PathDrawOptions draw{.num_paths = 2};
  std::vector<PathSpec> paths;  // explicit paths override random drawing

  MeasurementParams measurement;
  std::uint64_t scenario_seed = 1;

  EstimateOptions estimate;

  ValidateSpec validate;
  std::string measurement_file;  // estimate: input; empty means <out>/measurement.json
  int trials = 1;                // experiment: seeds advance by one per trial
  int verbosity = 0;

  ArrayConfig array() const;
  LiftingConfig lifting() const;
  /// Explicit paths, or paths drawn with scenario_seed.
  Scenario scenario(std::vector<std::string>* warnings = nullptr) const;

  nlohmann::json to_json() const;
  static RunConfig from_json(const nlohmann::json& j);
};

/// Named presets: "paper-sec4" and "exact-recovery".
RunConfig preset(const std::string& name);
std::vector<std::string> preset_names();

/// "scenario=7", "combiner=3" or "noise=11". Throws Error(kConfig) otherwise.
void apply_seed_override(RunConfig& cfg, const std::string& assignment);

/// Preset (if any) as the base, then the config file merge-patched over it,
/// then seed overrides.
RunConfig resolve_config(const std::optional<std::string>& preset_name,
                         const std::optional<std::filesystem::path>& config_path,
                         const std::vector<std::string>& seed_overrides);

}  // namespace nflift::app
