// SPDX-License-Identifier: Apache-2.0
#include <exception>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "nflift_app/commands.hpp"

namespace {

struct Flags {
  std::string config;
  std::string out = "nflift_out";
  std::string preset;
  std::vector<std::string> seed_overrides;
  int verbose = 0;
};

void add_common(CLI::App* sub, Flags& f) {
  sub->add_option("--config", f.config, "JSON run configuration (schema_version 1)")->check(CLI::ExistingFile);
  sub->add_option("--out", f.out, "output directory")->capture_default_str();
  sub->add_option("--seed-override", f.seed_overrides, "override a named seed, k=v with k in {scenario, combiner, noise}")
      ->take_all()
      ->allow_extra_args(false);
  sub->add_option("--preset", f.preset, "built-in configuration")
      ->check(CLI::IsMember(nflift::app::preset_names()));
  sub->add_flag("-v,--verbose", f.verbose, "progress lines on stderr");
}

}  // namespace

int main(int argc, char** argv) {
  using namespace nflift::app;

  CLI::App app{"nflift: gridless near-field angle/range estimation"};
  app.require_subcommand(1, 1);
  Flags flags;
  const std::vector<std::pair<const char*, const char*>> commands = {
      {"validate-lifting", "sweep the Bessel-Vandermonde truncation error and write lifting_errors.csv"},
      {"simulate", "draw a scenario and write measurement.json and truth.json"},
      {"estimate", "run the dual SDP, localization and gain fit on a stored measurement"},
      {"experiment", "simulate + estimate in one run and write a recovery report"},
  };
  for (const auto& [name, help] : commands) add_common(app.add_subcommand(name, help), flags);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitUsage;
  }

  CommandContext ctx;
  ctx.command = app.get_subcommands().front()->get_name();
  ctx.out_dir = flags.out;
  ctx.log = &std::cerr;
  try {
    ctx.config = resolve_config(flags.preset.empty() ? std::nullopt : std::optional<std::string>(flags.preset),
                                flags.config.empty() ? std::nullopt : std::optional<std::filesystem::path>(flags.config),
                                flags.seed_overrides);
    ctx.config.verbosity = std::max(ctx.config.verbosity, flags.verbose);
    const CommandResult res = run_command(ctx);
    std::cout << ctx.command << ": " << res.summary << '\n';
    for (const auto& f : res.files) std::cout << "  wrote " << (ctx.out_dir / f).string() << '\n';
    return res.exit_code;
  } catch (const nflift::Error& e) {
    std::cerr << "nflift " << ctx.command << ": " << to_string(e.kind()) << " error";
    if (!e.stage().empty()) std::cerr << " in stage '" << e.stage() << "'";
    std::cerr << ": " << e.what() << '\n';
    return exit_code_for(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "nflift " << ctx.command << ": internal error: " << e.what() << '\n';
    return kExitUsage;
  }
}
