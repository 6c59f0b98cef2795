#include <CLI11.hpp>
#include <iostream>
#include <optional>
#include <string>

#include "policytwin/commands.hpp"
#include "policytwin/error.hpp"
#include "policytwin/run_config.hpp"

namespace {

struct Options {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<int> parallelism;
  std::optional<std::string> engine;
  std::optional<std::string> scenarios;
};

void add_common(CLI::App* cmd, Options& opts) {
  cmd->add_option("--config", opts.config, "run configuration (JSON)")->required()->check(CLI::ExistingFile);
  cmd->add_option("--seed-override", opts.seed, "replace every seed in the config");
  cmd->add_option("--parallelism", opts.parallelism, "concurrent engine queries")->check(CLI::PositiveNumber);
  cmd->add_option("--engine", opts.engine, "cognitive engine")
      ->check(CLI::IsMember({"remote", "oracle", "replay"}));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"policytwin: a population digital twin for policy response"};
  app.require_subcommand(1);
  Options opts;

  for (const char* name : {"simulate", "calibrate", "evaluate", "ablate"}) {
    add_common(app.add_subcommand(name, std::string("run the ") + name + " stage"), opts);
  }
  auto* cf = app.add_subcommand("counterfactual", "run policy scenarios through the calibrated twin");
  add_common(cf, opts);
  cf->add_option("--scenarios", opts.scenarios, "scenario file (JSON)")->check(CLI::ExistingFile);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : static_cast<int>(policytwin::ExitCode::kUsage);
  }

  const std::string command = app.get_subcommands().front()->get_name();
  policytwin::ConfigOverrides overrides;
  overrides.seed = opts.seed;
  overrides.parallelism = opts.parallelism;

  policytwin::RunConfig config;
  try {
    if (opts.engine) overrides.engine = policytwin::parse_engine_kind(*opts.engine);
    config = policytwin::load_run_config(opts.config, overrides);
  } catch (const policytwin::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return static_cast<int>(e.code());
  }

  std::optional<std::filesystem::path> scenarios;
  if (opts.scenarios) scenarios = *opts.scenarios;
  return policytwin::run_command(command, config, scenarios, std::cout, std::cerr);
}
