#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string_view>

#include "policytwin/error.hpp"
#include "policytwin/run_config.hpp"

namespace policytwin {

// Pipeline stages behind the CLI subcommands. Each writes its outputs and a
// manifest_<command>.json into paths.output_dir; every output embeds the
// config hash, and artifacts from earlier stages are refused when their hash
// differs from the current config's. Progress lines go to `log`.

/// Sample personas, query the engine for every split date, aggregate.
/// Writes aggregate_series.csv and population.json.
void cmd_simulate(const RunConfig& config, std::ostream& log);

/// Fit the calibration on the train split. Writes calibration.json and
/// fit_report.txt.
void cmd_calibrate(const RunConfig& config, std::ostream& log);

/// Twin vs GBM vs persistence on validation and test. Writes
/// eval_<split>.{txt,json}, plot_<split>.csv and gbm_model.json.
void cmd_evaluate(const RunConfig& config, std::ostream& log);

/// Scenario sweep with the fitted calibration. Writes counterfactual.{txt,json}.
void cmd_counterfactual(const RunConfig& config,
                        const std::optional<std::filesystem::path>& scenario_file, std::ostream& log);

/// All six ablation variants. Writes ablation.{txt,json}.
void cmd_ablate(const RunConfig& config, std::ostream& log);

/// Runs `command` and maps library errors to exit codes, printing the
/// message to `err`.
int run_command(std::string_view command, const RunConfig& config,
                const std::optional<std::filesystem::path>& scenario_file, std::ostream& log,
                std::ostream& err);

}  // namespace policytwin
