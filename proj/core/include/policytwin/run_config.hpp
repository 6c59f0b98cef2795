#pragma once

#include <cstdint>
#include <filesystem>
#include <nlohmann/json.hpp>
#include <optional>
#include <string>

#include "policytwin/calibrate.hpp"
#include "policytwin/categories.hpp"
#include "policytwin/engine.hpp"
#include "policytwin/gbm.hpp"
#include "policytwin/ingest.hpp"
#include "policytwin/simulation.hpp"

namespace policytwin {

struct RunPaths {
  std::filesystem::path policy_csv;
  std::filesystem::path observations_csv;
  std::filesystem::path population_spec;
  std::filesystem::path prompt_template;
  std::filesystem::path cache_dir;
  std::filesystem::path output_dir;
  std::optional<std::filesystem::path> scenarios;
};

struct RunSeeds {
  std::uint64_t population = 0;
  std::uint64_t fit = 0;
  std::uint64_t gbm = 0;
};

/// Flag-level overrides applied on top of the file.
struct ConfigOverrides {
  std::optional<std::uint64_t> seed;  // replaces every seed
  std::optional<int> parallelism;
  std::optional<EngineKind> engine;
};

/// One declarative description of a full run. Relative paths resolve
/// against the config file's directory.
struct RunConfig {
  std::string profile;
  RunPaths paths;
  PolicyColumns policy_columns;
  ObservationColumns observation_columns;
  CategorySchema schema;
  TemporalSplit split;
  EngineConfig engine;
  FitConfig fit;
  GbmHyper gbm;
  RunSeeds seeds;
  int parallelism = 1;
  AggregationMode aggregation = AggregationMode::kMean;
  std::string focus_category;

  /// Digest over every result-affecting setting plus the contents of the
  /// input files. Output locations and parallelism are excluded.
  std::string hash;
};

/// Validates everything up front (splits, schema, engine, input files),
/// so a bad config is refused before any computation. Throws ConfigError.
RunConfig parse_run_config(const nlohmann::json& document, const std::filesystem::path& base_dir,
                           const ConfigOverrides& overrides = {});
RunConfig load_run_config(const std::filesystem::path& path, const ConfigOverrides& overrides = {});

/// The settings that went into the hash, as JSON (for manifests).
nlohmann::json describe_run_config(const RunConfig& config);

}  // namespace policytwin
