#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <nlohmann/json_fwd.hpp>
#include <string>
#include <string_view>
#include <vector>

#include "policytwin/calibrate.hpp"
#include "policytwin/ingest.hpp"
#include "policytwin/persona.hpp"
#include "policytwin/simulation.hpp"

namespace policytwin {

enum class AblationVariant {
  kFull,
  kNoCalibration,    // prediction = 100 * pbar
  kNoClipping,       // fitted affine, no clip
  kSingleSlope,      // one (slope, intercept) for all categories
  kUniformPersonas,  // N copies of the modal persona
  kSinglePersona,    // N = 1
};

inline constexpr std::array<AblationVariant, 6> kAllAblationVariants{
    AblationVariant::kFull,         AblationVariant::kNoCalibration,
    AblationVariant::kNoClipping,   AblationVariant::kSingleSlope,
    AblationVariant::kUniformPersonas, AblationVariant::kSinglePersona};

std::string_view to_string(AblationVariant v);
std::string_view describe(AblationVariant v);
AblationVariant parse_ablation_variant(std::string_view text);

/// Everything a variant run needs. Calibration is fitted on the train split
/// and scored on `eval_split`.
struct AblationInputs {
  CategorySchema schema;
  DemographicSpec population;
  std::uint64_t population_seed = 0;
  std::string prompt_template;
  std::shared_ptr<CognitiveEngine> engine;
  std::shared_ptr<ResponseCache> cache;
  SimulatorOptions simulator;
  FitConfig fit;
  std::vector<PolicyRecord> policy;
  ObservationSeries observations;
  TemporalSplit split;
  SplitName eval_split = SplitName::kTest;
};

struct AblationResult {
  AblationVariant variant = AblationVariant::kFull;
  double macro_rmse = 0.0;
  std::vector<double> rmse;  // category order
  std::size_t population_size = 0;
  std::size_t eval_dates = 0;
};

AblationResult run_ablation(const AblationInputs& inputs, AblationVariant variant);
std::vector<AblationResult> run_ablation_matrix(const AblationInputs& inputs);

void to_json(nlohmann::json& j, const AblationResult& r);
std::string format_ablation_table(const std::vector<AblationResult>& results);

}  // namespace policytwin
