#include "policytwin/ablation.hpp"

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "policytwin/error.hpp"
#include "policytwin/eval.hpp"

namespace policytwin {

std::string_view to_string(AblationVariant v) {
  switch (v) {
    case AblationVariant::kFull: return "full";
    case AblationVariant::kNoCalibration: return "no_calibration";
    case AblationVariant::kNoClipping: return "no_clipping";
    case AblationVariant::kSingleSlope: return "single_slope";
    case AblationVariant::kUniformPersonas: return "uniform_personas";
    case AblationVariant::kSinglePersona: return "single_persona";
  }
  return "full";
}

std::string_view describe(AblationVariant v) {
  switch (v) {
    case AblationVariant::kFull: return "Full twin";
    case AblationVariant::kNoCalibration: return "No calibration (100 x p)";
    case AblationVariant::kNoClipping: return "No clipping";
    case AblationVariant::kSingleSlope: return "Single shared slope";
    case AblationVariant::kUniformPersonas: return "Uniform personas";
    case AblationVariant::kSinglePersona: return "Single persona (N = 1)";
  }
  return "";
}

AblationVariant parse_ablation_variant(std::string_view text) {
  for (auto v : kAllAblationVariants) {
    if (to_string(v) == text) return v;
  }
  throw ConfigError("unknown ablation variant '" + std::string(text) + "'");
}

namespace {

std::vector<Persona> population_for(const AblationInputs& in, AblationVariant variant) {
  switch (variant) {
    case AblationVariant::kUniformPersonas:
      return uniform_population(modal_persona(in.population), in.population.population_size);
    case AblationVariant::kSinglePersona: {
      DemographicSpec one = in.population;
      one.population_size = 1;
      return sample_population(one, in.population_seed);
    }
    default:
      return sample_population(in.population, in.population_seed);
  }
}

MetricSeries restrict_to(const MetricSeries& s, const DateRange& range) {
  MetricSeries out{s.keys, {}};
  for (const auto& row : s.rows) {
    if (range.contains(row.date)) out.rows.push_back(row);
  }
  return out;
}

}  // namespace

AblationResult run_ablation(const AblationInputs& in, AblationVariant variant) {
  in.split.validate();
  if (!(in.observations.keys == in.schema.keys())) throw DataError("ablation: observations do not match the schema");
  if (in.eval_split == SplitName::kTrain) throw ConfigError("ablation cannot score on the train split");

  std::vector<Persona> population = population_for(in, variant);
  const std::size_t n = population.size();
  Simulator sim(in.schema, std::move(population), in.prompt_template, in.engine, in.cache, in.simulator);

  const DateRange& train = in.split.range(SplitName::kTrain);
  const DateRange& scored = in.split.range(in.eval_split);
  const std::array<DateRange, 2> ranges{train, scored};
  const auto contexts = contexts_for(in.policy, ranges);
  const AggregateSeries series = sim.simulate_series(contexts);
  const MetricSeries probs = series.as_metric_series();

  const MetricSeries eval_probs = restrict_to(probs, scored);
  const ObservationSeries eval_obs = restrict_to(in.observations, scored);
  MetricSeries predictions{in.schema.keys(), {}};

  if (variant == AblationVariant::kNoCalibration) {
    for (const auto& row : eval_probs.rows) {
      MetricRow r{row.date, row.values};
      for (double& v : r.values) v *= 100.0;
      predictions.rows.push_back(std::move(r));
    }
  } else {
    const TrainingSet train_set = align_training_set(restrict_to(probs, train), restrict_to(in.observations, train));
    FitConfig fit = in.fit;
    if (variant == AblationVariant::kNoClipping) fit.clip = false;
    const FitResult result = variant == AblationVariant::kSingleSlope ? fit_shared_calibration(train_set, in.schema, fit)
                                                                      : fit_calibration(train_set, in.schema, fit);
    for (const auto& p : series.points) {
      if (!scored.contains(p.date)) continue;
      predictions.rows.push_back(MetricRow{p.date, apply_calibration(p.pbar, result.params).values});
    }
  }

  const MethodScores scores = score_method(std::string(to_string(variant)), predictions, eval_obs);
  return AblationResult{variant, scores.macro_rmse, scores.rmse, n, scores.n_dates};
}

std::vector<AblationResult> run_ablation_matrix(const AblationInputs& inputs) {
  std::vector<AblationResult> out;
  for (auto v : kAllAblationVariants) out.push_back(run_ablation(inputs, v));
  return out;
}

void to_json(nlohmann::json& j, const AblationResult& r) {
  j = nlohmann::json{{"variant", to_string(r.variant)},
                     {"macro_rmse", r.macro_rmse},
                     {"rmse", r.rmse},
                     {"population_size", r.population_size},
                     {"eval_dates", r.eval_dates}};
}

std::string format_ablation_table(const std::vector<AblationResult>& results) {
  std::string out = fmt::format("{:<28} | {:>10} | {:>8} | {:>6}\n", "Variant", "Macro RMSE", "vs full", "agents");
  out += std::string(62, '-') + "\n";
  double full = 0.0;
  for (const auto& r : results) {
    if (r.variant == AblationVariant::kFull) full = r.macro_rmse;
  }
  for (const auto& r : results) {
    const std::string ratio = full > 0.0 ? fmt::format("{:.2f}x", r.macro_rmse / full) : "n/a";
    out += fmt::format("{:<28} | {:>10.2f} | {:>8} | {:>6}\n", describe(r.variant), r.macro_rmse, ratio,
                       r.population_size);
  }
  return out;
}

}  // namespace policytwin
