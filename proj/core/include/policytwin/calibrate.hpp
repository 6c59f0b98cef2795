#pragma once

#include <cstdint>
#include <filesystem>
#include <limits>
#include <nlohmann/json_fwd.hpp>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "policytwin/behavior.hpp"
#include "policytwin/categories.hpp"
#include "policytwin/ingest.hpp"
#include "policytwin/tpe.hpp"

namespace policytwin {

inline constexpr double kUnbounded = std::numeric_limits<double>::infinity();

/// y = clip(slope * p + intercept, clip_min, clip_max) for one category.
/// Infinite bounds switch clipping off on that side.
struct CategoryCalibration {
  std::string key;
  double slope = 1.0;
  double intercept = 0.0;
  double clip_min = -kUnbounded;
  double clip_max = kUnbounded;

  double apply(double p) const;
  bool operator==(const CategoryCalibration&) const = default;
};

struct CalibrationParams {
  std::vector<CategoryCalibration> categories;

  /// Throws ConfigError unless clip_min < clip_max and coefficients are finite.
  void validate() const;
  const CategoryCalibration* find(std::string_view key) const;
  bool operator==(const CalibrationParams&) const = default;
};

/// Throws DataError when a category of `pbar` has no parameters.
MetricVector apply_calibration(const BehaviorVector& pbar, const CalibrationParams& params);

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  bool degenerate = false;  // x had no spread: slope 0, intercept mean(y)
};

/// Ordinary least squares y ~ slope * x + intercept. Throws DataError when
/// empty or lengths differ.
LinearFit least_squares_line(std::span<const double> x, std::span<const double> y);

/// Aggregated probabilities paired with observations on common dates,
/// stored column-wise per category.
struct TrainingSet {
  CategoryKeys keys;
  std::vector<Date> dates;
  std::vector<std::vector<double>> pbar;      // [category][date]
  std::vector<std::vector<double>> observed;  // [category][date]

  std::size_t size() const { return dates.size(); }
};

/// Inner join on date. `observations` must use the same keys.
TrainingSet align_training_set(const MetricSeries& probabilities, const ObservationSeries& observations);

/// Per-category OLS with clip bounds taken from the schema.
CalibrationParams least_squares_fit(const TrainingSet& data, const CategorySchema& schema,
                                    std::vector<bool>* degenerate = nullptr);

enum class FitObjective { kPerCategory, kMacroAverage };
enum class SamplerKind { kTpe, kRandom, kLeastSquaresInit };

std::string_view to_string(FitObjective o);
std::string_view to_string(SamplerKind s);
FitObjective parse_fit_objective(std::string_view text);
SamplerKind parse_sampler_kind(std::string_view text);

struct FitConfig {
  int trials = 200;
  Interval slope_range{-400.0, 400.0};
  Interval intercept_range{-200.0, 200.0};
  std::uint64_t seed = 0;
  FitObjective objective = FitObjective::kPerCategory;
  SamplerKind sampler = SamplerKind::kTpe;
  bool clip = true;  // false: fit and emit an unclipped affine map
  TpeOptions tpe;

  void validate() const;
};

void to_json(nlohmann::json& j, const FitConfig& c);
void from_json(const nlohmann::json& j, FitConfig& c);

struct CategoryFitReport {
  std::string key;
  double init_loss = 0.0;  // trial 0, the least-squares initializer
  double best_loss = 0.0;
  int best_trial = 0;
  int trials = 0;
  bool degenerate_init = false;
  bool range_widened = false;
};

struct FitReport {
  std::vector<CategoryFitReport> categories;
  std::uint64_t seed = 0;
  int trials = 0;
  FitObjective objective = FitObjective::kPerCategory;
  SamplerKind sampler = SamplerKind::kTpe;
  Interval slope_range;
  Interval intercept_range;
  bool shared_parameters = false;
  std::size_t training_dates = 0;
  std::vector<std::string> warnings;

  std::string summary() const;
};

void to_json(nlohmann::json& j, const FitReport& r);

struct FitResult {
  CalibrationParams params;
  FitReport report;
};

/// RMSE of clipped predictions for one category.
double calibration_rmse(const CategoryCalibration& c, std::span<const double> pbar,
                        std::span<const double> observed);

/// Learns (slope, intercept) per category by minimizing RMSE of clipped
/// predictions. Trial 0 is the least-squares line; if it falls outside the
/// search range the range is widened to include it and a warning recorded.
/// Per-category mode gives category k the seed stream (seed, k) and touches
/// no other category's parameters.
FitResult fit_calibration(const TrainingSet& data, const CategorySchema& schema, const FitConfig& config);

/// One (slope, intercept) shared by every category, minimizing the macro
/// average of per-category RMSE. Trial 0 is the pooled least-squares line.
FitResult fit_shared_calibration(const TrainingSet& data, const CategorySchema& schema,
                                 const FitConfig& config);

void to_json(nlohmann::json& j, const CalibrationParams& p);
void from_json(const nlohmann::json& j, CalibrationParams& p);

/// Versioned artifact: params, fit report and free-form provenance.
struct CalibrationArtifact {
  static constexpr int kSchemaVersion = 1;
  CalibrationParams params;
  std::optional<FitReport> report;
  std::string config_hash;
};

void write_calibration_artifact(const std::filesystem::path& path, const CalibrationArtifact& artifact);
CalibrationArtifact read_calibration_artifact(const std::filesystem::path& path);

}  // namespace policytwin
