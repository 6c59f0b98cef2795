#pragma once

#include <filesystem>
#include <nlohmann/json_fwd.hpp>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "policytwin/calibrate.hpp"
#include "policytwin/simulation.hpp"

namespace policytwin {

/// A policy override: the twin is run on `date` with stringency replaced.
struct Scenario {
  std::string name;
  Date date;
  double stringency_override = 0.0;  // [0,100]
  bool baseline = false;

  void validate() const;
};

void to_json(nlohmann::json& j, const Scenario& s);
void from_json(const nlohmann::json& j, Scenario& s);

/// {"scenarios": [{name, date, stringency_override, baseline?}, ...]}
std::vector<Scenario> load_scenarios(const std::filesystem::path& path);

/// A simulator plus the calibration fitted on factual data.
class DigitalTwin {
 public:
  DigitalTwin(Simulator& simulator, std::optional<CalibrationParams> calibration);

  bool calibrated() const { return calibration_.has_value(); }
  const CalibrationParams& calibration() const;
  Simulator& simulator() { return simulator_; }

 private:
  Simulator& simulator_;
  std::optional<CalibrationParams> calibration_;
};

struct ScenarioResult {
  Scenario scenario;
  BehaviorVector pbar;
  MetricVector predicted;
  std::size_t survivors = 0;
};

/// The normal prediction path with the stringency overridden. Throws
/// ConfigError when the twin has no calibration.
ScenarioResult run_scenario(DigitalTwin& twin, const Scenario& scenario);

/// Per-category difference `to - from` of calibrated predictions.
std::vector<double> scenario_delta(const ScenarioResult& from, const ScenarioResult& to);
/// Same, on aggregated probabilities.
std::vector<double> probability_delta(const ScenarioResult& from, const ScenarioResult& to);

struct ResponsePoint {
  double stringency = 0.0;
  double value = 0.0;
};

/// True iff direction * (v_j - v_i) >= 0 for every pair with s_i < s_j.
/// Throws DataError with fewer than two distinct stringencies or a
/// direction other than +1/-1.
bool check_monotonicity(std::span<const ResponsePoint> points, int direction);

/// Sorts by stringency and requires the magnitudes of consecutive secant
/// slopes to be non-increasing toward the upper extreme. Throws DataError
/// with fewer than three points or repeated stringencies.
bool check_boundedness(std::span<const ResponsePoint> points);

struct CategoryVerdict {
  std::string key;
  int direction = 0;
  std::optional<bool> monotonic;             // on aggregated probabilities
  std::optional<bool> monotonic_calibrated;  // direction * sign(slope)
  std::optional<bool> bounded;
};

struct CounterfactualReport {
  CategoryKeys keys;
  std::vector<ScenarioResult> results;  // in scenario-file order
  std::size_t baseline_index = 0;
  std::vector<std::vector<double>> deltas;              // [scenario][k], calibrated
  std::vector<std::vector<double>> probability_deltas;  // [scenario][k]
  std::vector<CategoryVerdict> verdicts;
  std::string focus_category;
  std::optional<bool> focus_bounded;
};

/// Runs every scenario, then deltas against the baseline (the one flagged
/// `baseline`, else the first) and verdicts over scenarios sharing the
/// baseline's date. Verdicts that need more distinct stringencies than are
/// available are left empty.
CounterfactualReport run_counterfactuals(DigitalTwin& twin, std::span<const Scenario> scenarios,
                                         const CategorySchema& schema,
                                         const std::string& focus_category);

void to_json(nlohmann::json& j, const CounterfactualReport& r);
std::string format_counterfactual_report(const CounterfactualReport& r, const CategorySchema& schema);

}  // namespace policytwin
