#include "policytwin/counterfactual.hpp"

#include <algorithm>
#include <cmath>
#include <fmt/format.h>
#include <fstream>
#include <nlohmann/json.hpp>
#include <set>

#include "policytwin/csv.hpp"
#include "policytwin/error.hpp"

namespace policytwin {

void Scenario::validate() const {
  if (name.empty()) throw ConfigError("scenario needs a name");
  if (!(stringency_override >= 0.0 && stringency_override <= 100.0)) {
    throw ConfigError("scenario '" + name + "': stringency_override must lie in [0, 100]");
  }
}

void to_json(nlohmann::json& j, const Scenario& s) {
  j = nlohmann::json{{"name", s.name},
                     {"date", format_date(s.date)},
                     {"stringency_override", s.stringency_override},
                     {"baseline", s.baseline}};
}

void from_json(const nlohmann::json& j, Scenario& s) {
  s.name = j.at("name").get<std::string>();
  s.date = parse_date(j.at("date").get<std::string>());
  s.stringency_override = j.at("stringency_override").get<double>();
  s.baseline = j.value("baseline", false);
  s.validate();
}

std::vector<Scenario> load_scenarios(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open scenario file " + path.string());
  std::vector<Scenario> out;
  try {
    const auto j = nlohmann::json::parse(in);
    out = j.at("scenarios").get<std::vector<Scenario>>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(path.string() + ": malformed scenario file: " + e.what());
  } catch (const DataError& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  if (out.empty()) throw ConfigError(path.string() + ": no scenarios");
  std::set<std::string> names;
  int baselines = 0;
  for (const auto& s : out) {
    if (!names.insert(s.name).second) throw ConfigError(path.string() + ": duplicate scenario '" + s.name + "'");
    baselines += s.baseline ? 1 : 0;
  }
  if (baselines > 1) throw ConfigError(path.string() + ": more than one baseline scenario");
  return out;
}

DigitalTwin::DigitalTwin(Simulator& simulator, std::optional<CalibrationParams> calibration)
    : simulator_(simulator), calibration_(std::move(calibration)) {
  if (calibration_) calibration_->validate();
}

const CalibrationParams& DigitalTwin::calibration() const {
  if (!calibration_) throw ConfigError("the twin has no calibration; run calibrate first");
  return *calibration_;
}

ScenarioResult run_scenario(DigitalTwin& twin, const Scenario& scenario) {
  scenario.validate();
  const CalibrationParams& params = twin.calibration();
  const SimContext context{scenario.date, scenario.stringency_override, {}};
  AggregatePoint point = twin.simulator().simulate(context);
  MetricVector predicted = apply_calibration(point.pbar, params);
  return ScenarioResult{scenario, std::move(point.pbar), std::move(predicted), point.survivors};
}

std::vector<double> scenario_delta(const ScenarioResult& from, const ScenarioResult& to) {
  std::vector<double> d(to.predicted.values.size());
  for (std::size_t k = 0; k < d.size(); ++k) d[k] = to.predicted.values[k] - from.predicted.values[k];
  return d;
}

std::vector<double> probability_delta(const ScenarioResult& from, const ScenarioResult& to) {
  std::vector<double> d(to.pbar.size());
  for (std::size_t k = 0; k < d.size(); ++k) d[k] = to.pbar[k] - from.pbar[k];
  return d;
}

bool check_monotonicity(std::span<const ResponsePoint> points, int direction) {
  if (direction != 1 && direction != -1) throw DataError("monotonicity needs direction +1 or -1");
  std::set<double> distinct;
  for (const auto& p : points) distinct.insert(p.stringency);
  if (distinct.size() < 2) throw DataError("monotonicity needs at least two distinct stringencies");
  for (const auto& a : points) {
    for (const auto& b : points) {
      if (a.stringency < b.stringency && direction * (b.value - a.value) < 0.0) return false;
    }
  }
  return true;
}

bool check_boundedness(std::span<const ResponsePoint> points) {
  if (points.size() < 3) throw DataError("boundedness needs at least three points");
  std::vector<ResponsePoint> sorted(points.begin(), points.end());
  std::sort(sorted.begin(), sorted.end(),
            [](const ResponsePoint& a, const ResponsePoint& b) { return a.stringency < b.stringency; });
  std::vector<double> slopes;
  for (std::size_t i = 1; i < sorted.size(); ++i) {
    const double ds = sorted[i].stringency - sorted[i - 1].stringency;
    if (ds == 0.0) throw DataError("boundedness needs distinct stringencies");
    slopes.push_back(std::abs((sorted[i].value - sorted[i - 1].value) / ds));
  }
  for (std::size_t i = 1; i < slopes.size(); ++i) {
    if (slopes[i] > slopes[i - 1] * (1.0 + 1e-9) + 1e-15) return false;
  }
  return true;
}

CounterfactualReport run_counterfactuals(DigitalTwin& twin, std::span<const Scenario> scenarios,
                                         const CategorySchema& schema, const std::string& focus_category) {
  if (scenarios.empty()) throw ConfigError("no scenarios to run");
  if (!focus_category.empty() && !schema.index_of(focus_category)) {
    throw ConfigError("focus category '" + focus_category + "' is not in the schema");
  }
  twin.calibration();
  CounterfactualReport report;
  report.keys = schema.keys();
  report.focus_category = focus_category;
  for (std::size_t i = 0; i < scenarios.size(); ++i) {
    if (scenarios[i].baseline) report.baseline_index = i;
  }
  for (const auto& s : scenarios) report.results.push_back(run_scenario(twin, s));
  const ScenarioResult& base = report.results[report.baseline_index];
  for (const auto& r : report.results) {
    report.deltas.push_back(scenario_delta(base, r));
    report.probability_deltas.push_back(probability_delta(base, r));
  }

  std::vector<const ScenarioResult*> same_day;
  for (const auto& r : report.results) {
    if (r.scenario.date == base.scenario.date) same_day.push_back(&r);
  }
  std::set<double> levels;
  for (const auto* r : same_day) levels.insert(r->scenario.stringency_override);
  const bool all_distinct = levels.size() == same_day.size();

  const CalibrationParams& params = twin.calibration();
  for (std::size_t k = 0; k < schema.size(); ++k) {
    const CategorySpec& spec = schema[k];
    CategoryVerdict v{spec.key, spec.direction, std::nullopt, std::nullopt, std::nullopt};
    std::vector<ResponsePoint> probs, preds;
    for (const auto* r : same_day) {
      probs.push_back({r->scenario.stringency_override, r->pbar[k]});
      preds.push_back({r->scenario.stringency_override, r->predicted.values[k]});
    }
    if (levels.size() >= 2 && spec.direction != 0) {
      v.monotonic = check_monotonicity(probs, spec.direction);
      const auto* cal = params.find(spec.key);
      if (cal && cal->slope != 0.0) {
        v.monotonic_calibrated = check_monotonicity(preds, spec.direction * (cal->slope > 0.0 ? 1 : -1));
      }
    }
    if (levels.size() >= 3 && all_distinct) v.bounded = check_boundedness(probs);
    if (spec.key == focus_category) report.focus_bounded = v.bounded;
    report.verdicts.push_back(std::move(v));
  }
  return report;
}

void to_json(nlohmann::json& j, const CounterfactualReport& r) {
  auto opt = [](const std::optional<bool>& v) { return v ? nlohmann::json(*v) : nlohmann::json(nullptr); };
  nlohmann::json results = nlohmann::json::array();
  for (std::size_t i = 0; i < r.results.size(); ++i) {
    const auto& res = r.results[i];
    nlohmann::json cats = nlohmann::json::object();
    for (std::size_t k = 0; k < r.keys.size(); ++k) {
      cats[r.keys[k]] = {{"probability", res.pbar[k]},
                         {"predicted", res.predicted.values[k]},
                         {"delta", r.deltas[i][k]},
                         {"probability_delta", r.probability_deltas[i][k]}};
    }
    results.push_back({{"scenario", res.scenario}, {"agents", res.survivors}, {"categories", cats}});
  }
  nlohmann::json verdicts = nlohmann::json::array();
  for (const auto& v : r.verdicts) {
    verdicts.push_back({{"key", v.key},
                        {"direction", v.direction},
                        {"monotonic", opt(v.monotonic)},
                        {"monotonic_calibrated", opt(v.monotonic_calibrated)},
                        {"bounded", opt(v.bounded)}});
  }
  j = nlohmann::json{{"baseline", r.results[r.baseline_index].scenario.name},
                     {"results", results},
                     {"verdicts", verdicts},
                     {"focus_category", r.focus_category},
                     {"focus_bounded", opt(r.focus_bounded)}};
}

std::string format_counterfactual_report(const CounterfactualReport& r, const CategorySchema& schema) {
  auto yn = [](const std::optional<bool>& v) -> std::string { return v ? (*v ? "yes" : "no") : "-"; };
  const auto& base = r.results[r.baseline_index];
  std::string out = fmt::format("Counterfactual scenarios (baseline: {}, {} at stringency {})\n", base.scenario.name,
                                format_date(base.scenario.date), format_number(base.scenario.stringency_override));
  for (std::size_t i = 0; i < r.results.size(); ++i) {
    const auto& res = r.results[i];
    out += fmt::format("\n{} ({}, stringency {}, {} agents)\n", res.scenario.name, format_date(res.scenario.date),
                       format_number(res.scenario.stringency_override), res.survivors);
    for (std::size_t k = 0; k < r.keys.size(); ++k) {
      const auto idx = schema.index_of(r.keys[k]);
      const std::string& label = idx ? schema[*idx].label : r.keys[k];
      out += fmt::format("  {:<22} p={:5.1f}%  predicted {:8.2f}  delta {:+8.2f}\n", label, 100.0 * res.pbar[k],
                         res.predicted.values[k], r.deltas[i][k]);
    }
  }
  std::size_t width = 8;
  for (const auto& v : r.verdicts) width = std::max(width, v.key.size());
  out += fmt::format("\n  {:<{}} {:>9}  {:>9}  {:>10}  {:>7}\n", "Category", width, "direction", "monotonic",
                     "calibrated", "bounded");
  for (const auto& v : r.verdicts) {
    out += fmt::format("  {:<{}} {:>+9d}  {:>9}  {:>10}  {:>7}\n", v.key, width, v.direction, yn(v.monotonic),
                       yn(v.monotonic_calibrated), yn(v.bounded));
  }
  if (!r.focus_category.empty()) out += fmt::format("focus {} bounded: {}\n", r.focus_category, yn(r.focus_bounded));
  return out;
}

}  // namespace policytwin
