#include "policytwin/synthetic.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numbers>
#include <random>

#include "policytwin/aggregate.hpp"
#include "policytwin/digest.hpp"
#include "policytwin/error.hpp"
#include "policytwin/simulation.hpp"

namespace policytwin {
namespace {

double round2(double x) { return std::round(x * 100.0) / 100.0; }

double lerp(double a, double b, double t) { return a + (b - a) * t; }

Date ymd(int y, unsigned m, unsigned d) {
  return std::chrono::sys_days(std::chrono::year{y} / std::chrono::month{m} / std::chrono::day{d});
}

double fraction(Date d, Date from, Date to) {
  return static_cast<double>((d - from).count()) / static_cast<double>((to - from).count());
}

double gaussian(std::mt19937_64& rng) {
  double u1 = unit_interval(rng());
  while (u1 <= 0.0) u1 = unit_interval(rng());
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * unit_interval(rng()));
}

}  // namespace

std::vector<PolicyRecord> synthetic_policy_series(Date first, Date last, std::uint64_t seed) {
  if (last < first) throw ConfigError("synthetic policy range is inverted");
  const Date ramp_start = ymd(2020, 3, 1), lockdown = ymd(2020, 3, 26), ease_start = ymd(2020, 4, 26),
             ease_end = ymd(2020, 7, 31);
  std::mt19937_64 rng(mix_seed(seed, 0x706f6c));
  double level = 60.0;
  Date next_step = ease_end;

  std::vector<PolicyRecord> out;
  for (Date d = first; d <= last; d += std::chrono::days(1)) {
    double s;
    if (d < ramp_start) {
      s = 11.11;
    } else if (d < lockdown) {
      s = lerp(11.11, 89.81, fraction(d, ramp_start, lockdown));
    } else if (d < ease_start) {
      s = 89.81;
    } else if (d < ease_end) {
      s = lerp(89.81, 60.0, fraction(d, ease_start, ease_end));
    } else {
      if (d >= next_step) {
        level = std::clamp(level + (unit_interval(rng()) - 0.5) * 24.0, 35.0, 85.0);
        next_step = d + std::chrono::days(14 + static_cast<int>(rng() % 22));
      }
      s = level;
    }
    s = round2(s);
    out.push_back(PolicyRecord{d, s, round2(std::min(100.0, 0.85 * s + 8.0))});
  }
  return out;
}

DemographicSpec default_pandemic_population() {
  DemographicSpec spec;
  spec.population_size = 10;
  spec.attributes = {
      {"nationality", {{"UAE National", 0.1}, {"Expatriate", 0.9}}},
      {"occupation",
       {{"Construction", 0.2}, {"Services", 0.3}, {"Professional", 0.25}, {"Healthcare", 0.1}, {"Retail", 0.15}}},
      {"risk_perception", {{"Low", 0.3}, {"Medium", 0.45}, {"High", 0.25}}},
      {"income", {{"Low", 0.35}, {"Middle", 0.45}, {"High", 0.2}}},
  };
  return spec;
}

OracleParams default_pandemic_oracle() {
  OracleParams p;
  p.categories = {
      {"go_work_prob", {1.2, -2.5}},        {"discretionary_outings_prob", {1.0, -3.0}},
      {"essentials_prob", {2.0, -1.5}},     {"transit_use_prob", {0.5, -2.5}},
      {"outdoor_leisure_prob", {0.8, -2.0}}, {"stay_home_prob", {0.0, 3.0}},
  };
  p.offsets = {
      {"risk_perception=High",
       {{"stay_home_prob", 0.6}, {"discretionary_outings_prob", -0.5}, {"transit_use_prob", -0.5}, {"go_work_prob", -0.2}}},
      {"risk_perception=Low",
       {{"stay_home_prob", -0.6}, {"discretionary_outings_prob", 0.5}, {"transit_use_prob", 0.4}, {"go_work_prob", 0.2}}},
      {"nationality=UAE National",
       {{"transit_use_prob", -0.8}, {"go_work_prob", -0.2}, {"discretionary_outings_prob", 0.2}}},
      {"occupation=Construction", {{"go_work_prob", 1.0}, {"stay_home_prob", -0.4}}},
      {"occupation=Healthcare", {{"go_work_prob", 1.2}}},
      {"occupation=Professional", {{"go_work_prob", -0.6}}},
      {"income=Low", {{"transit_use_prob", 0.6}}},
      {"income=High", {{"transit_use_prob", -0.4}, {"outdoor_leisure_prob", 0.3}}},
  };
  return p;
}

CalibrationParams default_ground_truth() {
  const CategorySchema schema = CategorySchema::pandemic_default();
  const std::map<std::string, std::pair<double, double>> truth{
      {"go_work_prob", {120.0, -75.0}},   {"discretionary_outings_prob", {140.0, -80.0}},
      {"essentials_prob", {80.0, -50.0}}, {"transit_use_prob", {130.0, -85.0}},
      {"outdoor_leisure_prob", {100.0, -60.0}}, {"stay_home_prob", {40.0, -10.0}},
  };
  CalibrationParams params;
  for (const auto& spec : schema.specs()) {
    const auto& [slope, intercept] = truth.at(spec.key);
    params.categories.push_back({spec.key, slope, intercept, spec.clip_min, spec.clip_max});
  }
  return params;
}

ObservationSeries synthetic_observations(std::span<const PolicyRecord> policy, const std::vector<Persona>& population,
                                         const OracleParams& oracle, const CategorySchema& schema,
                                         const CalibrationParams& truth, double noise_sigma, std::uint64_t seed) {
  if (population.empty()) throw ConfigError("synthetic observations need a population");
  if (!(noise_sigma >= 0.0)) throw ConfigError("noise sigma must be >= 0");
  oracle.validate(schema);
  ObservationSeries out{schema.keys(), {}};
  if (policy.empty()) return out;
  const DateRange all{policy.front().date, policy.back().date};
  const auto contexts = contexts_for(policy, std::span<const DateRange>(&all, 1));
  std::mt19937_64 rng(mix_seed(seed, 0x6f6273));
  std::vector<BehaviorVector> responses;
  for (const auto& ctx : contexts) {
    responses.clear();
    for (const auto& persona : population) responses.push_back(oracle_respond(oracle, persona, ctx, schema.keys()));
    const MetricVector y = apply_calibration(aggregate_mean(responses), truth);
    MetricRow row{ctx.date, y.values};
    if (noise_sigma > 0.0) {
      for (double& v : row.values) v += noise_sigma * gaussian(rng);
    }
    out.rows.push_back(std::move(row));
  }
  out.validate();
  return out;
}

}  // namespace policytwin
