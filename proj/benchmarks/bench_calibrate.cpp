#include <benchmark/benchmark.h>

#include <cmath>

#include "policytwin/calibrate.hpp"

namespace {

using namespace policytwin;

TrainingSet make_set(std::size_t days, std::size_t categories) {
  TrainingSet t;
  std::vector<std::string> names;
  for (std::size_t k = 0; k < categories; ++k) names.push_back("c" + std::to_string(k));
  t.keys = CategoryKeys(names);
  t.pbar.resize(categories);
  t.observed.resize(categories);
  const Date first = parse_date("2020-04-01");
  for (std::size_t i = 0; i < days; ++i) {
    t.dates.push_back(first + std::chrono::days(i));
    for (std::size_t k = 0; k < categories; ++k) {
      const double p = 0.5 + 0.45 * std::sin(0.05 * static_cast<double>(i) + static_cast<double>(k));
      t.pbar[k].push_back(p);
      t.observed[k].push_back(std::clamp(300.0 * p - 150.0, -100.0, 200.0));
    }
  }
  return t;
}

CategorySchema schema_for(const TrainingSet& t) {
  std::vector<CategorySpec> specs;
  for (const auto& k : t.keys) specs.push_back({k, k, k, 1, -100.0, 200.0});
  return CategorySchema(specs);
}

void BM_FitCalibration(benchmark::State& state) {
  const TrainingSet t = make_set(365, 6);
  const CategorySchema schema = schema_for(t);
  FitConfig config;
  config.trials = static_cast<int>(state.range(0));
  config.sampler = state.range(1) ? SamplerKind::kTpe : SamplerKind::kRandom;
  for (auto _ : state) benchmark::DoNotOptimize(fit_calibration(t, schema, config));
}
BENCHMARK(BM_FitCalibration)->Args({200, 1})->Args({200, 0})->Args({500, 1})->Unit(benchmark::kMillisecond);

void BM_TpeSuggest(benchmark::State& state) {
  const std::vector<Interval> space{{-400, 400}, {-200, 200}};
  TpeSampler sampler(space, 1);
  std::vector<Trial> history;
  for (int i = 0; i < state.range(0); ++i) {
    const double x = -400 + 800.0 * i / state.range(0), y = std::fmod(i * 37.0, 400.0) - 200;
    history.push_back({{x, y}, std::hypot(x - 50, y + 10)});
  }
  for (auto _ : state) benchmark::DoNotOptimize(sampler.suggest(history));
}
BENCHMARK(BM_TpeSuggest)->Arg(50)->Arg(200);

}  // namespace

BENCHMARK_MAIN();
