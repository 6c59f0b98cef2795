#include <benchmark/benchmark.h>

#include <cmath>

#include "policytwin/baseline.hpp"
#include "policytwin/gbm.hpp"
#include "policytwin/synthetic.hpp"

namespace {

using namespace policytwin;

struct Data {
  std::vector<FeatureVector> features;
  std::vector<std::vector<double>> targets;
};

Data make_data(int days) {
  const Date first = parse_date("2020-01-01");
  const auto policy = synthetic_policy_series(first, first + std::chrono::days(days + 28), 3);
  const PolicyIndex index(policy);
  Data d;
  for (const auto& r : policy) {
    if (auto f = build_features(index, r.date)) {
      d.features.push_back(*f);
      std::vector<double> row;
      for (int k = 0; k < 6; ++k) row.push_back((k + 1) * f->lags[k % 5] - 40.0 + std::sin(f->days_since_start * 0.1));
      d.targets.push_back(std::move(row));
    }
  }
  return d;
}

void BM_FitGbm(benchmark::State& state) {
  const Data d = make_data(static_cast<int>(state.range(0)));
  const auto keys = CategorySchema::pandemic_default().keys();
  GbmHyper hyper;
  for (auto _ : state) benchmark::DoNotOptimize(fit_gbm(d.features, d.targets, keys, hyper, 7));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(d.features.size()));
}
BENCHMARK(BM_FitGbm)->Arg(365)->Arg(730)->Unit(benchmark::kMillisecond);

void BM_PredictGbm(benchmark::State& state) {
  const Data d = make_data(365);
  const auto model = fit_gbm(d.features, d.targets, CategorySchema::pandemic_default().keys(), GbmHyper{}, 7);
  std::size_t i = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(predict_gbm(model, d.features[i]));
    i = (i + 1) % d.features.size();
  }
}
BENCHMARK(BM_PredictGbm);

}  // namespace

BENCHMARK_MAIN();
