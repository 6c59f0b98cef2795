#include <benchmark/benchmark.h>

#include "policytwin/aggregate.hpp"
#include "policytwin/digest.hpp"
#include "policytwin/response_parser.hpp"
#include "policytwin/simulation.hpp"
#include "policytwin/synthetic.hpp"

namespace {

using namespace policytwin;

void BM_Aggregate(benchmark::State& state) {
  const auto keys = CategorySchema::pandemic_default().keys();
  std::vector<BehaviorVector> vs;
  std::mt19937_64 rng(5);
  for (int i = 0; i < state.range(0); ++i) {
    std::vector<double> p;
    for (std::size_t k = 0; k < keys.size(); ++k) p.push_back(unit_interval(rng()));
    vs.emplace_back(keys, std::move(p));
  }
  for (auto _ : state) benchmark::DoNotOptimize(aggregate_mean(vs));
}
BENCHMARK(BM_Aggregate)->Arg(10)->Arg(1000);

void BM_ParseResponse(benchmark::State& state) {
  const auto keys = CategorySchema::pandemic_default().keys();
  const std::string raw =
      "Here is my estimate:\n```json\n{\"go_work_prob\": 0.31, \"discretionary_outings_prob\": 0.12, "
      "\"essentials_prob\": 0.64, \"transit_use_prob\": 0.08, \"outdoor_leisure_prob\": 0.22, "
      "\"stay_home_prob\": 0.81, \"note\": \"cautious\"}\n```";
  for (auto _ : state) benchmark::DoNotOptimize(parse_response(raw, keys));
}
BENCHMARK(BM_ParseResponse);

void BM_SimulateOracleYear(benchmark::State& state) {
  const auto schema = CategorySchema::pandemic_default();
  const Date first = parse_date("2020-03-01");
  const auto policy = synthetic_policy_series(first, first + std::chrono::days(364), 7);
  const DateRange all{policy.front().date, policy.back().date};
  const auto contexts = contexts_for(policy, std::span<const DateRange>(&all, 1));
  const auto people = sample_population(default_pandemic_population(), 7);
  for (auto _ : state) {
    Simulator sim(schema, people, "{persona_id} {occupation} {stringency}",
                  std::make_shared<OracleEngine>(default_pandemic_oracle()), nullptr,
                  SimulatorOptions{3, static_cast<int>(state.range(0)), AggregationMode::kMean});
    benchmark::DoNotOptimize(sim.simulate_series(contexts));
  }
}
BENCHMARK(BM_SimulateOracleYear)->Arg(1)->Arg(4)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
