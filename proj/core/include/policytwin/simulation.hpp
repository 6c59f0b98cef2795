#pragma once

#include <filesystem>
#include <memory>
#include <mutex>
#include <span>
#include <string>
#include <vector>

#include "policytwin/behavior.hpp"
#include "policytwin/engine.hpp"
#include "policytwin/ingest.hpp"
#include "policytwin/persona.hpp"
#include "policytwin/prompt.hpp"
#include "policytwin/response_cache.hpp"

namespace policytwin {

/// Population-level behavior for one date.
struct AggregatePoint {
  Date date;
  BehaviorVector pbar;
  std::size_t survivors = 0;  // agents whose query succeeded
  std::size_t failures = 0;
};

struct AggregateSeries {
  CategoryKeys keys;
  std::vector<AggregatePoint> points;

  const AggregatePoint* find(Date date) const;
  /// The probabilities as a MetricSeries (for alignment helpers).
  MetricSeries as_metric_series() const;
};

/// Columns: date, one per category key, agents. Comment lines carry `comments`.
void write_aggregate_series(const std::filesystem::path& path, const AggregateSeries& series,
                            std::span<const std::string> comments = {});
AggregateSeries read_aggregate_series(const std::filesystem::path& path, const CategoryKeys& keys);

enum class AggregationMode { kMean, kWeighted };

struct SimulatorOptions {
  int retry_limit = 3;
  int parallelism = 1;
  AggregationMode aggregation = AggregationMode::kMean;
};

struct SimulationStats {
  std::size_t cells = 0;
  std::size_t cache_hits = 0;
  std::size_t engine_attempts = 0;
  std::size_t failed_cells = 0;
  std::size_t dates_without_survivors = 0;
  std::vector<std::string> failure_notes;
};

/// Persona -> prompt -> engine -> aggregate, for one population.
///
/// A cell whose query still fails after retries is excluded from its date's
/// aggregate and noted in stats(). Cache misses in replay mode are not cell
/// failures: they abort the run.
class Simulator {
 public:
  Simulator(CategorySchema schema, std::vector<Persona> population, std::string prompt_template,
            std::shared_ptr<CognitiveEngine> engine, std::shared_ptr<ResponseCache> cache,
            SimulatorOptions options = {});

  /// Throws EngineError when no agent survives.
  AggregatePoint simulate(const SimContext& context);

  /// Dates whose every cell failed are skipped (and counted in stats()).
  AggregateSeries simulate_series(std::span<const SimContext> contexts);

  const CategorySchema& schema() const { return schema_; }
  const std::vector<Persona>& population() const { return population_; }
  const CognitiveEngine& engine() const { return *engine_; }
  SimulationStats stats() const;

 private:
  struct CellOutcome;
  std::vector<CellOutcome> run_cells(std::span<const SimContext> contexts);
  AggregatePoint reduce(Date date, std::span<const CellOutcome> cells) const;

  CategorySchema schema_;
  std::vector<Persona> population_;
  std::string template_;
  std::shared_ptr<CognitiveEngine> engine_;
  std::shared_ptr<ResponseCache> cache_;
  SimulatorOptions options_;
  mutable std::mutex stats_mutex_;
  SimulationStats stats_;
};

/// One context per policy record whose date lies in any of `ranges`.
/// The government response index, when present, goes into extras.
std::vector<SimContext> contexts_for(std::span<const PolicyRecord> policy,
                                     std::span<const DateRange> ranges);

}  // namespace policytwin
