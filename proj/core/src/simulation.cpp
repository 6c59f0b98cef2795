#include "policytwin/simulation.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <fstream>
#include <thread>

#include "policytwin/aggregate.hpp"
#include "policytwin/csv.hpp"
#include "policytwin/error.hpp"

namespace policytwin {

const AggregatePoint* AggregateSeries::find(Date date) const {
  auto it = std::lower_bound(points.begin(), points.end(), date,
                             [](const AggregatePoint& p, Date d) { return p.date < d; });
  return (it != points.end() && it->date == date) ? &*it : nullptr;
}

MetricSeries AggregateSeries::as_metric_series() const {
  MetricSeries out{keys, {}};
  out.rows.reserve(points.size());
  for (const auto& p : points) out.rows.push_back({p.date, {p.pbar.values().begin(), p.pbar.values().end()}});
  return out;
}

void write_aggregate_series(const std::filesystem::path& path, const AggregateSeries& series,
                            std::span<const std::string> comments) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  for (const auto& c : comments) out << '#' << c << '\n';
  out << "date";
  for (const auto& k : series.keys) out << ',' << csv_escape(k);
  out << ",agents\n";
  for (const auto& p : series.points) {
    out << format_date(p.date);
    for (double v : p.pbar.values()) out << ',' << format_number(v);
    out << ',' << p.survivors << '\n';
  }
  if (!out) throw DataError("failed writing " + path.string());
}

AggregateSeries read_aggregate_series(const std::filesystem::path& path, const CategoryKeys& keys) {
  const CsvTable table = read_csv(path);
  const auto date_col = table.column("date");
  const auto agents_col = table.column("agents");
  if (!date_col || !agents_col) throw DataError(path.string() + ": not an aggregate series file");
  std::vector<std::size_t> cols;
  for (const auto& k : keys) {
    auto c = table.column(k);
    if (!c) throw DataError(path.string() + ": missing category column '" + k + "'");
    cols.push_back(*c);
  }
  AggregateSeries series{keys, {}};
  for (const auto& row : table.rows) {
    std::vector<double> probs;
    for (auto c : cols) {
      auto v = parse_number(row[c]);
      if (!v) throw DataError(path.string() + ": bad probability '" + row[c] + "'");
      probs.push_back(*v);
    }
    auto agents = parse_number(row[*agents_col]);
    series.points.push_back(AggregatePoint{parse_date(row[*date_col]), BehaviorVector(keys, std::move(probs)),
                                           static_cast<std::size_t>(agents.value_or(0.0)), 0});
  }
  for (std::size_t i = 1; i < series.points.size(); ++i) {
    if (!(series.points[i - 1].date < series.points[i].date)) {
      throw DataError(path.string() + ": dates not strictly increasing");
    }
  }
  return series;
}

struct Simulator::CellOutcome {
  std::optional<BehaviorVector> vector;
  bool from_cache = false;
  int attempts = 0;
  std::string error;
};

Simulator::Simulator(CategorySchema schema, std::vector<Persona> population, std::string prompt_template,
                     std::shared_ptr<CognitiveEngine> engine, std::shared_ptr<ResponseCache> cache,
                     SimulatorOptions options)
    : schema_(std::move(schema)),
      population_(std::move(population)),
      template_(std::move(prompt_template)),
      engine_(std::move(engine)),
      cache_(std::move(cache)),
      options_(options) {
  if (population_.empty()) throw ConfigError("simulator needs at least one persona");
  if (!engine_) throw ConfigError("simulator needs an engine");
  if (!cache_) cache_ = std::make_shared<ResponseCache>();
  // Personas are reduced in id order regardless of how they were supplied.
  std::stable_sort(population_.begin(), population_.end(),
                   [](const Persona& a, const Persona& b) { return a.id < b.id; });
}

std::vector<Simulator::CellOutcome> Simulator::run_cells(std::span<const SimContext> contexts) {
  const std::size_t n_personas = population_.size();
  const std::size_t total = contexts.size() * n_personas;
  std::vector<CellOutcome> cells(total);
  std::atomic<std::size_t> next{0};
  std::exception_ptr fatal;
  std::mutex fatal_mutex;
  std::atomic<bool> stop{false};

  auto worker = [&] {
    for (std::size_t i = next++; i < total && !stop; i = next++) {
      const SimContext& ctx = contexts[i / n_personas];
      const Persona& persona = population_[i % n_personas];
      try {
        const PromptText prompt = render_prompt(persona, ctx, template_, &schema_.keys());
        const EngineRequest request{persona, ctx, prompt, schema_.keys()};
        QueryResult r = query(*engine_, request, *cache_, options_.retry_limit);
        cells[i].vector = std::move(r.vector);
        cells[i].from_cache = r.from_cache;
        cells[i].attempts = r.attempts;
      } catch (const CacheMissError&) {
        std::lock_guard lock(fatal_mutex);
        if (!fatal) fatal = std::current_exception();
        stop = true;
      } catch (const EngineError& e) {
        cells[i].error = e.what();
        cells[i].attempts = options_.retry_limit + 1;
      } catch (...) {
        std::lock_guard lock(fatal_mutex);
        if (!fatal) fatal = std::current_exception();
        stop = true;
      }
    }
  };

  const int threads = std::max(1, std::min<int>(options_.parallelism, static_cast<int>(total)));
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
  }
  if (fatal) std::rethrow_exception(fatal);

  std::lock_guard lock(stats_mutex_);
  for (const auto& c : cells) {
    ++stats_.cells;
    if (c.from_cache) ++stats_.cache_hits;
    stats_.engine_attempts += static_cast<std::size_t>(c.attempts);
    if (!c.vector) {
      ++stats_.failed_cells;
      stats_.failure_notes.push_back(c.error);
    }
  }
  return cells;
}

AggregatePoint Simulator::reduce(Date date, std::span<const CellOutcome> cells) const {
  std::vector<BehaviorVector> vectors;
  std::vector<double> weights;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (!cells[i].vector) continue;
    vectors.push_back(*cells[i].vector);
    weights.push_back(population_[i].weight);
  }
  if (vectors.empty()) throw EngineError("no agent survived on " + format_date(date));
  BehaviorVector pbar = options_.aggregation == AggregationMode::kWeighted ? aggregate_weighted(vectors, weights)
                                                                          : aggregate_mean(vectors);
  return AggregatePoint{date, std::move(pbar), vectors.size(), cells.size() - vectors.size()};
}

AggregatePoint Simulator::simulate(const SimContext& context) {
  const auto cells = run_cells(std::span<const SimContext>(&context, 1));
  return reduce(context.date, cells);
}

AggregateSeries Simulator::simulate_series(std::span<const SimContext> contexts) {
  const auto cells = run_cells(contexts);
  AggregateSeries series{schema_.keys(), {}};
  const std::size_t n = population_.size();
  for (std::size_t d = 0; d < contexts.size(); ++d) {
    const std::span<const CellOutcome> slice(cells.data() + d * n, n);
    const bool any = std::any_of(slice.begin(), slice.end(), [](const CellOutcome& c) { return c.vector.has_value(); });
    if (!any) {
      std::lock_guard lock(stats_mutex_);
      ++stats_.dates_without_survivors;
      continue;
    }
    series.points.push_back(reduce(contexts[d].date, slice));
  }
  std::stable_sort(series.points.begin(), series.points.end(),
                   [](const AggregatePoint& a, const AggregatePoint& b) { return a.date < b.date; });
  return series;
}

SimulationStats Simulator::stats() const {
  std::lock_guard lock(stats_mutex_);
  return stats_;
}

std::vector<SimContext> contexts_for(std::span<const PolicyRecord> policy, std::span<const DateRange> ranges) {
  std::vector<SimContext> out;
  for (const auto& rec : policy) {
    const bool wanted = std::any_of(ranges.begin(), ranges.end(), [&](const DateRange& r) { return r.contains(rec.date); });
    if (!wanted) continue;
    SimContext ctx{rec.date, rec.stringency, {}};
    if (rec.government_response) ctx.extra["government_response"] = format_number(*rec.government_response);
    out.push_back(std::move(ctx));
  }
  return out;
}

}  // namespace policytwin
