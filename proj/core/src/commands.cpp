#include "policytwin/commands.hpp"

#include <array>
#include <fstream>
#include <ostream>
#include <set>

#include "policytwin/ablation.hpp"
#include "policytwin/baseline.hpp"
#include "policytwin/calibrate.hpp"
#include "policytwin/counterfactual.hpp"
#include "policytwin/csv.hpp"
#include "policytwin/eval.hpp"
#include "policytwin/gbm.hpp"
#include "policytwin/persona.hpp"
#include "policytwin/prompt.hpp"

namespace policytwin {
namespace {

using nlohmann::json;
namespace fs = std::filesystem;

constexpr std::array<SplitName, 3> kSplits{SplitName::kTrain, SplitName::kValidation, SplitName::kTest};

// Hands out observation partitions and remembers which were read.
class ObservationGate {
 public:
  ObservationGate(const RunConfig& config, std::ostream& log) : config_(config), log_(log) {}

  ObservationSeries read(std::initializer_list<SplitName> splits) {
    load();
    ObservationSeries out{series_.keys, {}};
    for (const auto& row : series_.rows) {
      const auto which = config_.split.classify(row.date);
      if (!which) continue;
      for (auto s : splits) {
        if (*which == s) out.rows.push_back(row);
      }
    }
    for (auto s : splits) read_.insert(s);
    return out;
  }

  json splits_read() const {
    json out = json::array();
    for (auto s : kSplits) {
      if (read_.count(s)) out.push_back(to_string(s));
    }
    return out;
  }

 private:
  void load() {
    if (loaded_) return;
    ObservationLoad l = load_observations_csv(config_.paths.observations_csv, config_.observation_columns);
    for (const auto& note : l.report.notes) log_ << "observations: " << note << '\n';
    series_ = std::move(l.series);
    loaded_ = true;
  }

  const RunConfig& config_;
  std::ostream& log_;
  bool loaded_ = false;
  ObservationSeries series_;
  std::set<SplitName> read_;
};

std::vector<std::string> hash_comment(const RunConfig& config) { return {"config_hash=" + config.hash}; }

void check_hash(const std::string& found, const RunConfig& config, const fs::path& path, const char* producer) {
  if (found != config.hash) {
    throw ConfigError(path.string() + " was produced by a different configuration (hash " +
                      (found.empty() ? std::string("none") : found) + ", current " + config.hash + "); rerun " +
                      producer);
  }
}

fs::path require_artifact(const RunConfig& config, const char* name, const char* producer) {
  const fs::path p = config.paths.output_dir / name;
  if (!fs::exists(p)) throw ConfigError(p.string() + " not found; run " + std::string(producer) + " first");
  return p;
}

AggregateSeries load_aggregates(const RunConfig& config) {
  const fs::path p = require_artifact(config, "aggregate_series.csv", "simulate");
  const CsvTable t = read_csv(p);
  std::string found;
  for (const auto& c : t.comments) {
    if (c.rfind("config_hash=", 0) == 0) found = c.substr(12);
  }
  check_hash(found, config, p, "simulate");
  return read_aggregate_series(p, config.schema.keys());
}

CalibrationParams load_calibration(const RunConfig& config) {
  const fs::path p = require_artifact(config, "calibration.json", "calibrate");
  CalibrationArtifact a = read_calibration_artifact(p);
  check_hash(a.config_hash, config, p, "calibrate");
  return std::move(a.params);
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << text;
  if (!out) throw DataError("failed writing " + path.string());
}

void write_json(const fs::path& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

json stats_json(const SimulationStats& s) {
  return json{{"cells", s.cells},
              {"cache_hits", s.cache_hits},
              {"engine_attempts", s.engine_attempts},
              {"failed_cells", s.failed_cells},
              {"dates_without_survivors", s.dates_without_survivors},
              {"failures", s.failure_notes}};
}

void write_manifest(const RunConfig& config, const std::string& command, const json& splits_read,
                    const json& outputs, json extra = json::object()) {
  json m{{"command", command},
         {"config_hash", config.hash},
         {"profile", config.profile},
         {"engine", engine_identity(config.engine)},
         {"seeds", {{"population", config.seeds.population}, {"fit", config.seeds.fit}, {"gbm", config.seeds.gbm}}},
         {"observation_splits_read", splits_read},
         {"outputs", outputs}};
  for (auto& [k, v] : extra.items()) m[k] = v;
  write_json(config.paths.output_dir / ("manifest_" + command + ".json"), m);
}

std::vector<PolicyRecord> load_policy(const RunConfig& config, std::ostream& log) {
  PolicyLoad l = load_policy_csv(config.paths.policy_csv, config.policy_columns);
  for (const auto& note : l.report.notes) log << "policy: " << note << '\n';
  if (l.records.empty()) throw DataError(config.paths.policy_csv.string() + ": no usable policy rows");
  return std::move(l.records);
}

std::shared_ptr<ResponseCache> open_cache(const RunConfig& config, std::ostream& log) {
  fs::create_directories(config.paths.cache_dir);
  auto cache = std::make_shared<ResponseCache>(config.paths.cache_dir / "responses.jsonl");
  if (cache->skipped_lines() > 0) log << "cache: skipped " << cache->skipped_lines() << " unreadable lines\n";
  return cache;
}

SimulatorOptions simulator_options(const RunConfig& config) {
  return SimulatorOptions{config.engine.retry_limit, config.parallelism, config.aggregation};
}

Simulator make_simulator(const RunConfig& config, std::vector<Persona> population, std::ostream& log) {
  return Simulator(config.schema, std::move(population), load_prompt_template(config.paths.prompt_template),
                   make_engine(config.engine), open_cache(config, log), simulator_options(config));
}

void log_stats(std::ostream& log, const SimulationStats& s) {
  log << "cells " << s.cells << ", cache hits " << s.cache_hits << ", engine attempts " << s.engine_attempts
      << ", failed cells " << s.failed_cells << '\n';
  for (const auto& f : s.failure_notes) log << "  excluded: " << f << '\n';
}

MetricSeries restrict(const MetricSeries& s, const std::set<Date>& dates) {
  MetricSeries out{s.keys, {}};
  for (const auto& r : s.rows) {
    if (dates.count(r.date)) out.rows.push_back(r);
  }
  return out;
}

}  // namespace

void cmd_simulate(const RunConfig& config, std::ostream& log) {
  fs::create_directories(config.paths.output_dir);
  const auto policy = load_policy(config, log);
  const DemographicSpec spec = load_demographic_spec(config.paths.population_spec);
  std::vector<Persona> population = sample_population(spec, config.seeds.population);
  write_population(config.paths.output_dir / "population.json", population);

  Simulator sim = make_simulator(config, population, log);
  const std::array<DateRange, 3> ranges{config.split.train, config.split.validation, config.split.test};
  const auto contexts = contexts_for(policy, ranges);
  if (contexts.empty()) throw DataError("no policy records fall inside the split ranges");
  log << "simulating " << population.size() << " agents over " << contexts.size() << " dates\n";
  const AggregateSeries series = sim.simulate_series(contexts);
  write_aggregate_series(config.paths.output_dir / "aggregate_series.csv", series, hash_comment(config));
  log_stats(log, sim.stats());
  write_manifest(config, "simulate", json::array(), {"aggregate_series.csv", "population.json"},
                 {{"stats", stats_json(sim.stats())}, {"dates", series.points.size()}});
}

void cmd_calibrate(const RunConfig& config, std::ostream& log) {
  const AggregateSeries series = load_aggregates(config);
  ObservationGate gate(config, log);
  const ObservationSeries train_obs = gate.read({SplitName::kTrain});
  MetricSeries probs{series.keys, {}};
  for (const auto& p : series.points) {
    if (config.split.train.contains(p.date)) probs.rows.push_back({p.date, {p.pbar.values().begin(), p.pbar.values().end()}});
  }
  const TrainingSet data = align_training_set(probs, train_obs);
  log << "fitting calibration on " << data.size() << " training dates\n";
  const FitResult fit = fit_calibration(data, config.schema, config.fit);
  write_calibration_artifact(config.paths.output_dir / "calibration.json",
                             CalibrationArtifact{fit.params, fit.report, config.hash});
  write_text(config.paths.output_dir / "fit_report.txt", fit.report.summary() + "config_hash " + config.hash + "\n");
  log << fit.report.summary();
  write_manifest(config, "calibrate", gate.splits_read(), {"calibration.json", "fit_report.txt"},
                 {{"training_dates", data.size()}});
}

void cmd_evaluate(const RunConfig& config, std::ostream& log) {
  const AggregateSeries series = load_aggregates(config);
  const CalibrationParams params = load_calibration(config);
  const auto policy = load_policy(config, log);
  const PolicyIndex index(policy);
  ObservationGate gate(config, log);
  const CategoryKeys& keys = config.schema.keys();

  const ObservationSeries train_obs = gate.read({SplitName::kTrain});
  std::vector<FeatureVector> features;
  std::vector<std::vector<double>> targets;
  for (const auto& row : train_obs.rows) {
    if (auto f = build_features(index, row.date)) {
      features.push_back(*f);
      targets.push_back(row.values);
    }
  }
  if (features.empty()) throw DataError("no training dates have complete lagged policy features");
  log << "fitting gbm on " << features.size() << " training dates\n";
  const GbmModel gbm = fit_gbm(features, targets, keys, config.gbm, config.seeds.gbm);
  write_gbm_model(config.paths.output_dir / "gbm_model.json", gbm, config.hash);

  json outputs = json::array({"gbm_model.json"});
  json summary = json::object();
  for (SplitName split : {SplitName::kValidation, SplitName::kTest}) {
    const std::string name(to_string(split));
    const DateRange& range = config.split.range(split);
    const ObservationSeries history =
        split == SplitName::kValidation ? gate.read({SplitName::kTrain, SplitName::kValidation})
                                        : gate.read({SplitName::kTrain, SplitName::kValidation, SplitName::kTest});
    ObservationSeries target_obs{keys, {}};
    for (const auto& r : history.rows) {
      if (range.contains(r.date)) target_obs.rows.push_back(r);
    }

    MetricSeries twin{keys, {}}, boosted{keys, {}};
    for (const auto& p : series.points) {
      if (!range.contains(p.date)) continue;
      twin.rows.push_back({p.date, apply_calibration(p.pbar, params).values});
      if (auto f = build_features(index, p.date)) boosted.rows.push_back({p.date, predict_gbm(gbm, *f)});
    }
    std::vector<Date> candidates;
    for (const auto& r : target_obs.rows) {
      if (!history.rows.empty() && history.rows.front().date < r.date) candidates.push_back(r.date);
    }
    const MetricSeries persistence = persistence_forecast(history, candidates);

    std::set<Date> common;
    for (const auto& r : target_obs.rows) {
      if (twin.find(r.date) && boosted.find(r.date) && persistence.find(r.date)) common.insert(r.date);
    }
    if (common.empty()) throw DataError("no " + name + " dates are covered by every method");
    const ObservationSeries obs = restrict(target_obs, common);
    const MetricSeries twin_c = restrict(twin, common), gbm_c = restrict(boosted, common),
                       pers_c = restrict(persistence, common);
    const std::vector<MethodScores> methods{score_method("twin", twin_c, obs), score_method("gbm", gbm_c, obs),
                                            score_method("persistence", pers_c, obs)};
    const EvalReport vs_gbm = compare(methods[0], methods[1], name);
    const EvalReport vs_persistence = compare(methods[0], methods[2], name);

    std::string text = format_eval_table(config.schema, methods, "twin", "gbm", "RMSE on the " + name + " split (twin vs gbm)");
    text += "\n" + format_eval_table(config.schema, methods, "twin", "persistence",
                                     "RMSE on the " + name + " split (twin vs persistence)");
    text += "config_hash " + config.hash + "\n";
    write_text(config.paths.output_dir / ("eval_" + name + ".txt"), text);
    write_json(config.paths.output_dir / ("eval_" + name + ".json"),
               json{{"config_hash", config.hash}, {"comparisons", {vs_gbm, vs_persistence}}});
    write_plot_csv(config.paths.output_dir / ("plot_" + name + ".csv"), obs,
                   {{"twin", &twin_c}, {"gbm", &gbm_c}, {"persistence", &pers_c}}, hash_comment(config));
    log << text;
    outputs.push_back("eval_" + name + ".txt");
    outputs.push_back("eval_" + name + ".json");
    outputs.push_back("plot_" + name + ".csv");
    summary[name] = {{"dates", common.size()},
                     {"twin_macro_rmse", methods[0].macro_rmse},
                     {"gbm_macro_rmse", methods[1].macro_rmse},
                     {"persistence_macro_rmse", methods[2].macro_rmse}};
  }
  write_manifest(config, "evaluate", gate.splits_read(), outputs, {{"summary", summary}});
}

void cmd_counterfactual(const RunConfig& config, const std::optional<fs::path>& scenario_file, std::ostream& log) {
  const std::optional<fs::path> file = scenario_file ? scenario_file : config.paths.scenarios;
  if (!file) throw ConfigError("no scenario file: pass --scenarios or set paths.scenarios");
  const std::vector<Scenario> scenarios = load_scenarios(*file);
  const CalibrationParams params = load_calibration(config);
  const DemographicSpec spec = load_demographic_spec(config.paths.population_spec);
  Simulator sim = make_simulator(config, sample_population(spec, config.seeds.population), log);
  DigitalTwin twin(sim, params);
  const CounterfactualReport report = run_counterfactuals(twin, scenarios, config.schema, config.focus_category);
  const std::string text = format_counterfactual_report(report, config.schema) + "config_hash " + config.hash + "\n";
  write_text(config.paths.output_dir / "counterfactual.txt", text);
  json j = report;
  j["config_hash"] = config.hash;
  write_json(config.paths.output_dir / "counterfactual.json", j);
  log << text;
  log_stats(log, sim.stats());
  write_manifest(config, "counterfactual", json::array(), {"counterfactual.txt", "counterfactual.json"},
                 {{"stats", stats_json(sim.stats())}});
}

void cmd_ablate(const RunConfig& config, std::ostream& log) {
  fs::create_directories(config.paths.output_dir);
  ObservationGate gate(config, log);
  AblationInputs in;
  in.schema = config.schema;
  in.population = load_demographic_spec(config.paths.population_spec);
  in.population_seed = config.seeds.population;
  in.prompt_template = load_prompt_template(config.paths.prompt_template);
  in.engine = make_engine(config.engine);
  in.cache = open_cache(config, log);
  in.simulator = simulator_options(config);
  in.fit = config.fit;
  in.policy = load_policy(config, log);
  in.observations = gate.read({SplitName::kTrain, SplitName::kTest});
  in.split = config.split;
  in.eval_split = SplitName::kTest;
  const auto results = run_ablation_matrix(in);
  const std::string text = "Ablations (macro RMSE on the test split)\n" + format_ablation_table(results) +
                           "config_hash " + config.hash + "\n";
  write_text(config.paths.output_dir / "ablation.txt", text);
  write_json(config.paths.output_dir / "ablation.json", json{{"config_hash", config.hash}, {"variants", results}});
  log << text;
  write_manifest(config, "ablate", gate.splits_read(), {"ablation.txt", "ablation.json"});
}

int run_command(std::string_view command, const RunConfig& config, const std::optional<fs::path>& scenario_file,
                std::ostream& log, std::ostream& err) {
  try {
    if (command == "simulate") {
      cmd_simulate(config, log);
    } else if (command == "calibrate") {
      cmd_calibrate(config, log);
    } else if (command == "evaluate") {
      cmd_evaluate(config, log);
    } else if (command == "counterfactual") {
      cmd_counterfactual(config, scenario_file, log);
    } else if (command == "ablate") {
      cmd_ablate(config, log);
    } else {
      throw ConfigError("unknown command '" + std::string(command) + "'");
    }
    return static_cast<int>(ExitCode::kSuccess);
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return static_cast<int>(e.code());
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << '\n';
    return static_cast<int>(ExitCode::kData);
  }
}

}  // namespace policytwin
