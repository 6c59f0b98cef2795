#include "policytwin/run_config.hpp"

#include <fstream>
#include <sstream>

#include "policytwin/digest.hpp"
#include "policytwin/error.hpp"
#include "policytwin/persona.hpp"
#include "policytwin/prompt.hpp"

namespace policytwin {
namespace {

using nlohmann::json;

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  std::filesystem::path path(p);
  return path.is_absolute() ? path : (base / path).lexically_normal();
}

std::string read_file(const std::filesystem::path& path, const char* what) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError(std::string(what) + " not found: " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string required_string(const json& j, const char* section, const char* key) {
  if (!j.contains(key) || !j.at(key).is_string()) {
    throw ConfigError(std::string(section) + "." + key + " is required");
  }
  return j.at(key).get<std::string>();
}

DateRange parse_range(const json& split, const char* name) {
  if (!split.contains(name)) throw ConfigError(std::string("split.") + name + " is required");
  const auto& r = split.at(name);
  if (!r.is_array() || r.size() != 2 || !r[0].is_string() || !r[1].is_string()) {
    throw ConfigError(std::string("split.") + name + " must be [\"first\", \"last\"]");
  }
  try {
    return DateRange{parse_date(r[0].get<std::string>()), parse_date(r[1].get<std::string>())};
  } catch (const DataError& e) {
    throw ConfigError(std::string("split.") + name + ": " + e.what());
  }
}

std::map<std::string, std::string> parse_filters(const json& j) {
  if (!j.contains("filters")) return {};
  return j.at("filters").get<std::map<std::string, std::string>>();
}

}  // namespace

RunConfig parse_run_config(const json& doc, const std::filesystem::path& base_dir, const ConfigOverrides& overrides) {
  if (!doc.is_object()) throw ConfigError("run config must be a JSON object");
  RunConfig c;
  try {
    c.profile = doc.value("profile", std::string("default"));

    // Splits come first so an inconsistent config fails before anything else is read.
    if (!doc.contains("split")) throw ConfigError("split section is required");
    const auto& split = doc.at("split");
    c.split = TemporalSplit{parse_range(split, "train"), parse_range(split, "validation"), parse_range(split, "test")};
    c.split.validate();

    if (doc.contains("categories")) {
      c.schema = CategorySchema(doc.at("categories").get<std::vector<CategorySpec>>());
    } else {
      c.schema = CategorySchema::pandemic_default();
    }

    if (!doc.contains("paths")) throw ConfigError("paths section is required");
    const auto& paths = doc.at("paths");
    c.paths.policy_csv = resolve(base_dir, required_string(paths, "paths", "policy"));
    c.paths.observations_csv = resolve(base_dir, required_string(paths, "paths", "observations"));
    c.paths.population_spec = resolve(base_dir, required_string(paths, "paths", "population"));
    c.paths.prompt_template = resolve(base_dir, required_string(paths, "paths", "prompt"));
    c.paths.cache_dir = resolve(base_dir, paths.value("cache_dir", std::string("cache")));
    c.paths.output_dir = resolve(base_dir, paths.value("output_dir", std::string("out")));
    if (paths.contains("scenarios")) c.paths.scenarios = resolve(base_dir, paths.at("scenarios").get<std::string>());

    if (doc.contains("policy_columns")) {
      const auto& pc = doc.at("policy_columns");
      c.policy_columns.date = pc.value("date", c.policy_columns.date);
      c.policy_columns.stringency = pc.value("stringency", c.policy_columns.stringency);
      if (pc.contains("government_response")) c.policy_columns.government_response = pc.at("government_response").get<std::string>();
      c.policy_columns.filters = parse_filters(pc);
    }
    c.observation_columns = ObservationColumns::from_schema(c.schema);
    if (doc.contains("observation_columns")) {
      const auto& oc = doc.at("observation_columns");
      c.observation_columns.date = oc.value("date", c.observation_columns.date);
      c.observation_columns.filters = parse_filters(oc);
    }

    if (!doc.contains("engine")) throw ConfigError("engine section is required");
    c.engine = doc.at("engine").get<EngineConfig>();
    if (overrides.engine && *overrides.engine != c.engine.kind) {
      if (*overrides.engine == EngineKind::kReplayCache) c.engine.replay_of = c.engine.kind;
      c.engine.kind = *overrides.engine;
    }
    c.engine.validate();
    if (c.engine.oracle) c.engine.oracle->validate(c.schema);

    if (doc.contains("fit")) c.fit = doc.at("fit").get<FitConfig>();
    if (doc.contains("gbm")) c.gbm = doc.at("gbm").get<GbmHyper>();
    c.fit.validate();
    c.gbm.validate();

    const std::uint64_t base_seed = doc.value("seed", std::uint64_t{0});
    c.seeds = RunSeeds{base_seed, base_seed, base_seed};
    if (doc.contains("seeds")) {
      const auto& s = doc.at("seeds");
      c.seeds.population = s.value("population", base_seed);
      c.seeds.fit = s.value("fit", base_seed);
      c.seeds.gbm = s.value("gbm", base_seed);
    }
    if (overrides.seed) c.seeds = RunSeeds{*overrides.seed, *overrides.seed, *overrides.seed};
    c.fit.seed = c.seeds.fit;

    c.parallelism = overrides.parallelism.value_or(doc.value("parallelism", 1));
    if (c.parallelism < 1) throw ConfigError("parallelism must be >= 1");

    const std::string aggregation = doc.value("aggregation", std::string("mean"));
    if (aggregation == "mean") {
      c.aggregation = AggregationMode::kMean;
    } else if (aggregation == "weighted") {
      c.aggregation = AggregationMode::kWeighted;
    } else {
      throw ConfigError("aggregation must be 'mean' or 'weighted'");
    }

    c.focus_category = doc.value("focus_category", std::string(c.schema.index_of("stay_home_prob") ? "stay_home_prob" : ""));
    if (!c.focus_category.empty() && !c.schema.index_of(c.focus_category)) {
      throw ConfigError("focus_category '" + c.focus_category + "' is not in the schema");
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("run config: ") + e.what());
  }

  load_demographic_spec(c.paths.population_spec);
  const std::string prompt = read_file(c.paths.prompt_template, "prompt template");
  json inputs{{"policy", sha256_hex(read_file(c.paths.policy_csv, "policy file"))},
              {"observations", sha256_hex(read_file(c.paths.observations_csv, "observations file"))},
              {"population", sha256_hex(read_file(c.paths.population_spec, "population spec"))},
              {"prompt", sha256_hex(prompt)}};
  json material = describe_run_config(c);
  material["inputs"] = std::move(inputs);
  c.hash = short_digest(material.dump());
  return c;
}

RunConfig load_run_config(const std::filesystem::path& path, const ConfigOverrides& overrides) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open run config " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  return parse_run_config(doc, path.parent_path().empty() ? std::filesystem::path(".") : path.parent_path(), overrides);
}

json describe_run_config(const RunConfig& c) {
  json categories = json::array();
  for (const auto& s : c.schema.specs()) categories.push_back(s);
  json policy_columns{{"date", c.policy_columns.date},
                      {"stringency", c.policy_columns.stringency},
                      {"filters", c.policy_columns.filters}};
  if (c.policy_columns.government_response) policy_columns["government_response"] = *c.policy_columns.government_response;
  auto range = [](const DateRange& r) { return json::array({format_date(r.first), format_date(r.last)}); };
  return json{{"profile", c.profile},
              {"categories", categories},
              {"policy_columns", policy_columns},
              {"observation_columns", {{"date", c.observation_columns.date}, {"filters", c.observation_columns.filters}}},
              {"split", {{"train", range(c.split.train)}, {"validation", range(c.split.validation)}, {"test", range(c.split.test)}}},
              {"engine", {{"identity", engine_identity(c.engine)}, {"retry_limit", c.engine.retry_limit}}},
              {"fit", c.fit},
              {"gbm", c.gbm},
              {"seeds", {{"population", c.seeds.population}, {"fit", c.seeds.fit}, {"gbm", c.seeds.gbm}}},
              {"aggregation", c.aggregation == AggregationMode::kMean ? "mean" : "weighted"},
              {"focus_category", c.focus_category}};
}

}  // namespace policytwin
