#include "policytwin/engine.hpp"

#include <cmath>
#include <numbers>

#include "policytwin/csv.hpp"
#include "policytwin/digest.hpp"
#include "policytwin/error.hpp"
#include "policytwin/response_parser.hpp"

namespace policytwin {

std::string_view to_string(EngineKind kind) {
  switch (kind) {
    case EngineKind::kRemoteHttp: return "remote";
    case EngineKind::kSyntheticOracle: return "oracle";
    case EngineKind::kReplayCache: return "replay";
  }
  return "?";
}

EngineKind parse_engine_kind(std::string_view text) {
  if (text == "remote" || text == "remote-http") return EngineKind::kRemoteHttp;
  if (text == "oracle" || text == "synthetic-oracle") return EngineKind::kSyntheticOracle;
  if (text == "replay" || text == "replay-cache") return EngineKind::kReplayCache;
  throw ConfigError("unknown engine kind '" + std::string(text) + "' (expected remote, oracle or replay)");
}

void OracleParams::validate(const CategorySchema& schema) const {
  if (!(noise_scale >= 0.0) || !std::isfinite(noise_scale)) throw ConfigError("oracle noise_scale must be >= 0");
  for (const auto& spec : schema.specs()) {
    auto it = categories.find(spec.key);
    if (it == categories.end()) throw ConfigError("oracle has no parameters for category '" + spec.key + "'");
    if (it->second.slope * spec.direction < 0.0) {
      throw ConfigError("oracle slope for '" + spec.key + "' contradicts the category's direction");
    }
  }
  for (const auto& [selector, per_category] : offsets) {
    if (selector.find('=') == std::string::npos) {
      throw ConfigError("oracle offset selector '" + selector + "' must look like attribute=value");
    }
    for (const auto& [key, v] : per_category) {
      if (!schema.index_of(key)) throw ConfigError("oracle offset for unknown category '" + key + "'");
    }
  }
}

std::string OracleParams::digest() const {
  nlohmann::json j = *this;
  return short_digest(j.dump());
}

void to_json(nlohmann::json& j, const OracleParams& p) {
  j = nlohmann::json::object();
  for (const auto& [key, c] : p.categories) j["categories"][key] = {{"intercept", c.intercept}, {"slope", c.slope}};
  j["offsets"] = p.offsets;
  j["noise_scale"] = p.noise_scale;
}

void from_json(const nlohmann::json& j, OracleParams& p) {
  p.categories.clear();
  for (const auto& [key, c] : j.at("categories").items()) {
    p.categories[key] = {c.value("intercept", 0.0), c.value("slope", 0.0)};
  }
  p.offsets = j.value("offsets", std::map<std::string, std::map<std::string, double>>{});
  p.noise_scale = j.value("noise_scale", 0.0);
}

double logistic(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

namespace {

// Standard normal from a digest of the cell, so noisy oracle output is still
// a pure function of (persona content, context, category).
double cell_normal(const Persona& persona, const SimContext& context, const std::string& key) {
  const std::string hex = sha256_hex(canonical_attributes(persona) + '\x1e' + context.digest() + '\x1e' + key);
  const std::uint64_t a = std::stoull(hex.substr(0, 16), nullptr, 16);
  const std::uint64_t b = std::stoull(hex.substr(16, 16), nullptr, 16);
  const double u1 = (static_cast<double>(a >> 11) + 1.0) * 0x1.0p-53;  // (0,1]
  const double u2 = unit_interval(b);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

}  // namespace

BehaviorVector oracle_respond(const OracleParams& params, const Persona& persona, const SimContext& context,
                              const CategoryKeys& keys) {
  std::vector<double> probs;
  probs.reserve(keys.size());
  for (const auto& key : keys) {
    auto it = params.categories.find(key);
    if (it == params.categories.end()) throw ConfigError("oracle has no parameters for category '" + key + "'");
    double arg = it->second.intercept + it->second.slope * context.stringency / 100.0;
    for (const auto& [name, value] : persona.attributes) {
      auto sel = params.offsets.find(name + "=" + value);
      if (sel == params.offsets.end()) continue;
      if (auto off = sel->second.find(key); off != sel->second.end()) arg += off->second;
    }
    if (params.noise_scale > 0.0) arg += params.noise_scale * cell_normal(persona, context, key);
    probs.push_back(logistic(arg));
  }
  return BehaviorVector(keys, std::move(probs));
}

void to_json(nlohmann::json& j, const RemoteEndpoint& e) {
  j = nlohmann::json{{"url", e.url},
                     {"model_name", e.model_name},
                     {"decoding", e.decoding},
                     {"body_template", e.body_template},
                     {"model_pointer", e.model_pointer},
                     {"prompt_pointer", e.prompt_pointer},
                     {"decoding_pointer", e.decoding_pointer},
                     {"response_pointer", e.response_pointer},
                     {"headers", e.headers},
                     {"api_key_header", e.api_key_header},
                     {"api_key_prefix", e.api_key_prefix},
                     {"timeout_seconds", e.timeout_seconds}};
  if (e.api_key_env) j["api_key_env"] = *e.api_key_env;
}

void from_json(const nlohmann::json& j, RemoteEndpoint& e) {
  RemoteEndpoint d;
  e.url = j.value("url", d.url);
  e.model_name = j.value("model_name", d.model_name);
  e.decoding = j.value("decoding", d.decoding);
  e.body_template = j.value("body_template", d.body_template);
  e.model_pointer = j.value("model_pointer", d.model_pointer);
  e.prompt_pointer = j.value("prompt_pointer", d.prompt_pointer);
  e.decoding_pointer = j.value("decoding_pointer", d.decoding_pointer);
  e.response_pointer = j.value("response_pointer", d.response_pointer);
  e.headers = j.value("headers", d.headers);
  if (j.contains("api_key_env")) e.api_key_env = j.at("api_key_env").get<std::string>();
  e.api_key_header = j.value("api_key_header", d.api_key_header);
  e.api_key_prefix = j.value("api_key_prefix", d.api_key_prefix);
  e.timeout_seconds = j.value("timeout_seconds", d.timeout_seconds);
}

void EngineConfig::validate() const {
  if (retry_limit < 0 || retry_limit > 20) throw ConfigError("engine retry_limit must be in [0, 20]");
  auto need = [&](EngineKind k) {
    if (k == EngineKind::kRemoteHttp) {
      if (!remote || remote->url.empty() || remote->model_name.empty()) {
        throw ConfigError("remote engine requires engine.remote.url and engine.remote.model_name");
      }
    } else if (k == EngineKind::kSyntheticOracle) {
      if (!oracle) throw ConfigError("oracle engine requires an engine.oracle section");
    }
  };
  if (kind == EngineKind::kReplayCache) {
    if (replay_of == EngineKind::kReplayCache) throw ConfigError("replay_of must name a remote or oracle engine");
    need(replay_of);
  } else {
    need(kind);
  }
}

void to_json(nlohmann::json& j, const EngineConfig& c) {
  j = nlohmann::json{{"kind", to_string(c.kind)}, {"retry_limit", c.retry_limit}};
  if (c.kind == EngineKind::kReplayCache) j["replay_of"] = to_string(c.replay_of);
  if (c.remote) j["remote"] = *c.remote;
  if (c.oracle) j["oracle"] = *c.oracle;
}

void from_json(const nlohmann::json& j, EngineConfig& c) {
  c.kind = parse_engine_kind(j.value("kind", std::string("oracle")));
  c.retry_limit = j.value("retry_limit", 3);
  if (j.contains("remote")) c.remote = j.at("remote").get<RemoteEndpoint>();
  if (j.contains("oracle")) c.oracle = j.at("oracle").get<OracleParams>();
  if (j.contains("replay_of")) {
    c.replay_of = parse_engine_kind(j.at("replay_of").get<std::string>());
  } else {
    c.replay_of = c.oracle ? EngineKind::kSyntheticOracle : EngineKind::kRemoteHttp;
  }
}

std::string CognitiveEngine::respond(const EngineRequest& request) {
  ++calls_;
  return do_respond(request);
}

OracleEngine::OracleEngine(OracleParams params)
    : params_(std::move(params)), identity_("oracle:" + params_.digest()) {}

std::string OracleEngine::do_respond(const EngineRequest& request) {
  const BehaviorVector v = oracle_respond(params_, request.persona, request.context, request.keys);
  nlohmann::json j = nlohmann::json::object();
  for (std::size_t k = 0; k < v.size(); ++k) j[request.keys[k]] = v[k];
  return j.dump();
}

ReplayEngine::ReplayEngine(std::string replayed_identity) : identity_(std::move(replayed_identity)) {}

std::string ReplayEngine::do_respond(const EngineRequest& request) {
  throw CacheMissError("replay engine has no response for persona " + request.persona.id + " on " +
                       format_date(request.context.date));
}

std::string remote_identity(const RemoteEndpoint& e) {
  return "remote:" + e.model_name + ":" + short_digest(e.decoding.dump());
}

std::string engine_identity(const EngineConfig& config) {
  const EngineKind k = config.kind == EngineKind::kReplayCache ? config.replay_of : config.kind;
  if (k == EngineKind::kRemoteHttp) return remote_identity(config.remote.value());
  return "oracle:" + config.oracle.value().digest();
}

std::shared_ptr<CognitiveEngine> make_engine(const EngineConfig& config) {
  config.validate();
  switch (config.kind) {
    case EngineKind::kSyntheticOracle: return std::make_shared<OracleEngine>(*config.oracle);
    case EngineKind::kRemoteHttp: return std::make_shared<RemoteHttpEngine>(*config.remote);
    case EngineKind::kReplayCache: return std::make_shared<ReplayEngine>(engine_identity(config));
  }
  throw ConfigError("unsupported engine kind");
}

std::string cache_key(std::string_view identity, const EngineRequest& request) {
  std::string material(identity);
  material += '\x1f';
  material += request.prompt.text;
  material += '\x1f';
  for (const auto& k : request.keys) material += k + ',';
  material += '\x1f';
  material += request.context.digest();
  material += '\x1f';
  material += canonical_attributes(request.persona);
  return sha256_hex(material);
}

QueryResult query(CognitiveEngine& engine, const EngineRequest& request, ResponseCache& cache, int retry_limit) {
  const std::string key = cache_key(engine.identity(), request);
  if (auto hit = cache.get(key)) {
    return QueryResult{BehaviorVector(request.keys, hit->values), true, 0};
  }
  const std::string cell = "persona " + request.persona.id + " on " + format_date(request.context.date);
  if (engine.kind() == EngineKind::kReplayCache) {
    throw CacheMissError("replay cache has no response for " + cell + " (key " + key.substr(0, 16) + ")");
  }
  std::string last_error;
  bool last_was_parse = false;
  int attempts = 0;
  for (int attempt = 0; attempt <= retry_limit; ++attempt) {
    ++attempts;
    std::string raw;
    try {
      raw = engine.respond(request);
      BehaviorVector vec = parse_response(raw, request.keys);
      cache.put(CacheEntry{key, engine.identity(), raw, request.keys.list(),
                           std::vector<double>(vec.values().begin(), vec.values().end()), 0});
      return QueryResult{std::move(vec), false, attempts};
    } catch (const ResponseParseError& e) {
      last_error = e.what();
      last_was_parse = true;
    } catch (const CacheMissError&) {
      throw;
    } catch (const EngineError& e) {
      last_error = e.what();
      last_was_parse = false;
    }
  }
  const std::string msg = cell + ": failed after " + std::to_string(attempts) + " attempts: " + last_error;
  if (last_was_parse) throw ResponseParseError(msg);
  throw EngineError(msg);
}

}  // namespace policytwin
