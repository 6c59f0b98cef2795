#pragma once

#include <atomic>
#include <map>
#include <memory>
#include <nlohmann/json.hpp>
#include <optional>
#include <string>
#include <string_view>

#include "policytwin/behavior.hpp"
#include "policytwin/categories.hpp"
#include "policytwin/persona.hpp"
#include "policytwin/prompt.hpp"
#include "policytwin/response_cache.hpp"

namespace policytwin {

enum class EngineKind { kRemoteHttp, kSyntheticOracle, kReplayCache };

std::string_view to_string(EngineKind kind);
EngineKind parse_engine_kind(std::string_view text);  // "remote" | "oracle" | "replay"

/// Logistic response surface standing in for a language model:
///   prob_k = logistic(intercept_k + slope_k * stringency / 100
///                     + sum of matching attribute offsets + noise_scale * z)
/// where z is a standard normal drawn deterministically from the persona
/// content, the context and the category.
struct OracleParams {
  struct Category {
    double intercept = 0.0;
    double slope = 0.0;
  };
  std::map<std::string, Category> categories;  // by category key
  /// "attribute=value" -> category key -> offset
  std::map<std::string, std::map<std::string, double>> offsets;
  double noise_scale = 0.0;

  /// Every schema category needs an entry, and slope * direction >= 0.
  void validate(const CategorySchema& schema) const;
  std::string digest() const;
};

void to_json(nlohmann::json& j, const OracleParams& p);
void from_json(const nlohmann::json& j, OracleParams& p);

double logistic(double x);

BehaviorVector oracle_respond(const OracleParams& params, const Persona& persona,
                              const SimContext& context, const CategoryKeys& keys);

/// HTTP endpoint description. The request body is `body_template` with the
/// model, prompt and decoding object written at the given JSON pointers; the
/// response text is read from `response_pointer` (empty: the whole body).
struct RemoteEndpoint {
  std::string url;  // http(s)://host[:port]/path
  std::string model_name;
  nlohmann::json decoding = nlohmann::json::object();
  nlohmann::json body_template = nlohmann::json::object();
  std::string model_pointer = "/model";
  std::string prompt_pointer = "/prompt";
  std::string decoding_pointer = "/decoding";  // empty: merge into the body root
  std::string response_pointer;
  std::map<std::string, std::string> headers;
  std::optional<std::string> api_key_env;  // env var holding the key
  std::string api_key_header = "Authorization";
  std::string api_key_prefix = "Bearer ";
  double timeout_seconds = 60.0;
};

void to_json(nlohmann::json& j, const RemoteEndpoint& e);
void from_json(const nlohmann::json& j, RemoteEndpoint& e);

struct EngineConfig {
  EngineKind kind = EngineKind::kSyntheticOracle;
  /// Which engine's cache entries replay mode serves.
  EngineKind replay_of = EngineKind::kSyntheticOracle;
  int retry_limit = 3;
  std::optional<RemoteEndpoint> remote;
  std::optional<OracleParams> oracle;

  /// Remote needs url and model name; oracle needs params; replay needs the
  /// section of the engine it replays.
  void validate() const;
};

void to_json(nlohmann::json& j, const EngineConfig& c);
void from_json(const nlohmann::json& j, EngineConfig& c);

/// Everything an engine may look at for one (persona, context) cell.
struct EngineRequest {
  const Persona& persona;
  const SimContext& context;
  const PromptText& prompt;
  const CategoryKeys& keys;
};

/// Maps a request to raw response text.
class CognitiveEngine {
 public:
  virtual ~CognitiveEngine() = default;

  virtual EngineKind kind() const = 0;
  /// Model name or oracle digest; part of every cache key.
  virtual std::string identity() const = 0;

  /// Counts the call, then delegates.
  std::string respond(const EngineRequest& request);
  std::size_t call_count() const { return calls_.load(); }

 protected:
  virtual std::string do_respond(const EngineRequest& request) = 0;

 private:
  std::atomic<std::size_t> calls_{0};
};

class OracleEngine final : public CognitiveEngine {
 public:
  explicit OracleEngine(OracleParams params);
  EngineKind kind() const override { return EngineKind::kSyntheticOracle; }
  std::string identity() const override { return identity_; }
  const OracleParams& params() const { return params_; }

 protected:
  std::string do_respond(const EngineRequest& request) override;

 private:
  OracleParams params_;
  std::string identity_;
};

/// Serves nothing itself; every response must come from the cache.
class ReplayEngine final : public CognitiveEngine {
 public:
  explicit ReplayEngine(std::string replayed_identity);
  EngineKind kind() const override { return EngineKind::kReplayCache; }
  std::string identity() const override { return identity_; }

 protected:
  std::string do_respond(const EngineRequest& request) override;

 private:
  std::string identity_;
};

class RemoteHttpEngine final : public CognitiveEngine {
 public:
  explicit RemoteHttpEngine(RemoteEndpoint endpoint);
  ~RemoteHttpEngine() override;
  EngineKind kind() const override { return EngineKind::kRemoteHttp; }
  std::string identity() const override;

  /// The JSON body that would be posted for `prompt`.
  nlohmann::json request_body(std::string_view prompt) const;
  /// Extracts the text at response_pointer from a response body.
  std::string response_text(std::string_view body) const;

 protected:
  std::string do_respond(const EngineRequest& request) override;

 private:
  RemoteEndpoint endpoint_;
};

/// "remote:<model>:<decoding digest>"; decoding settings are part of identity.
std::string remote_identity(const RemoteEndpoint& endpoint);

/// Identity string the configured engine (or the engine replay mode
/// replays) will present.
std::string engine_identity(const EngineConfig& config);

std::shared_ptr<CognitiveEngine> make_engine(const EngineConfig& config);

/// Cache key for one request under a given engine identity.
std::string cache_key(std::string_view engine_identity, const EngineRequest& request);

struct QueryResult {
  BehaviorVector vector;
  bool from_cache = false;
  int attempts = 0;  // engine calls made for this query
};

/// Cache lookup, then engine call with up to `retry_limit` re-asks of the
/// same prompt on transport or parse failure. Successful responses are
/// stored. Replay engines throw CacheMissError on a miss.
QueryResult query(CognitiveEngine& engine, const EngineRequest& request, ResponseCache& cache,
                  int retry_limit);

}  // namespace policytwin
