#include <gtest/gtest.h>
#include <httplib.h>

#include <cmath>
#include <cstdlib>
#include <deque>
#include <thread>

#include "policytwin/engine.hpp"
#include "policytwin/error.hpp"
#include "policytwin/prompt.hpp"
#include "policytwin/response_cache.hpp"
#include "policytwin/response_parser.hpp"
#include "policytwin/synthetic.hpp"
#include "test_support.hpp"

namespace policytwin {
namespace {

using testing::day;

const CategoryKeys& two_keys() {
  static const CategoryKeys keys = testing::keys_of({"go_work_prob", "stay_home_prob"});
  return keys;
}

Persona worker() {
  return Persona{"p00001", {{"occupation", "Healthcare"}, {"risk_perception", "High"}}, 1.0};
}

SimContext april(double stringency = 90.0) { return SimContext{day("2020-04-15"), stringency, {}}; }

// Scripted engine: pops one canned reply (or failure) per call.
class ScriptedEngine final : public CognitiveEngine {
 public:
  explicit ScriptedEngine(std::deque<std::string> replies) : replies_(std::move(replies)) {}
  EngineKind kind() const override { return EngineKind::kRemoteHttp; }
  std::string identity() const override { return "scripted"; }

 protected:
  std::string do_respond(const EngineRequest&) override {
    if (replies_.empty()) throw EngineError("script exhausted");
    std::string r = replies_.front();
    replies_.pop_front();
    if (r == "<transport>") throw EngineError("connection reset");
    return r;
  }

 private:
  std::deque<std::string> replies_;
};

TEST(Prompt, SubstitutesAttributesAndContext) {
  const auto p = render_prompt(worker(), april(), "I work in {occupation}; on {date} the index is {stringency}.");
  EXPECT_EQ(p.text, "I work in Healthcare; on 2020-04-15 the index is 90.");
  EXPECT_EQ(p.persona_id, "p00001");
  EXPECT_EQ(p.context_digest, april().digest());
}

TEST(Prompt, LeavesNonPlaceholderBracesAlone) {
  const auto p = render_prompt(worker(), april(), R"(Reply like {"go_work_prob": 0.5} or { } or {1x}.)");
  EXPECT_EQ(p.text, R"(Reply like {"go_work_prob": 0.5} or { } or {1x}.)");
}

TEST(Prompt, ListPlaceholders) {
  const auto p = render_prompt(worker(), april(), "{persona_attributes}\n{categories}", &two_keys());
  EXPECT_EQ(p.text, "- occupation: Healthcare\n- risk_perception: High\n- \"go_work_prob\"\n- \"stay_home_prob\"");
}

TEST(Prompt, MissingAttributeNamesThePlaceholder) {
  try {
    render_prompt(worker(), april(), "Income: {income}");
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("income"), std::string::npos);
  }
}

TEST(Prompt, ExtrasAndPlaceholderListing) {
  SimContext ctx = april();
  ctx.extra["government_response"] = "71.5";
  EXPECT_EQ(render_prompt(worker(), ctx, "{government_response}").text, "71.5");
  EXPECT_EQ(template_placeholders("{a} {b} {a} {\"x\": 1}"), (std::vector<std::string>{"a", "b"}));
  EXPECT_THROW(render_prompt(worker(), april(120.0), "x"), DataError);
}

TEST(Prompt, ProfileTemplateRendersForEveryDefaultPersona) {
  const std::string tmpl = load_prompt_template(std::filesystem::path(POLICYTWIN_PROFILE_DIR) / "prompt.txt");
  for (const auto& persona : sample_population(default_pandemic_population(), 1)) {
    const auto p = render_prompt(persona, april(), tmpl);
    EXPECT_EQ(p.text.find("{occupation}"), std::string::npos);
    EXPECT_NE(p.text.find(persona.attributes.at("occupation")), std::string::npos);
  }
}

TEST(Prompt, GenericTemplateRendersAnyAttributes) {
  const std::string tmpl =
      load_prompt_template(std::filesystem::path(POLICYTWIN_GENERIC_PROFILE_DIR) / "prompt.txt");
  Persona persona;
  persona.id = "p00003";
  persona.attributes = {{"age_band", "30-44"}, {"region", "coastal"}};
  const auto keys = CategorySchema::pandemic_default().keys();
  const auto p = render_prompt(persona, april(), tmpl, &keys);
  EXPECT_TRUE(template_placeholders(p.text).empty());
  EXPECT_NE(p.text.find("- region: coastal"), std::string::npos);
  EXPECT_NE(p.text.find("\"stay_home_prob\""), std::string::npos);
}

TEST(ResponseParser, AcceptsWrappedJson) {
  const auto v = parse_response("Sure! Here you go:\n```json\n{\"go_work_prob\": 0.25, \"stay_home_prob\": 1}\n```",
                                two_keys());
  EXPECT_EQ(v[0], 0.25);
  EXPECT_EQ(v[1], 1.0);
}

TEST(ResponseParser, SkipsBracesInsideStringsAndNonObjects) {
  const auto v = parse_response(R"(note {not json} then {"why": "a } brace", "go_work_prob": 0, "stay_home_prob": 0.5})",
                                two_keys());
  EXPECT_EQ(v[1], 0.5);
}

TEST(ResponseParser, ClampsWithinSlackAndRejectsBeyond) {
  const auto v = parse_response(R"({"go_work_prob": 1.0005, "stay_home_prob": -0.0004})", two_keys());
  EXPECT_EQ(v[0], 1.0);
  EXPECT_EQ(v[1], 0.0);
  EXPECT_THROW(parse_response(R"({"go_work_prob": 1.2, "stay_home_prob": 0})", two_keys()), ResponseParseError);
  EXPECT_THROW(parse_response(R"({"go_work_prob": 0.2})", two_keys()), ResponseParseError);
  EXPECT_THROW(parse_response(R"({"go_work_prob": "0.2", "stay_home_prob": 0})", two_keys()), ResponseParseError);
  EXPECT_THROW(parse_response("no json here", two_keys()), ResponseParseError);
  EXPECT_THROW(parse_response("", two_keys()), ResponseParseError);
}

TEST(ResponseParser, ExtractFirstObject) {
  EXPECT_EQ(extract_first_json_object("xx {\"a\": {\"b\": 1}} yy {\"c\": 2}")->dump(), R"({"a":{"b":1}})");
  EXPECT_FALSE(extract_first_json_object("{ unterminated"));
}

TEST(Oracle, LogisticValues) {
  EXPECT_NEAR(logistic(3.0), 0.9525741268224334, 1e-15);
  EXPECT_EQ(logistic(0.0), 0.5);
  EXPECT_NEAR(logistic(-800.0), 0.0, 1e-300);
  EXPECT_EQ(logistic(800.0), 1.0);
}

TEST(Oracle, ResponseSurface) {
  OracleParams params;
  params.categories = {{"go_work_prob", {1.0, -2.0}}, {"stay_home_prob", {0.0, 3.0}}};
  params.offsets["occupation=Healthcare"]["go_work_prob"] = 0.5;
  const auto v = oracle_respond(params, worker(), april(), two_keys());
  EXPECT_NEAR(v[0], logistic(1.0 - 2.0 * 0.9 + 0.5), 1e-15);
  EXPECT_NEAR(v[1], logistic(2.7), 1e-15);
}

TEST(Oracle, NoiseIsDeterministicPerCell) {
  OracleParams params = default_pandemic_oracle();
  params.noise_scale = 0.3;
  const auto keys = CategorySchema::pandemic_default().keys();
  const auto a = oracle_respond(params, worker(), april(), keys);
  const auto b = oracle_respond(params, worker(), april(), keys);
  const auto c = oracle_respond(params, worker(), april(89.0), keys);
  EXPECT_EQ(a, b);
  EXPECT_NE(a, c);
}

TEST(Oracle, ValidationChecksDirections) {
  const auto schema = CategorySchema::pandemic_default();
  EXPECT_NO_THROW(default_pandemic_oracle().validate(schema));
  OracleParams wrong = default_pandemic_oracle();
  wrong.categories["stay_home_prob"].slope = -1.0;
  EXPECT_THROW(wrong.validate(schema), ConfigError);
  OracleParams missing = default_pandemic_oracle();
  missing.categories.erase("essentials_prob");
  EXPECT_THROW(missing.validate(schema), ConfigError);
}

TEST(Cache, PersistsAndSkipsCorruptLines) {
  testing::TempDir dir;
  const auto file = dir / "cache.jsonl";
  {
    ResponseCache cache(file);
    cache.put(CacheEntry{"k1", "e", "{}", {"a", "b"}, {0.1, 0.2}, 5});
    cache.put(CacheEntry{"k2", "e", "{}", {"a", "b"}, {0.3, 0.4}, 0});
  }
  {
    std::ofstream out(file, std::ios::app | std::ios::binary);
    out << "{not json}\n{\"key\": \"k3\", \"categ";  // garbage plus a torn append
  }
  ResponseCache reopened(file);
  EXPECT_EQ(reopened.size(), 2u);
  EXPECT_EQ(reopened.skipped_lines(), 2u);
  EXPECT_EQ(reopened.get("k1")->values, (std::vector<double>{0.1, 0.2}));
  EXPECT_EQ(reopened.get("k1")->timestamp, 5);
  EXPECT_GT(reopened.get("k2")->timestamp, 0);
  reopened.put(CacheEntry{"k4", "e", "{}", {"a"}, {0.5}, 1});
  ResponseCache third(file);
  EXPECT_EQ(third.size(), 3u);
  EXPECT_TRUE(third.get("k4"));
}

TEST(Query, CachesSuccessfulResponses) {
  ResponseCache cache;
  auto engine = std::make_shared<OracleEngine>(default_pandemic_oracle());
  const auto keys = CategorySchema::pandemic_default().keys();
  const Persona p = sample_population(default_pandemic_population(), 1).front();
  const SimContext ctx = april();
  const PromptText prompt = render_prompt(p, ctx, "{occupation} {stringency}");
  const EngineRequest req{p, ctx, prompt, keys};
  const auto first = query(*engine, req, cache, 3);
  const auto second = query(*engine, req, cache, 3);
  EXPECT_FALSE(first.from_cache);
  EXPECT_TRUE(second.from_cache);
  EXPECT_EQ(first.vector, second.vector);
  EXPECT_EQ(engine->call_count(), 1u);
  EXPECT_EQ(first.attempts, 1);
}

TEST(Query, RetriesParseAndTransportFailures) {
  ResponseCache cache;
  ScriptedEngine engine({"garbage", "<transport>", R"({"go_work_prob": 0.4, "stay_home_prob": 0.6})"});
  const Persona p = worker();
  const SimContext ctx = april();
  const PromptText prompt = render_prompt(p, ctx, "x");
  const auto r = query(engine, EngineRequest{p, ctx, prompt, two_keys()}, cache, 2);
  EXPECT_EQ(r.attempts, 3);
  EXPECT_EQ(r.vector[0], 0.4);
}

TEST(Query, GivesUpAfterRetryLimit) {
  ResponseCache cache;
  ScriptedEngine engine({"bad", "worse", "still bad", R"({"go_work_prob": 0.4, "stay_home_prob": 0.6})"});
  const Persona p = worker();
  const SimContext ctx = april();
  const PromptText prompt = render_prompt(p, ctx, "x");
  EXPECT_THROW(query(engine, EngineRequest{p, ctx, prompt, two_keys()}, cache, 2), ResponseParseError);
  EXPECT_EQ(engine.call_count(), 3u);
  EXPECT_EQ(cache.size(), 0u);
}

TEST(Query, ReplayServesOnlyCachedResponses) {
  EngineConfig config;
  config.kind = EngineKind::kSyntheticOracle;
  config.oracle = default_pandemic_oracle();
  auto oracle = make_engine(config);
  config.kind = EngineKind::kReplayCache;
  config.replay_of = EngineKind::kSyntheticOracle;
  auto replay = make_engine(config);
  EXPECT_EQ(replay->identity(), oracle->identity());

  ResponseCache cache;
  const auto keys = CategorySchema::pandemic_default().keys();
  const Persona p = sample_population(default_pandemic_population(), 2).front();
  const SimContext ctx = april();
  const PromptText prompt = render_prompt(p, ctx, "{date}");
  const EngineRequest req{p, ctx, prompt, keys};
  EXPECT_THROW(query(*replay, req, cache, 3), CacheMissError);
  const auto live = query(*oracle, req, cache, 3);
  const auto replayed = query(*replay, req, cache, 3);
  EXPECT_TRUE(replayed.from_cache);
  EXPECT_EQ(live.vector, replayed.vector);
}

TEST(Query, CacheKeyCoversIdentityPromptAndPersona) {
  const Persona a = worker();
  Persona b = worker();
  b.attributes["income"] = "High";
  const SimContext ctx = april();
  const PromptText prompt = render_prompt(a, ctx, "same text");
  const auto k1 = cache_key("m1", EngineRequest{a, ctx, prompt, two_keys()});
  EXPECT_EQ(k1, cache_key("m1", EngineRequest{a, ctx, prompt, two_keys()}));
  EXPECT_NE(k1, cache_key("m2", EngineRequest{a, ctx, prompt, two_keys()}));
  EXPECT_NE(k1, cache_key("m1", EngineRequest{b, ctx, prompt, two_keys()}));
  const PromptText other = render_prompt(a, ctx, "other text");
  EXPECT_NE(k1, cache_key("m1", EngineRequest{a, ctx, other, two_keys()}));
}

TEST(EngineConfig, ValidationAndJson) {
  EngineConfig c;
  c.kind = EngineKind::kRemoteHttp;
  EXPECT_THROW(c.validate(), ConfigError);
  c.remote = RemoteEndpoint{};
  c.remote->url = "http://localhost:1/x";
  c.remote->model_name = "m";
  EXPECT_NO_THROW(c.validate());
  const nlohmann::json j = c;
  const EngineConfig back = j.get<EngineConfig>();
  EXPECT_EQ(back.kind, EngineKind::kRemoteHttp);
  EXPECT_EQ(back.remote->url, c.remote->url);
  EXPECT_EQ(parse_engine_kind("replay"), EngineKind::kReplayCache);
  EXPECT_THROW(parse_engine_kind("gpt"), ConfigError);
}

TEST(RemoteEngine, IdentityCoversDecoding) {
  RemoteEndpoint e;
  e.url = "http://localhost:1/v1";
  e.model_name = "m";
  e.decoding = {{"temperature", 0.0}};
  RemoteEndpoint hotter = e;
  hotter.decoding = {{"temperature", 0.7}};
  EXPECT_NE(remote_identity(e), remote_identity(hotter));
  EXPECT_EQ(remote_identity(e).rfind("remote:m:", 0), 0u);
}

TEST(RemoteEngine, RequestBodyUsesPointers) {
  RemoteEndpoint e;
  e.url = "http://localhost:1/v1/chat";
  e.model_name = "m";
  e.body_template = {{"messages", {{{"role", "user"}, {"content", ""}}}}};
  e.prompt_pointer = "/messages/0/content";
  e.decoding = {{"temperature", 0}};
  e.decoding_pointer = "";
  RemoteHttpEngine engine(e);
  const auto body = engine.request_body("hello");
  EXPECT_EQ(body["messages"][0]["content"], "hello");
  EXPECT_EQ(body["model"], "m");
  EXPECT_EQ(body["temperature"], 0);
}

class LocalServer {
 public:
  LocalServer() {
    server_.Post("/v1/chat", [this](const httplib::Request& req, httplib::Response& res) {
      ++hits_;
      last_auth_ = req.get_header_value("Authorization");
      const auto body = nlohmann::json::parse(req.body);
      if (hits_ <= fail_first_) {
        res.status = 503;
        return;
      }
      const std::string prompt = body["messages"][0]["content"];
      const double p = prompt.find("lockdown") != std::string::npos ? 0.9 : 0.2;
      const nlohmann::json content{{"go_work_prob", 1.0 - p}, {"stay_home_prob", p}};
      res.set_content(nlohmann::json{{"choices", {{{"message", {{"content", content.dump()}}}}}}}.dump(),
                      "application/json");
    });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~LocalServer() {
    server_.stop();
    thread_.join();
  }

  RemoteEndpoint endpoint() const {
    RemoteEndpoint e;
    e.url = "http://127.0.0.1:" + std::to_string(port_) + "/v1/chat";
    e.model_name = "local";
    e.body_template = {{"messages", {{{"role", "user"}, {"content", ""}}}}};
    e.prompt_pointer = "/messages/0/content";
    e.response_pointer = "/choices/0/message/content";
    e.timeout_seconds = 5;
    return e;
  }

  int fail_first_ = 0;
  std::atomic<int> hits_{0};
  std::string last_auth_;

 private:
  httplib::Server server_;
  std::thread thread_;
  int port_ = 0;
};

TEST(RemoteEngine, RoundTripAgainstLocalServer) {
  LocalServer server;
  server.fail_first_ = 1;
  ::setenv("POLICYTWIN_TEST_KEY", "secret", 1);
  RemoteEndpoint e = server.endpoint();
  e.api_key_env = "POLICYTWIN_TEST_KEY";
  RemoteHttpEngine engine(e);
  ResponseCache cache;
  const Persona p = worker();
  const SimContext ctx = april();
  const PromptText prompt = render_prompt(p, ctx, "full lockdown today");
  const auto r = query(engine, EngineRequest{p, ctx, prompt, two_keys()}, cache, 3);
  EXPECT_EQ(r.attempts, 2);
  EXPECT_NEAR(r.vector.at("stay_home_prob"), 0.9, 1e-12);
  EXPECT_EQ(server.last_auth_, "Bearer secret");
  EXPECT_EQ(server.hits_.load(), 2);
}

TEST(RemoteEngine, TransportFailureIsAnEngineError) {
  RemoteEndpoint e;
  {
    LocalServer server;
    e = server.endpoint();
  }
  e.timeout_seconds = 0.5;
  RemoteHttpEngine engine(e);
  ResponseCache cache;
  const Persona p = worker();
  const SimContext ctx = april();
  const PromptText prompt = render_prompt(p, ctx, "x");
  EXPECT_THROW(query(engine, EngineRequest{p, ctx, prompt, two_keys()}, cache, 1), EngineError);
}

TEST(RemoteEngine, MissingKeyIsAConfigError) {
  LocalServer server;
  RemoteEndpoint e = server.endpoint();
  e.api_key_env = "POLICYTWIN_TEST_DEFINITELY_UNSET";
  ::unsetenv("POLICYTWIN_TEST_DEFINITELY_UNSET");
  RemoteHttpEngine engine(e);
  ResponseCache cache;
  const Persona p = worker();
  const SimContext ctx = april();
  const PromptText prompt = render_prompt(p, ctx, "x");
  EXPECT_THROW(query(engine, EngineRequest{p, ctx, prompt, two_keys()}, cache, 1), ConfigError);
}

}  // namespace
}  // namespace policytwin
