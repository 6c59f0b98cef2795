#include <httplib.h>

#include <cstdlib>

#include "policytwin/engine.hpp"
#include "policytwin/error.hpp"

namespace policytwin {
namespace {

struct ParsedUrl {
  std::string origin;  // scheme://host[:port]
  std::string path;
};

ParsedUrl split_url(const std::string& url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) throw ConfigError("remote engine url '" + url + "' has no scheme");
  const auto path_start = url.find('/', scheme_end + 3);
  if (path_start == std::string::npos) return {url, "/"};
  return {url.substr(0, path_start), url.substr(path_start)};
}

void put_at(nlohmann::json& body, const std::string& pointer, nlohmann::json value) {
  if (pointer.empty()) return;
  try {
    body[nlohmann::json::json_pointer(pointer)] = std::move(value);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("remote engine pointer '" + pointer + "': " + e.what());
  }
}

}  // namespace

RemoteHttpEngine::RemoteHttpEngine(RemoteEndpoint endpoint) : endpoint_(std::move(endpoint)) {
  split_url(endpoint_.url);
}

RemoteHttpEngine::~RemoteHttpEngine() = default;

std::string RemoteHttpEngine::identity() const { return remote_identity(endpoint_); }

nlohmann::json RemoteHttpEngine::request_body(std::string_view prompt) const {
  nlohmann::json body = endpoint_.body_template.is_null() ? nlohmann::json::object() : endpoint_.body_template;
  put_at(body, endpoint_.model_pointer, endpoint_.model_name);
  put_at(body, endpoint_.prompt_pointer, std::string(prompt));
  if (!endpoint_.decoding.empty()) {
    if (endpoint_.decoding_pointer.empty() && endpoint_.decoding.is_object() && body.is_object()) {
      for (const auto& [k, v] : endpoint_.decoding.items()) body[k] = v;
    } else {
      put_at(body, endpoint_.decoding_pointer, endpoint_.decoding);
    }
  }
  return body;
}

std::string RemoteHttpEngine::response_text(std::string_view body) const {
  if (endpoint_.response_pointer.empty()) return std::string(body);
  auto parsed = nlohmann::json::parse(body, nullptr, false);
  if (parsed.is_discarded()) throw EngineError("remote engine returned a non-JSON body");
  const nlohmann::json::json_pointer ptr(endpoint_.response_pointer);
  if (!parsed.contains(ptr)) {
    throw EngineError("remote engine response has nothing at '" + endpoint_.response_pointer + "'");
  }
  const auto& node = parsed.at(ptr);
  return node.is_string() ? node.get<std::string>() : node.dump();
}

std::string RemoteHttpEngine::do_respond(const EngineRequest& request) {
  const ParsedUrl url = split_url(endpoint_.url);
  httplib::Client client(url.origin);
  const auto secs = static_cast<time_t>(endpoint_.timeout_seconds);
  const auto usecs = static_cast<time_t>((endpoint_.timeout_seconds - static_cast<double>(secs)) * 1e6);
  client.set_connection_timeout(secs, usecs);
  client.set_read_timeout(secs, usecs);
  client.set_write_timeout(secs, usecs);

  httplib::Headers headers;
  for (const auto& [k, v] : endpoint_.headers) headers.emplace(k, v);
  if (endpoint_.api_key_env) {
    const char* key = std::getenv(endpoint_.api_key_env->c_str());
    if (key == nullptr) throw ConfigError("environment variable " + *endpoint_.api_key_env + " is not set");
    headers.emplace(endpoint_.api_key_header, endpoint_.api_key_prefix + key);
  }

  const std::string body = request_body(request.prompt.text).dump();
  auto res = client.Post(url.path, headers, body, "application/json");
  if (!res) {
    throw EngineError("remote engine transport failure: " + httplib::to_string(res.error()));
  }
  if (res->status < 200 || res->status >= 300) {
    throw EngineError("remote engine returned HTTP " + std::to_string(res->status));
  }
  return response_text(res->body);
}

}  // namespace policytwin
