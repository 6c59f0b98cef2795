#include "policytwin/response_parser.hpp"

#include <algorithm>
#include <cmath>

#include "policytwin/error.hpp"

namespace policytwin {
namespace {

// End (one past) of the balanced object starting at raw[start] == '{',
// honoring JSON string literals; npos when unbalanced.
std::size_t balanced_end(std::string_view raw, std::size_t start) {
  int depth = 0;
  bool in_string = false;
  for (std::size_t i = start; i < raw.size(); ++i) {
    const char c = raw[i];
    if (in_string) {
      if (c == '\\') {
        ++i;
      } else if (c == '"') {
        in_string = false;
      }
      continue;
    }
    if (c == '"') {
      in_string = true;
    } else if (c == '{') {
      ++depth;
    } else if (c == '}') {
      if (--depth == 0) return i + 1;
    }
  }
  return std::string_view::npos;
}

}  // namespace

std::optional<nlohmann::json> extract_first_json_object(std::string_view raw) {
  for (std::size_t pos = raw.find('{'); pos != std::string_view::npos; pos = raw.find('{', pos + 1)) {
    const std::size_t end = balanced_end(raw, pos);
    if (end == std::string_view::npos) continue;
    auto parsed = nlohmann::json::parse(raw.substr(pos, end - pos), nullptr, /*allow_exceptions=*/false);
    if (!parsed.is_discarded() && parsed.is_object()) return parsed;
  }
  return std::nullopt;
}

BehaviorVector parse_response(std::string_view raw, const CategoryKeys& keys) {
  auto object = extract_first_json_object(raw);
  if (!object) throw ResponseParseError("no JSON object found in engine response");
  std::vector<double> probs;
  probs.reserve(keys.size());
  for (const auto& key : keys) {
    auto it = object->find(key);
    if (it == object->end()) throw ResponseParseError("engine response is missing key '" + key + "'");
    if (!it->is_number()) throw ResponseParseError("engine response value for '" + key + "' is not numeric");
    double v = it->get<double>();
    if (!std::isfinite(v) || v < -kProbabilitySlack || v > 1.0 + kProbabilitySlack) {
      throw ResponseParseError("engine response value for '" + key + "' outside [0,1]: " + it->dump());
    }
    probs.push_back(std::clamp(v, 0.0, 1.0));
  }
  return BehaviorVector(keys, std::move(probs));
}

}  // namespace policytwin
