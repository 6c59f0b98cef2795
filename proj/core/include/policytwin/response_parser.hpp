#pragma once

#include <nlohmann/json.hpp>
#include <optional>
#include <string_view>

#include "policytwin/behavior.hpp"

namespace policytwin {

/// Values this far outside [0,1] are clamped; anything further is rejected.
inline constexpr double kProbabilitySlack = 0.001;

/// First balanced `{...}` span in `raw` that parses as a JSON object. Engines
/// often wrap the object in prose or markdown fences.
std::optional<nlohmann::json> extract_first_json_object(std::string_view raw);

/// Throws ResponseParseError: no object, missing key (named), non-numeric
/// value, or value outside [-slack, 1+slack]. Extra keys are ignored.
BehaviorVector parse_response(std::string_view raw, const CategoryKeys& keys);

}  // namespace policytwin
