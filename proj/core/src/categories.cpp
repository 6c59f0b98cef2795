#include "policytwin/categories.hpp"

#include <nlohmann/json.hpp>
#include <set>

#include "policytwin/error.hpp"

namespace policytwin {

CategoryKeys::CategoryKeys(std::vector<std::string> keys) {
  std::set<std::string> seen;
  for (const auto& k : keys) {
    if (k.empty()) throw ConfigError("category key must not be empty");
    if (!seen.insert(k).second) throw ConfigError("duplicate category key '" + k + "'");
  }
  keys_ = std::make_shared<const std::vector<std::string>>(std::move(keys));
}

std::optional<std::size_t> CategoryKeys::index_of(std::string_view key) const {
  for (std::size_t i = 0; i < size(); ++i) {
    if ((*keys_)[i] == key) return i;
  }
  return std::nullopt;
}

const std::vector<std::string>& CategoryKeys::list() const {
  static const std::vector<std::string> kEmpty;
  return keys_ ? *keys_ : kEmpty;
}

bool operator==(const CategoryKeys& a, const CategoryKeys& b) {
  if (a.keys_ == b.keys_) return true;
  return a.list() == b.list();
}

CategorySchema::CategorySchema(std::vector<CategorySpec> specs) : specs_(std::move(specs)) {
  std::vector<std::string> keys;
  for (const auto& s : specs_) {
    if (s.direction < -1 || s.direction > 1) {
      throw ConfigError("category '" + s.key + "': direction must be -1, 0 or +1");
    }
    if (!(s.clip_min < s.clip_max)) {
      throw ConfigError("category '" + s.key + "': clip_min must be below clip_max");
    }
    keys.push_back(s.key);
  }
  keys_ = CategoryKeys(std::move(keys));
}

CategorySchema CategorySchema::pandemic_default() {
  return CategorySchema({
      {"go_work_prob", "workplaces_percent_change_from_baseline", "Workplaces", -1, -100.0, 200.0},
      {"discretionary_outings_prob", "retail_and_recreation_percent_change_from_baseline",
       "Retail & Recreation", -1, -100.0, 200.0},
      {"essentials_prob", "grocery_and_pharmacy_percent_change_from_baseline", "Grocery & Pharmacy", -1,
       -100.0, 200.0},
      {"transit_use_prob", "transit_stations_percent_change_from_baseline", "Transit Stations", -1, -100.0,
       200.0},
      {"outdoor_leisure_prob", "parks_percent_change_from_baseline", "Parks", -1, -100.0, 200.0},
      {"stay_home_prob", "residential_percent_change_from_baseline", "Residential", +1, -100.0, 200.0},
  });
}

void to_json(nlohmann::json& j, const CategorySpec& s) {
  j = nlohmann::json{{"key", s.key},
                     {"column", s.observed_column},
                     {"label", s.label},
                     {"direction", s.direction},
                     {"clip", {s.clip_min, s.clip_max}}};
}

void from_json(const nlohmann::json& j, CategorySpec& s) {
  s.key = j.at("key").get<std::string>();
  s.observed_column = j.value("column", s.key);
  s.label = j.value("label", s.key);
  s.direction = j.value("direction", 0);
  if (j.contains("clip")) {
    const auto& c = j.at("clip");
    if (!c.is_array() || c.size() != 2) throw ConfigError("category '" + s.key + "': clip must be [min, max]");
    s.clip_min = c[0].get<double>();
    s.clip_max = c[1].get<double>();
  }
}

}  // namespace policytwin
