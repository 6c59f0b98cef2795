#include "policytwin/persona.hpp"

#include <cmath>
#include <fstream>
#include <nlohmann/json.hpp>
#include <random>
#include <set>

#include "policytwin/digest.hpp"
#include "policytwin/error.hpp"

namespace policytwin {

void DemographicSpec::validate() const {
  if (population_size == 0) throw ConfigError("population_size must be positive");
  std::set<std::string> names;
  for (const auto& attr : attributes) {
    if (attr.name.empty()) throw ConfigError("attribute with empty name");
    if (!names.insert(attr.name).second) throw ConfigError("duplicate attribute '" + attr.name + "'");
    if (attr.values.empty()) throw ConfigError("attribute '" + attr.name + "' has no values");
    double sum = 0.0;
    for (const auto& v : attr.values) {
      if (!(v.probability >= 0.0) || !std::isfinite(v.probability)) {
        throw ConfigError("attribute '" + attr.name + "': negative or invalid probability for '" + v.value + "'");
      }
      sum += v.probability;
    }
    if (std::abs(sum - 1.0) > 1e-9) {
      throw ConfigError("attribute '" + attr.name + "': probabilities sum to " + std::to_string(sum) +
                        ", expected 1");
    }
  }
}

std::string persona_id(std::size_t index) {
  std::string digits = std::to_string(index);
  if (digits.size() < 5) digits.insert(0, 5 - digits.size(), '0');
  return "p" + digits;
}

std::vector<Persona> sample_population(const DemographicSpec& spec, std::uint64_t seed) {
  spec.validate();
  std::mt19937_64 rng(seed);
  std::vector<Persona> out;
  out.reserve(spec.population_size);
  for (std::size_t i = 0; i < spec.population_size; ++i) {
    Persona p;
    p.id = persona_id(i);
    for (const auto& attr : spec.attributes) {
      const double u = unit_interval(rng());
      double cumulative = 0.0;
      const std::string* chosen = &attr.values.back().value;
      for (const auto& v : attr.values) {
        cumulative += v.probability;
        if (u < cumulative) {
          chosen = &v.value;
          break;
        }
      }
      p.attributes[attr.name] = *chosen;
    }
    out.push_back(std::move(p));
  }
  return out;
}

std::vector<Persona> uniform_population(const Persona& prototype, std::size_t n) {
  if (n == 0) throw ConfigError("uniform population needs n >= 1");
  std::vector<Persona> out(n, prototype);
  for (std::size_t i = 0; i < n; ++i) out[i].id = persona_id(i);
  return out;
}

Persona modal_persona(const DemographicSpec& spec) {
  spec.validate();
  Persona p;
  p.id = persona_id(0);
  for (const auto& attr : spec.attributes) {
    const AttributeValue* best = &attr.values.front();
    for (const auto& v : attr.values) {
      if (v.probability > best->probability) best = &v;
    }
    p.attributes[attr.name] = best->value;
  }
  return p;
}

double attribute_entropy(const std::vector<Persona>& population, const std::string& attribute) {
  std::map<std::string, std::size_t> counts;
  std::size_t n = 0;
  for (const auto& p : population) {
    auto it = p.attributes.find(attribute);
    if (it == p.attributes.end()) continue;
    ++counts[it->second];
    ++n;
  }
  double h = 0.0;
  for (const auto& [value, c] : counts) {
    const double q = static_cast<double>(c) / static_cast<double>(n);
    h -= q * std::log(q);
  }
  return h;
}

void to_json(nlohmann::json& j, const Persona& p) {
  j = nlohmann::json{{"id", p.id}, {"attributes", p.attributes}, {"weight", p.weight}};
}

void from_json(const nlohmann::json& j, Persona& p) {
  p.id = j.at("id").get<std::string>();
  p.attributes = j.at("attributes").get<std::map<std::string, std::string>>();
  p.weight = j.value("weight", 1.0);
  if (!(p.weight >= 0.0)) throw DataError("persona " + p.id + ": weight must be >= 0");
}

void to_json(nlohmann::json& j, const DemographicSpec& spec) {
  j = nlohmann::json{{"population_size", spec.population_size}, {"attributes", nlohmann::json::array()}};
  for (const auto& attr : spec.attributes) {
    nlohmann::json values = nlohmann::json::array();
    for (const auto& v : attr.values) values.push_back({{"value", v.value}, {"probability", v.probability}});
    j["attributes"].push_back({{"name", attr.name}, {"values", values}});
  }
}

void from_json(const nlohmann::json& j, DemographicSpec& spec) {
  spec.population_size = j.at("population_size").get<std::size_t>();
  spec.attributes.clear();
  for (const auto& a : j.at("attributes")) {
    AttributeDistribution attr;
    attr.name = a.at("name").get<std::string>();
    for (const auto& v : a.at("values")) {
      attr.values.push_back({v.at("value").get<std::string>(), v.at("probability").get<double>()});
    }
    spec.attributes.push_back(std::move(attr));
  }
}

DemographicSpec load_demographic_spec(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open population spec " + path.string());
  try {
    DemographicSpec spec = nlohmann::json::parse(in).get<DemographicSpec>();
    spec.validate();
    return spec;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("population spec " + path.string() + ": " + e.what());
  }
}

void write_population(const std::filesystem::path& path, const std::vector<Persona>& population) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << nlohmann::json{{"personas", population}}.dump(2) << '\n';
}

std::vector<Persona> read_population(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  try {
    return nlohmann::json::parse(in).at("personas").get<std::vector<Persona>>();
  } catch (const nlohmann::json::exception& e) {
    throw DataError("population file " + path.string() + ": " + e.what());
  }
}

}  // namespace policytwin
