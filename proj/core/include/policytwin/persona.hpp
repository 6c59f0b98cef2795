#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <nlohmann/json_fwd.hpp>
#include <string>
#include <vector>

namespace policytwin {

/// One synthetic individual.
struct Persona {
  std::string id;
  std::map<std::string, std::string> attributes;
  double weight = 1.0;

  bool operator==(const Persona&) const = default;
};

struct AttributeValue {
  std::string value;
  double probability = 0.0;
};

struct AttributeDistribution {
  std::string name;
  std::vector<AttributeValue> values;
};

/// Independent categorical marginals per attribute plus the population size.
struct DemographicSpec {
  std::vector<AttributeDistribution> attributes;
  std::size_t population_size = 0;

  /// Throws ConfigError: empty value lists, negative probabilities, sums off
  /// by more than 1e-9, duplicate attribute names, zero population.
  void validate() const;
};

DemographicSpec load_demographic_spec(const std::filesystem::path& path);

/// "p00007" style ids; at least five digits.
std::string persona_id(std::size_t index);

/// Exactly spec.population_size personas; each attribute is drawn
/// independently from its marginal. Pure function of (spec, seed).
std::vector<Persona> sample_population(const DemographicSpec& spec, std::uint64_t seed);

/// n copies of `prototype` with ids p00000.. (n >= 1).
std::vector<Persona> uniform_population(const Persona& prototype, std::size_t n);

/// Persona holding each attribute's most probable value (first listed on ties).
Persona modal_persona(const DemographicSpec& spec);

/// Shannon entropy (nats) of one attribute's empirical distribution.
double attribute_entropy(const std::vector<Persona>& population, const std::string& attribute);

void to_json(nlohmann::json& j, const Persona& p);
void from_json(const nlohmann::json& j, Persona& p);
void to_json(nlohmann::json& j, const DemographicSpec& spec);
void from_json(const nlohmann::json& j, DemographicSpec& spec);

void write_population(const std::filesystem::path& path, const std::vector<Persona>& population);
std::vector<Persona> read_population(const std::filesystem::path& path);

}  // namespace policytwin
