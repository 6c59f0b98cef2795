#include <gtest/gtest.h>

#include <cmath>
#include <map>

#include "policytwin/error.hpp"
#include "policytwin/persona.hpp"
#include "policytwin/synthetic.hpp"
#include "test_support.hpp"

namespace policytwin {
namespace {

DemographicSpec two_attribute_spec(std::size_t n) {
  DemographicSpec spec;
  spec.population_size = n;
  spec.attributes = {{"nationality", {{"National", 0.1}, {"Expatriate", 0.9}}},
                     {"risk", {{"Low", 0.5}, {"High", 0.5}}}};
  return spec;
}

TEST(Persona, IdsArePaddedAndOrdered) {
  EXPECT_EQ(persona_id(0), "p00000");
  EXPECT_EQ(persona_id(42), "p00042");
  EXPECT_EQ(persona_id(1234567), "p1234567");
  EXPECT_LT(persona_id(9), persona_id(10));
}

TEST(Persona, SamplingIsAPureFunctionOfSpecAndSeed) {
  const auto spec = two_attribute_spec(50);
  const auto a = sample_population(spec, 11);
  const auto b = sample_population(spec, 11);
  const auto c = sample_population(spec, 12);
  EXPECT_EQ(a, b);
  EXPECT_NE(a, c);
  ASSERT_EQ(a.size(), 50u);
  for (const auto& p : a) {
    EXPECT_EQ(p.attributes.size(), 2u);
    EXPECT_EQ(p.weight, 1.0);
  }
}

TEST(Persona, MarginalsConvergeForLargePopulations) {
  const auto population = sample_population(two_attribute_spec(20000), 3);
  std::size_t nationals = 0;
  for (const auto& p : population) nationals += p.attributes.at("nationality") == "National" ? 1 : 0;
  EXPECT_NEAR(static_cast<double>(nationals) / 20000.0, 0.1, 0.01);
}

TEST(Persona, ZeroProbabilityValuesNeverAppear) {
  DemographicSpec spec = two_attribute_spec(500);
  spec.attributes[1].values = {{"Low", 0.0}, {"High", 1.0}};
  for (const auto& p : sample_population(spec, 5)) EXPECT_EQ(p.attributes.at("risk"), "High");
}

TEST(Persona, ValidationRejectsBadSpecs) {
  DemographicSpec bad_sum = two_attribute_spec(10);
  bad_sum.attributes[0].values[0].probability = 0.2;
  EXPECT_THROW(bad_sum.validate(), ConfigError);
  DemographicSpec negative = two_attribute_spec(10);
  negative.attributes[1].values = {{"Low", -0.5}, {"High", 1.5}};
  EXPECT_THROW(negative.validate(), ConfigError);
  DemographicSpec empty = two_attribute_spec(0);
  EXPECT_THROW(empty.validate(), ConfigError);
  DemographicSpec dup = two_attribute_spec(10);
  dup.attributes.push_back(dup.attributes[0]);
  EXPECT_THROW(dup.validate(), ConfigError);
  DemographicSpec no_values = two_attribute_spec(10);
  no_values.attributes[0].values.clear();
  EXPECT_THROW(no_values.validate(), ConfigError);
}

TEST(Persona, ModalPersonaTakesTheMostProbableValueFirstOnTies) {
  const Persona modal = modal_persona(two_attribute_spec(10));
  EXPECT_EQ(modal.attributes.at("nationality"), "Expatriate");
  EXPECT_EQ(modal.attributes.at("risk"), "Low");
  const auto uniform = uniform_population(modal, 4);
  ASSERT_EQ(uniform.size(), 4u);
  EXPECT_EQ(uniform[3].id, "p00003");
  EXPECT_EQ(uniform[3].attributes, modal.attributes);
  EXPECT_EQ(attribute_entropy(uniform, "risk"), 0.0);
  EXPECT_THROW(uniform_population(modal, 0), ConfigError);
}

TEST(Persona, EntropyOfABalancedAttribute) {
  std::vector<Persona> people(4);
  people[0].attributes["risk"] = people[1].attributes["risk"] = "Low";
  people[2].attributes["risk"] = people[3].attributes["risk"] = "High";
  EXPECT_NEAR(attribute_entropy(people, "risk"), std::log(2.0), 1e-12);
}

TEST(Persona, PopulationFileRoundTrips) {
  testing::TempDir dir;
  const auto population = sample_population(default_pandemic_population(), 7);
  write_population(dir / "pop.json", population);
  EXPECT_EQ(read_population(dir / "pop.json"), population);
}

TEST(Persona, SpecFileLoads) {
  testing::TempDir dir;
  testing::write_file(dir / "spec.json",
                      R"({"population_size": 3, "attributes": [{"name": "risk", "values": [)"
                      R"({"value": "Low", "probability": 0.25}, {"value": "High", "probability": 0.75}]}]})");
  const auto spec = load_demographic_spec(dir / "spec.json");
  EXPECT_EQ(spec.population_size, 3u);
  EXPECT_EQ(spec.attributes[0].values[1].value, "High");
  testing::write_file(dir / "broken.json", "{\"population_size\": 3");
  EXPECT_THROW(load_demographic_spec(dir / "broken.json"), ConfigError);
}

TEST(Persona, DefaultPandemicMarginals) {
  const auto spec = default_pandemic_population();
  EXPECT_NO_THROW(spec.validate());
  EXPECT_EQ(spec.population_size, 10u);
  std::map<std::string, double> nationality;
  for (const auto& v : spec.attributes[0].values) nationality[v.value] = v.probability;
  EXPECT_EQ(nationality.at("UAE National"), 0.1);
  EXPECT_EQ(nationality.at("Expatriate"), 0.9);
}

}  // namespace
}  // namespace policytwin
