// Writes hermetic policy and observation CSVs for a profile.

#include <CLI11.hpp>
#include <cmath>
#include <filesystem>
#include <fmt/format.h>
#include <fstream>
#include <iostream>

#include "policytwin/csv.hpp"
#include "policytwin/error.hpp"
#include "policytwin/persona.hpp"
#include "policytwin/synthetic.hpp"

namespace fs = std::filesystem;
using namespace policytwin;

namespace {

std::string oxcgrt_date(Date d) {
  std::string iso = format_date(d);
  return iso.substr(0, 4) + iso.substr(5, 2) + iso.substr(8, 2);
}

void write_policy(const fs::path& path, const std::vector<PolicyRecord>& records) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << "CountryName,CountryCode,Date,StringencyIndex,GovernmentResponseIndex\n";
  for (const auto& r : records) {
    out << "United Arab Emirates,ARE," << oxcgrt_date(r.date) << ',' << format_number(r.stringency) << ','
        << format_number(r.government_response.value_or(0.0)) << '\n';
  }
}

void write_observations(const fs::path& path, const ObservationSeries& series, const CategorySchema& schema) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << "country_region_code,country_region,date";
  for (const auto& spec : schema.specs()) out << ',' << spec.observed_column;
  out << '\n';
  for (const auto& row : series.rows) {
    out << "AE,United Arab Emirates," << format_date(row.date);
    for (double v : row.values) out << ',' << format_number(std::round(v * 1000.0) / 1000.0);
    out << '\n';
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"policytwin-synth: generate synthetic policy and mobility data"};
  std::string out_dir = "data";
  std::uint64_t seed = 7;
  std::uint64_t population_seed = 7;
  double noise = 2.0;
  std::string first = "2020-02-15", last = "2022-02-28";
  std::string population;
  app.add_option("--out-dir", out_dir, "output directory");
  app.add_option("--seed", seed, "seed for the policy path and observation noise");
  app.add_option("--population-seed", population_seed, "seed used to sample the ground-truth population");
  app.add_option("--population", population, "demographic spec (defaults to the built-in pandemic marginals)");
  app.add_option("--noise", noise, "observation noise standard deviation")->check(CLI::NonNegativeNumber);
  app.add_option("--first", first, "first date");
  app.add_option("--last", last, "last date");
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }

  try {
    const auto policy = synthetic_policy_series(parse_date(first), parse_date(last), seed);
    const DemographicSpec spec = population.empty() ? default_pandemic_population() : load_demographic_spec(population);
    const auto people = sample_population(spec, population_seed);
    const CategorySchema schema = CategorySchema::pandemic_default();
    const auto observations = synthetic_observations(policy, people, default_pandemic_oracle(), schema,
                                                     default_ground_truth(), noise, seed);
    fs::create_directories(out_dir);
    write_policy(fs::path(out_dir) / "policy.csv", policy);
    write_observations(fs::path(out_dir) / "observations.csv", observations, schema);
    std::cout << fmt::format("wrote {} policy rows and {} observation rows to {}\n", policy.size(),
                             observations.size(), out_dir);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return static_cast<int>(e.code());
  }
  return 0;
}
