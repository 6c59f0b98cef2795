#pragma once

#include <cstdint>
#include <vector>

#include "policytwin/calibrate.hpp"
#include "policytwin/engine.hpp"
#include "policytwin/ingest.hpp"
#include "policytwin/persona.hpp"

namespace policytwin {

// Hermetic stand-ins for the pandemic profile: a plausible stringency path,
// an oracle with known response surfaces, and observations generated from
// the oracle aggregate through a known affine map.

/// Lockdown-shaped daily stringency path from `first` to `last` inclusive:
/// a spring ramp to ~90, gradual easing, then seeded step changes.
std::vector<PolicyRecord> synthetic_policy_series(Date first, Date last, std::uint64_t seed);

/// UAE-style marginals (10% national / 90% expatriate, occupation, risk
/// perception, income) with N = 10.
DemographicSpec default_pandemic_population();

/// Oracle response surfaces for the six pandemic categories.
OracleParams default_pandemic_oracle();

/// Ground-truth affine maps that keep the default oracle's aggregates inside
/// [-100, 200].
CalibrationParams default_ground_truth();

/// observed = truth(pbar) + N(0, noise_sigma^2), pbar being the mean oracle
/// response of `population` under each policy record. Noise is seeded.
ObservationSeries synthetic_observations(std::span<const PolicyRecord> policy,
                                         const std::vector<Persona>& population,
                                         const OracleParams& oracle, const CategorySchema& schema,
                                         const CalibrationParams& truth, double noise_sigma,
                                         std::uint64_t seed);

}  // namespace policytwin
