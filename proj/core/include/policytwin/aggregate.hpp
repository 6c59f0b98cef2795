#pragma once

#include <span>

#include "policytwin/behavior.hpp"

namespace policytwin {

// Both reductions sum each category in sorted-value order, so the result is
// bit-identical under any permutation of the inputs, and clamp to the sample
// range so rounding can never leave [min, max].

/// Per-category arithmetic mean. Throws DataError on empty input or mixed
/// schemas.
BehaviorVector aggregate_mean(std::span<const BehaviorVector> vectors);

/// Per-category mean with weights normalized to sum 1. Throws DataError on
/// length mismatch, negative or non-finite weights, or all-zero weights.
BehaviorVector aggregate_weighted(std::span<const BehaviorVector> vectors,
                                  std::span<const double> weights);

}  // namespace policytwin
