#include "policytwin/aggregate.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

#include "policytwin/error.hpp"

namespace policytwin {
namespace {

void check_schema(std::span<const BehaviorVector> vectors) {
  if (vectors.empty()) throw DataError("cannot aggregate an empty set of behavior vectors");
  for (const auto& v : vectors) {
    if (!(v.keys() == vectors.front().keys())) throw DataError("behavior vectors use different category schemas");
  }
}

}  // namespace

BehaviorVector aggregate_mean(std::span<const BehaviorVector> vectors) {
  check_schema(vectors);
  const std::size_t d = vectors.front().size();
  const double n = static_cast<double>(vectors.size());
  std::vector<double> column(vectors.size());
  std::vector<double> out(d);
  for (std::size_t k = 0; k < d; ++k) {
    for (std::size_t i = 0; i < vectors.size(); ++i) column[i] = vectors[i][k];
    std::sort(column.begin(), column.end());
    double sum = 0.0;
    for (double v : column) sum += v;
    out[k] = std::clamp(sum / n, column.front(), column.back());
  }
  return BehaviorVector(vectors.front().keys(), std::move(out));
}

BehaviorVector aggregate_weighted(std::span<const BehaviorVector> vectors, std::span<const double> weights) {
  check_schema(vectors);
  if (weights.size() != vectors.size()) {
    throw DataError("aggregate_weighted: " + std::to_string(weights.size()) + " weights for " +
                    std::to_string(vectors.size()) + " vectors");
  }
  for (double w : weights) {
    if (!(w >= 0.0) || !std::isfinite(w)) throw DataError("aggregate_weighted: weights must be finite and >= 0");
  }
  std::vector<double> sorted_weights(weights.begin(), weights.end());
  std::sort(sorted_weights.begin(), sorted_weights.end());
  double total = 0.0;
  for (double w : sorted_weights) total += w;
  if (!(total > 0.0)) throw DataError("aggregate_weighted: all weights are zero");

  const std::size_t d = vectors.front().size();
  std::vector<std::pair<double, double>> column(vectors.size());  // (p, w)
  std::vector<double> out(d);
  for (std::size_t k = 0; k < d; ++k) {
    for (std::size_t i = 0; i < vectors.size(); ++i) column[i] = {vectors[i][k], weights[i]};
    std::sort(column.begin(), column.end());
    double sum = 0.0;
    double lo = 1.0, hi = 0.0;
    for (const auto& [p, w] : column) {
      if (w == 0.0) continue;
      sum += w * p;
      lo = std::min(lo, p);
      hi = std::max(hi, p);
    }
    out[k] = std::clamp(sum / total, lo, hi);
  }
  return BehaviorVector(vectors.front().keys(), std::move(out));
}

}  // namespace policytwin
