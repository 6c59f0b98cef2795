#pragma once

#include <span>
#include <string_view>
#include <vector>

#include "policytwin/categories.hpp"

namespace policytwin {

/// Probabilities in [0,1], one per category, in schema order.
class BehaviorVector {
 public:
  /// Throws DataError if sizes differ or any value is outside [0,1] or NaN.
  BehaviorVector(CategoryKeys keys, std::vector<double> probs);

  static BehaviorVector filled(const CategoryKeys& keys, double value);

  const CategoryKeys& keys() const { return keys_; }
  std::span<const double> values() const { return probs_; }
  std::size_t size() const { return probs_.size(); }
  double operator[](std::size_t k) const { return probs_[k]; }
  /// Throws DataError for an unknown key.
  double at(std::string_view key) const;

  bool operator==(const BehaviorVector& other) const {
    return keys_ == other.keys_ && probs_ == other.probs_;
  }

 private:
  CategoryKeys keys_;
  std::vector<double> probs_;
};

/// Calibrated (or otherwise predicted) metric values, one per category.
struct MetricVector {
  CategoryKeys keys;
  std::vector<double> values;
};

}  // namespace policytwin
