#include "policytwin/behavior.hpp"

#include <cmath>

#include "policytwin/error.hpp"

namespace policytwin {

BehaviorVector::BehaviorVector(CategoryKeys keys, std::vector<double> probs)
    : keys_(std::move(keys)), probs_(std::move(probs)) {
  if (probs_.size() != keys_.size()) {
    throw DataError("behavior vector has " + std::to_string(probs_.size()) + " values for " +
                    std::to_string(keys_.size()) + " categories");
  }
  for (std::size_t k = 0; k < probs_.size(); ++k) {
    if (!(probs_[k] >= 0.0 && probs_[k] <= 1.0)) {
      throw DataError("probability for '" + keys_[k] + "' outside [0,1]");
    }
  }
}

BehaviorVector BehaviorVector::filled(const CategoryKeys& keys, double value) {
  return BehaviorVector(keys, std::vector<double>(keys.size(), value));
}

double BehaviorVector::at(std::string_view key) const {
  auto k = keys_.index_of(key);
  if (!k) throw DataError("unknown category '" + std::string(key) + "'");
  return probs_[*k];
}

}  // namespace policytwin
