#pragma once

#include <array>
#include <map>
#include <optional>
#include <span>
#include <string_view>

#include "policytwin/ingest.hpp"

namespace policytwin {

/// Prediction for t is the last observation strictly before t. Throws
/// DataError naming the first target with no earlier observation.
MetricSeries persistence_forecast(const ObservationSeries& history, std::span<const Date> targets);

inline constexpr std::array<int, 5> kPolicyLags{0, 7, 14, 21, 28};

/// Lagged stringency plus calendar features for one date.
struct FeatureVector {
  static constexpr std::size_t kWidth = 8;

  std::array<double, kPolicyLags.size()> lags{};  // stringency at t - lag
  int day_of_week = 0;                             // Monday = 0
  int month = 1;
  int days_since_start = 0;  // since the first policy record

  std::array<double, kWidth> values() const;
  static const std::array<std::string_view, kWidth>& names();
};

/// Date-indexed stringency lookup.
class PolicyIndex {
 public:
  explicit PolicyIndex(std::span<const PolicyRecord> records);
  std::optional<double> stringency(Date date) const;
  std::optional<Date> first_date() const;

 private:
  std::map<Date, double> by_date_;
};

/// nullopt when any lag is missing; such dates are excluded, never imputed.
std::optional<FeatureVector> build_features(const PolicyIndex& policy, Date date);
std::optional<FeatureVector> build_features(std::span<const PolicyRecord> policy, Date date);

}  // namespace policytwin
