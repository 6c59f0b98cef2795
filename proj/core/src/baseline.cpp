#include "policytwin/baseline.hpp"

#include <algorithm>
#include <chrono>

#include "policytwin/error.hpp"

namespace policytwin {

MetricSeries persistence_forecast(const ObservationSeries& history, std::span<const Date> targets) {
  std::vector<Date> sorted(targets.begin(), targets.end());
  std::sort(sorted.begin(), sorted.end());
  sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
  MetricSeries out{history.keys, {}};
  out.rows.reserve(sorted.size());
  for (Date t : sorted) {
    auto it = std::lower_bound(history.rows.begin(), history.rows.end(), t,
                               [](const MetricRow& r, Date d) { return r.date < d; });
    if (it == history.rows.begin()) {
      throw DataError("persistence: no observation before " + format_date(t));
    }
    out.rows.push_back(MetricRow{t, std::prev(it)->values});
  }
  return out;
}

std::array<double, FeatureVector::kWidth> FeatureVector::values() const {
  std::array<double, kWidth> v{};
  for (std::size_t i = 0; i < lags.size(); ++i) v[i] = lags[i];
  v[5] = day_of_week;
  v[6] = month;
  v[7] = days_since_start;
  return v;
}

const std::array<std::string_view, FeatureVector::kWidth>& FeatureVector::names() {
  static const std::array<std::string_view, kWidth> kNames{
      "stringency_lag0", "stringency_lag7", "stringency_lag14", "stringency_lag21",
      "stringency_lag28", "day_of_week",     "month",            "days_since_start"};
  return kNames;
}

PolicyIndex::PolicyIndex(std::span<const PolicyRecord> records) {
  for (const auto& r : records) by_date_[r.date] = r.stringency;
}

std::optional<double> PolicyIndex::stringency(Date date) const {
  auto it = by_date_.find(date);
  if (it == by_date_.end()) return std::nullopt;
  return it->second;
}

std::optional<Date> PolicyIndex::first_date() const {
  if (by_date_.empty()) return std::nullopt;
  return by_date_.begin()->first;
}

std::optional<FeatureVector> build_features(const PolicyIndex& policy, Date date) {
  FeatureVector f;
  for (std::size_t i = 0; i < kPolicyLags.size(); ++i) {
    auto s = policy.stringency(date - std::chrono::days(kPolicyLags[i]));
    if (!s) return std::nullopt;
    f.lags[i] = *s;
  }
  f.day_of_week = day_of_week(date);
  f.month = month_of(date);
  f.days_since_start = static_cast<int>((date - *policy.first_date()).count());
  return f;
}

std::optional<FeatureVector> build_features(std::span<const PolicyRecord> policy, Date date) {
  return build_features(PolicyIndex(policy), date);
}

}  // namespace policytwin
