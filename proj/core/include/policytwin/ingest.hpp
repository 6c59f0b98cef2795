#pragma once

#include <array>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "policytwin/categories.hpp"
#include "policytwin/date.hpp"

namespace policytwin {

struct PolicyRecord {
  Date date;
  double stringency = 0.0;                  // [0,100]
  std::optional<double> government_response;  // [0,100] when present
};

/// One dated row of per-category values (observations or predictions).
struct MetricRow {
  Date date;
  std::vector<double> values;
};

/// Dated per-category values, strictly increasing in date.
struct MetricSeries {
  CategoryKeys keys;
  std::vector<MetricRow> rows;

  std::size_t size() const { return rows.size(); }
  bool empty() const { return rows.empty(); }
  /// Binary search; nullptr when the date is absent.
  const MetricRow* find(Date date) const;
  /// Throws DataError unless dates are strictly increasing and widths match keys.
  void validate() const;
};

using ObservationSeries = MetricSeries;

/// What a loader skipped and why.
struct LoadReport {
  std::size_t rows_read = 0;
  std::size_t rows_kept = 0;
  std::size_t rows_dropped = 0;    // missing values
  std::size_t rows_filtered = 0;   // excluded by row filters
  std::vector<std::string> notes;  // one line per dropped row
};

/// Header names for a policy export. `filters` keeps only rows whose column
/// equals the given value (e.g. CountryCode = ARE).
struct PolicyColumns {
  std::string date = "date";
  std::string stringency = "stringency";
  std::optional<std::string> government_response;
  std::map<std::string, std::string> filters;
};

/// Header names for an observation export; `categories` maps category key to
/// CSV column, in schema order.
struct ObservationColumns {
  std::string date = "date";
  std::vector<std::pair<std::string, std::string>> categories;
  std::map<std::string, std::string> filters;

  static ObservationColumns from_schema(const CategorySchema& schema);
};

struct PolicyLoad {
  std::vector<PolicyRecord> records;
  LoadReport report;
};

struct ObservationLoad {
  ObservationSeries series;
  LoadReport report;
};

/// Rows with an empty stringency are dropped and noted. Unparseable values,
/// out-of-range indices and duplicate dates are errors naming the data row
/// (1-based, header excluded).
PolicyLoad load_policy_csv(const std::filesystem::path& path, const PolicyColumns& columns);

/// A record with any empty category value is dropped whole and noted.
/// Duplicate dates are an error naming the date.
ObservationLoad load_observations_csv(const std::filesystem::path& path,
                                      const ObservationColumns& columns);

void write_observations_csv(const std::filesystem::path& path, const ObservationSeries& series,
                            std::string_view date_column = "date",
                            std::span<const std::string> comments = {});
void write_policy_csv(const std::filesystem::path& path, std::span<const PolicyRecord> records);

enum class SplitName { kTrain = 0, kValidation = 1, kTest = 2 };
std::string_view to_string(SplitName split);
SplitName parse_split_name(std::string_view text);

/// Train, validation and test date ranges; must be disjoint and ordered.
struct TemporalSplit {
  DateRange train;
  DateRange validation;
  DateRange test;

  /// Throws ConfigError on inverted ranges, overlap or misordering.
  void validate() const;
  const DateRange& range(SplitName split) const;
  /// Which partition a date falls in, if any.
  std::optional<SplitName> classify(Date date) const;
  bool operator==(const TemporalSplit&) const = default;
};

template <typename Record>
struct Partitioned {
  std::vector<Record> train;
  std::vector<Record> validation;
  std::vector<Record> test;

  std::vector<Record>& operator[](SplitName s) {
    return s == SplitName::kTrain ? train : s == SplitName::kValidation ? validation : test;
  }
  const std::vector<Record>& operator[](SplitName s) const {
    return s == SplitName::kTrain ? train : s == SplitName::kValidation ? validation : test;
  }
};

/// Partitions any dated records (anything with a `.date` member). Records
/// outside every range are dropped; order is preserved.
template <typename Record>
Partitioned<Record> split_by_dates(std::span<const Record> records, const TemporalSplit& split) {
  split.validate();
  Partitioned<Record> out;
  for (const auto& r : records) {
    if (auto which = split.classify(r.date)) out[*which].push_back(r);
  }
  return out;
}

/// Same, keeping the MetricSeries wrapper.
std::array<MetricSeries, 3> split_series(const MetricSeries& series, const TemporalSplit& split);

}  // namespace policytwin
