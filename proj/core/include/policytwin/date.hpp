#pragma once

#include <chrono>
#include <string>
#include <string_view>

namespace policytwin {

/// Calendar day. Arithmetic is in whole days.
using Date = std::chrono::sys_days;

/// Parses `YYYY-MM-DD`, or the compact `YYYYMMDD` used by some trackers.
/// Throws DataError on anything else, including impossible dates.
Date parse_date(std::string_view text);

std::string format_date(Date date);

/// Monday = 0 ... Sunday = 6.
int day_of_week(Date date);

/// 1..12
int month_of(Date date);

/// Inclusive range of days.
struct DateRange {
  Date first;
  Date last;

  bool contains(Date d) const { return first <= d && d <= last; }
  bool overlaps(const DateRange& other) const {
    return first <= other.last && other.first <= last;
  }
  bool operator==(const DateRange&) const = default;
};

}  // namespace policytwin
