#include "policytwin/date.hpp"

#include <charconv>
#include <cstdio>

#include "policytwin/error.hpp"

namespace policytwin {
namespace {

bool parse_digits(std::string_view s, int& out) {
  if (s.empty()) return false;
  for (char c : s) {
    if (c < '0' || c > '9') return false;
  }
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc{} && ptr == s.data() + s.size();
}

}  // namespace

Date parse_date(std::string_view text) {
  while (!text.empty() && (text.front() == ' ' || text.front() == '\t')) text.remove_prefix(1);
  while (!text.empty() && (text.back() == ' ' || text.back() == '\t' || text.back() == '\r')) {
    text.remove_suffix(1);
  }
  int y = 0, m = 0, d = 0;
  bool ok = false;
  if (text.size() == 10 && text[4] == '-' && text[7] == '-') {
    ok = parse_digits(text.substr(0, 4), y) && parse_digits(text.substr(5, 2), m) &&
         parse_digits(text.substr(8, 2), d);
  } else if (text.size() == 8) {
    ok = parse_digits(text.substr(0, 4), y) && parse_digits(text.substr(4, 2), m) &&
         parse_digits(text.substr(6, 2), d);
  }
  const std::chrono::year_month_day ymd{std::chrono::year{y}, std::chrono::month{static_cast<unsigned>(m)},
                                        std::chrono::day{static_cast<unsigned>(d)}};
  if (!ok || !ymd.ok()) throw DataError("invalid date '" + std::string(text) + "'");
  return Date{ymd};
}

std::string format_date(Date date) {
  const std::chrono::year_month_day ymd{date};
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
  return buf;
}

int day_of_week(Date date) {
  return static_cast<int>(std::chrono::weekday{date}.iso_encoding()) - 1;
}

int month_of(Date date) {
  return static_cast<int>(static_cast<unsigned>(std::chrono::year_month_day{date}.month()));
}

}  // namespace policytwin
