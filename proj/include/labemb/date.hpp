#pragma once

#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace labemb {

/// Calendar day, stored as days since 1970-01-01 (UTC).
struct Date {
  std::int32_t days = 0;

  friend auto operator<=>(const Date&, const Date&) = default;
  friend Date operator+(Date d, std::int32_t n) { return Date{d.days + n}; }
  friend Date operator-(Date d, std::int32_t n) { return Date{d.days - n}; }
  friend std::int32_t operator-(Date a, Date b) { return a.days - b.days; }
};

Date make_date(int year, unsigned month, unsigned day);

/// Accepts `YYYY-MM-DD` optionally followed by `T` or a space and a time of
/// day, which is discarded.
std::optional<Date> parse_date(std::string_view text);

std::string format_date(Date d);

}  // namespace labemb
