#pragma once

#include <chrono>
#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace loyalty {

// Calendar date at day resolution, stored as days since 1970-01-01.
class Date {
 public:
  constexpr Date() = default;
  constexpr explicit Date(std::int32_t days_since_epoch) : days_(days_since_epoch) {}

  static std::optional<Date> from_ymd(int year, unsigned month, unsigned day);
  // "YYYYMMDD"
  static std::optional<Date> parse_compact(std::string_view text);
  // "YYYY-MM-DD", optionally followed by 'T' or ' ' and a time of day which is ignored.
  static std::optional<Date> parse_iso(std::string_view text);

  constexpr std::int32_t days() const { return days_; }
  std::chrono::year_month_day ymd() const;
  std::string iso() const;

  constexpr Date operator+(std::int32_t n) const { return Date(days_ + n); }
  constexpr std::int32_t operator-(Date other) const { return days_ - other.days_; }
  constexpr auto operator<=>(const Date&) const = default;

 private:
  std::int32_t days_ = 0;
};

}  // namespace loyalty
