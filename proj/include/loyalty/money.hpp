#pragma once

#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace loyalty {

// Currency amount held as an exact count of cents.
class Money {
 public:
  constexpr Money() = default;
  static constexpr Money from_cents(std::int64_t cents) { return Money(cents); }

  // Accepts an optional sign, integer digits and up to any number of fractional
  // digits; amounts are rounded half away from zero to whole cents.
  static std::optional<Money> parse(std::string_view text);

  constexpr std::int64_t cents() const { return cents_; }
  double to_double() const { return static_cast<double>(cents_) / 100.0; }
  // Always two fractional digits, e.g. "23.54", "-0.05".
  std::string str() const;

  constexpr Money& operator+=(Money other) {
    cents_ += other.cents_;
    return *this;
  }
  friend constexpr Money operator+(Money a, Money b) { return Money(a.cents_ + b.cents_); }
  constexpr auto operator<=>(const Money&) const = default;

 private:
  constexpr explicit Money(std::int64_t cents) : cents_(cents) {}
  std::int64_t cents_ = 0;
};

}  // namespace loyalty
