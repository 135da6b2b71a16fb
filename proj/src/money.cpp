#include "loyalty/money.hpp"

#include <cstdlib>
#include <limits>

namespace loyalty {

std::optional<Money> Money::parse(std::string_view text) {
  if (text.empty()) return std::nullopt;
  bool negative = false;
  if (text.front() == '-' || text.front() == '+') {
    negative = text.front() == '-';
    text.remove_prefix(1);
  }
  const auto dot = text.find('.');
  const std::string_view whole = text.substr(0, dot);
  const std::string_view frac = dot == std::string_view::npos ? std::string_view{} : text.substr(dot + 1);
  if (whole.empty() && frac.empty()) return std::nullopt;

  constexpr std::int64_t kMaxWhole = std::numeric_limits<std::int64_t>::max() / 1000;
  std::int64_t units = 0;
  for (char c : whole) {
    if (c < '0' || c > '9') return std::nullopt;
    units = units * 10 + (c - '0');
    if (units > kMaxWhole) return std::nullopt;
  }
  std::int64_t cents = 0;
  bool round_up = false;
  for (std::size_t i = 0; i < frac.size(); ++i) {
    const char c = frac[i];
    if (c < '0' || c > '9') return std::nullopt;
    if (i < 2) cents = cents * 10 + (c - '0');
    if (i == 2) round_up = c >= '5';
  }
  if (frac.size() == 1) cents *= 10;
  std::int64_t total = units * 100 + cents + (round_up ? 1 : 0);
  return Money(negative ? -total : total);
}

std::string Money::str() const {
  const std::int64_t magnitude = std::llabs(cents_);
  std::string out = cents_ < 0 ? "-" : "";
  out += std::to_string(magnitude / 100);
  out += '.';
  const auto frac = magnitude % 100;
  out += static_cast<char>('0' + frac / 10);
  out += static_cast<char>('0' + frac % 10);
  return out;
}

}  // namespace loyalty
