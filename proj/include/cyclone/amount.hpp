#pragma once

#include <compare>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <string_view>

namespace cyclone {

/// Currency amount held as integer minor units (cents). Threshold
/// comparisons are exact.
class Amount {
 public:
  constexpr Amount() = default;

  static constexpr Amount from_minor_units(std::int64_t cents) { return Amount(cents); }
  static constexpr Amount from_major_units(std::int64_t units) { return Amount(units * 100); }
  static constexpr Amount max() { return Amount(std::numeric_limits<std::int64_t>::max()); }

  /// Accepts `[-]digits[.d[d]]`. Returns nullopt on anything else,
  /// including overflow.
  static std::optional<Amount> parse(std::string_view text);

  constexpr std::int64_t minor_units() const { return cents_; }
  double to_double() const { return static_cast<double>(cents_) / 100.0; }

  /// Always two fractional digits, e.g. "4500.00", "-0.05".
  std::string to_string() const;

  constexpr auto operator<=>(const Amount&) const = default;

  constexpr Amount& operator+=(Amount other) {
    cents_ += other.cents_;
    return *this;
  }
  friend constexpr Amount operator+(Amount a, Amount b) { return a += b; }

 private:
  constexpr explicit Amount(std::int64_t cents) : cents_(cents) {}
  std::int64_t cents_ = 0;
};

}  // namespace cyclone
