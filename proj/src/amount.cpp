#include "cyclone/amount.hpp"

#include <charconv>
#include <cstdlib>

namespace cyclone {

std::optional<Amount> Amount::parse(std::string_view text) {
  bool negative = false;
  if (!text.empty() && text.front() == '-') {
    negative = true;
    text.remove_prefix(1);
  }
  const auto dot = text.find('.');
  const std::string_view whole = text.substr(0, dot);
  std::string_view frac;
  if (dot != std::string_view::npos) {
    frac = text.substr(dot + 1);
    if (frac.empty() || frac.size() > 2) return std::nullopt;
  }
  if (whole.empty()) return std::nullopt;
  for (char c : whole)
    if (c < '0' || c > '9') return std::nullopt;
  for (char c : frac)
    if (c < '0' || c > '9') return std::nullopt;

  std::int64_t units = 0;
  auto [ptr, ec] = std::from_chars(whole.data(), whole.data() + whole.size(), units);
  if (ec != std::errc{} || ptr != whole.data() + whole.size()) return std::nullopt;
  if (units > (std::numeric_limits<std::int64_t>::max() - 99) / 100) return std::nullopt;

  std::int64_t cents = 0;
  if (frac.size() == 1) cents = (frac[0] - '0') * 10;
  if (frac.size() == 2) cents = (frac[0] - '0') * 10 + (frac[1] - '0');

  const std::int64_t total = units * 100 + cents;
  return Amount(negative ? -total : total);
}

std::string Amount::to_string() const {
  // Work in unsigned to survive INT64_MIN.
  const bool negative = cents_ < 0;
  const std::uint64_t magnitude =
      negative ? ~static_cast<std::uint64_t>(cents_) + 1 : static_cast<std::uint64_t>(cents_);
  std::string out = std::to_string(magnitude / 100);
  const auto frac = magnitude % 100;
  out.push_back('.');
  out.push_back(static_cast<char>('0' + frac / 10));
  out.push_back(static_cast<char>('0' + frac % 10));
  if (negative) out.insert(out.begin(), '-');
  return out;
}

}  // namespace cyclone
