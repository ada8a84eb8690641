// Copyright 2026 The newsei Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <array>
#include <chrono>
#include <compare>
#include <optional>
#include <string>
#include <string_view>

#include "newsei/error.hpp"

namespace newsei {

/// A calendar day. Serialized as YYYYMMDD everywhere on disk and in prompts.
class DateStamp {
 public:
  constexpr DateStamp() = default;
  constexpr explicit DateStamp(std::chrono::sys_days day) : day_(day) {}

  static std::optional<DateStamp> try_parse(std::string_view text) {
    if (text.size() != 8) return std::nullopt;
    int value[3] = {0, 0, 0};
    constexpr std::size_t widths[3] = {4, 2, 2};
    std::size_t pos = 0;
    for (int field = 0; field < 3; ++field) {
      for (std::size_t i = 0; i < widths[field]; ++i, ++pos) {
        const char c = text[pos];
        if (c < '0' || c > '9') return std::nullopt;
        value[field] = value[field] * 10 + (c - '0');
      }
    }
    const std::chrono::year_month_day ymd{
        std::chrono::year{value[0]},
        std::chrono::month{static_cast<unsigned>(value[1])},
        std::chrono::day{static_cast<unsigned>(value[2])}};
    if (!ymd.ok()) return std::nullopt;
    return DateStamp(std::chrono::sys_days{ymd});
  }

  static DateStamp parse(std::string_view text) {
    if (auto d = try_parse(text)) return *d;
    throw Error(ErrorKind::BadDate,
                "not a valid YYYYMMDD day: '" + std::string(text) + "'");
  }

  static DateStamp from_ymd(int y, unsigned m, unsigned d) {
    const std::chrono::year_month_day ymd{std::chrono::year{y},
                                          std::chrono::month{m},
                                          std::chrono::day{d}};
    if (!ymd.ok()) throw Error(ErrorKind::BadDate, "invalid calendar day");
    return DateStamp(std::chrono::sys_days{ymd});
  }

  std::chrono::year_month_day ymd() const { return {day_}; }
  std::chrono::sys_days days() const { return day_; }

  DateStamp plus_days(long n) const {
    return DateStamp(day_ + std::chrono::days{n});
  }

  /// Signed distance in days, `other - *this`.
  long days_until(DateStamp other) const {
    return static_cast<long>((other.day_ - day_).count());
  }

  std::string str() const {
    const auto d = ymd();
    const int y = static_cast<int>(d.year());
    const unsigned m = static_cast<unsigned>(d.month());
    const unsigned dd = static_cast<unsigned>(d.day());
    std::string out(8, '0');
    int yy = y;
    for (int i = 3; i >= 0; --i, yy /= 10) out[i] = static_cast<char>('0' + yy % 10);
    out[4] = static_cast<char>('0' + m / 10);
    out[5] = static_cast<char>('0' + m % 10);
    out[6] = static_cast<char>('0' + dd / 10);
    out[7] = static_cast<char>('0' + dd % 10);
    return out;
  }

  /// "August 31, 2023"
  std::string natural() const {
    static constexpr std::array<const char*, 12> kMonths = {
        "January", "February", "March",     "April",   "May",      "June",
        "July",    "August",   "September", "October", "November", "December"};
    const auto d = ymd();
    return std::string(kMonths[static_cast<unsigned>(d.month()) - 1]) + " " +
           std::to_string(static_cast<unsigned>(d.day())) + ", " +
           std::to_string(static_cast<int>(d.year()));
  }

  friend constexpr auto operator<=>(const DateStamp&, const DateStamp&) = default;

 private:
  std::chrono::sys_days day_{};
};

}  // namespace newsei

template <>
struct std::hash<newsei::DateStamp> {
  std::size_t operator()(const newsei::DateStamp& d) const noexcept {
    return std::hash<long>{}(static_cast<long>(d.days().time_since_epoch().count()));
  }
};
