#pragma once
// Local wall-clock timestamps and calendar dates.
//
// Timestamps carry no timezone: they are the operator's local clock, and all
// hour-of-day rules are evaluated on that clock directly.

#include "homeloc/error.hpp"

#include <charconv>
#include <chrono>
#include <cstdint>
#include <cstdio>
#include <optional>
#include <string>
#include <string_view>

namespace homeloc {

using Timestamp = std::chrono::local_seconds;
using Date = std::chrono::year_month_day;

inline Date date_of(Timestamp ts) {
    return Date{std::chrono::floor<std::chrono::days>(ts)};
}

inline std::int64_t day_number(Date d) {
    return std::chrono::local_days{d}.time_since_epoch().count();
}

inline int hour_of(Timestamp ts) {
    const auto since_midnight = ts - std::chrono::floor<std::chrono::days>(ts);
    return static_cast<int>(std::chrono::duration_cast<std::chrono::hours>(since_midnight).count());
}

namespace detail {

inline bool parse_fixed_int(std::string_view s, int& out) {
    if (s.empty()) return false;
    for (char c : s) {
        if (c < '0' || c > '9') return false;
    }
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    return ec == std::errc{} && ptr == s.data() + s.size();
}

}  // namespace detail

// YYYY-MM-DD
inline std::optional<Date> parse_date(std::string_view s) {
    if (s.size() != 10 || s[4] != '-' || s[7] != '-') return std::nullopt;
    int y = 0, m = 0, d = 0;
    if (!detail::parse_fixed_int(s.substr(0, 4), y) || !detail::parse_fixed_int(s.substr(5, 2), m) ||
        !detail::parse_fixed_int(s.substr(8, 2), d)) {
        return std::nullopt;
    }
    Date date{std::chrono::year{y}, std::chrono::month{static_cast<unsigned>(m)},
              std::chrono::day{static_cast<unsigned>(d)}};
    if (!date.ok()) return std::nullopt;
    return date;
}

// YYYY-MM-DDTHH:MM:SS, no offset.
inline std::optional<Timestamp> parse_timestamp(std::string_view s) {
    if (s.size() != 19 || s[10] != 'T' || s[13] != ':' || s[16] != ':') return std::nullopt;
    auto date = parse_date(s.substr(0, 10));
    if (!date) return std::nullopt;
    int hh = 0, mm = 0, ss = 0;
    if (!detail::parse_fixed_int(s.substr(11, 2), hh) || !detail::parse_fixed_int(s.substr(14, 2), mm) ||
        !detail::parse_fixed_int(s.substr(17, 2), ss)) {
        return std::nullopt;
    }
    if (hh > 23 || mm > 59 || ss > 59) return std::nullopt;
    return Timestamp{std::chrono::local_days{*date}} + std::chrono::hours{hh} + std::chrono::minutes{mm} +
           std::chrono::seconds{ss};
}

inline std::string format_date(Date d) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(d.year()),
                  static_cast<unsigned>(d.month()), static_cast<unsigned>(d.day()));
    return buf;
}

inline std::string format_timestamp(Timestamp ts) {
    const auto day = std::chrono::floor<std::chrono::days>(ts);
    const std::chrono::hh_mm_ss tod{ts - day};
    char buf[32];
    std::snprintf(buf, sizeof buf, "%sT%02d:%02d:%02d", format_date(Date{day}).c_str(),
                  static_cast<int>(tod.hours().count()), static_cast<int>(tod.minutes().count()),
                  static_cast<int>(tod.seconds().count()));
    return buf;
}

inline Date require_date(std::string_view s) {
    auto d = parse_date(s);
    if (!d) throw Error(ErrorKind::ConfigInvalid, "invalid date '" + std::string(s) + "' (expected YYYY-MM-DD)");
    return *d;
}

}  // namespace homeloc
