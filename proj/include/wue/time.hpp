#pragma once

#include <chrono>
#include <cstdio>
#include <optional>
#include <string>
#include <string_view>

#include "wue/error.hpp"

namespace wue {

// Every record in the pipeline is keyed by a UTC hour boundary.
using UtcHour = std::chrono::sys_time<std::chrono::hours>;
using std::chrono::hours;

namespace detail {

inline bool take_digits(std::string_view& s, int count, int& out) {
    if (s.size() < static_cast<std::size_t>(count)) return false;
    int v = 0;
    for (int i = 0; i < count; ++i) {
        char c = s[static_cast<std::size_t>(i)];
        if (c < '0' || c > '9') return false;
        v = v * 10 + (c - '0');
    }
    out = v;
    s.remove_prefix(static_cast<std::size_t>(count));
    return true;
}

inline bool take_char(std::string_view& s, char c) {
    if (s.empty() || s.front() != c) return false;
    s.remove_prefix(1);
    return true;
}

}  // namespace detail

// Parses an ISO-8601-ish UTC timestamp. Accepted shapes:
//   2023-07-01T14:00:00Z, 2023-07-01T14:00:00, 2023-07-01 14:00:00,
//   2023-07-01T14:00, 2023-07-01T14 (hourly API periods), 2023-07-01
// with an optional trailing "Z" or "+00:00". Returns nullopt on anything else.
inline std::optional<std::chrono::sys_seconds> parse_timestamp(std::string_view s) {
    using namespace std::chrono;
    int y = 0, mo = 0, d = 0, h = 0, mi = 0, se = 0;
    if (!detail::take_digits(s, 4, y) || !detail::take_char(s, '-') || !detail::take_digits(s, 2, mo) ||
        !detail::take_char(s, '-') || !detail::take_digits(s, 2, d))
        return std::nullopt;
    if (!s.empty() && (s.front() == 'T' || s.front() == ' ')) {
        s.remove_prefix(1);
        if (!detail::take_digits(s, 2, h)) return std::nullopt;
        if (detail::take_char(s, ':')) {
            if (!detail::take_digits(s, 2, mi)) return std::nullopt;
            if (detail::take_char(s, ':') && !detail::take_digits(s, 2, se)) return std::nullopt;
        }
    }
    if (s == "Z" || s == "+00:00") s = {};
    if (!s.empty()) return std::nullopt;

    year_month_day ymd{year{y}, month{static_cast<unsigned>(mo)}, day{static_cast<unsigned>(d)}};
    if (!ymd.ok() || h > 23 || mi > 59 || se > 59) return std::nullopt;
    return sys_days{ymd} + std::chrono::hours{h} + minutes{mi} + seconds{se};
}

inline bool is_hour_aligned(std::chrono::sys_seconds t) {
    return std::chrono::floor<std::chrono::hours>(t) == t;
}

inline UtcHour floor_hour(std::chrono::sys_seconds t) { return std::chrono::floor<std::chrono::hours>(t); }

// Strict variant for flags and config values: must parse and be hour-aligned.
inline UtcHour parse_utc_hour(std::string_view s) {
    auto t = parse_timestamp(s);
    if (!t) throw DataError("malformed timestamp '" + std::string(s) + "'");
    if (!is_hour_aligned(*t)) throw DataError("timestamp '" + std::string(s) + "' is not hour-aligned");
    return floor_hour(*t);
}

inline std::string format_utc_hour(UtcHour t) {
    using namespace std::chrono;
    auto days = floor<std::chrono::days>(t);
    year_month_day ymd{days};
    auto hh = (t - days).count();
    char buf[32];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02d:00:00Z", static_cast<int>(ymd.year()),
                  static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()), static_cast<int>(hh));
    return buf;
}

// Compact form used in cache file names and API queries (2023-07-01T14).
inline std::string format_compact_hour(UtcHour t) {
    std::string s = format_utc_hour(t);
    return s.substr(0, 13);
}

inline std::string format_date(std::chrono::year_month_day ymd) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(ymd.year()),
                  static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
    return buf;
}

inline std::optional<std::chrono::year_month_day> parse_date(std::string_view s) {
    int y = 0, mo = 0, d = 0;
    if (!detail::take_digits(s, 4, y) || !detail::take_char(s, '-') || !detail::take_digits(s, 2, mo) ||
        !detail::take_char(s, '-') || !detail::take_digits(s, 2, d) || !s.empty())
        return std::nullopt;
    std::chrono::year_month_day ymd{std::chrono::year{y}, std::chrono::month{static_cast<unsigned>(mo)},
                                    std::chrono::day{static_cast<unsigned>(d)}};
    if (!ymd.ok()) return std::nullopt;
    return ymd;
}

}  // namespace wue
