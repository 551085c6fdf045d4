#pragma once

#include <chrono>
#include <compare>
#include <cstdint>
#include <string>
#include <string_view>

namespace csm {

using Minutes = std::chrono::minutes;
using Date = std::chrono::sys_days;

inline constexpr Minutes kQuarterHour{15};
inline constexpr Minutes kHour{60};
inline constexpr Minutes kDay{1440};

/// An instant with minute precision plus the UTC offset it was recorded in.
/// Ordering and equality compare the instant only.
struct Timestamp {
    std::int64_t utc_minutes = 0;  // since 1970-01-01T00:00Z
    std::int32_t offset_minutes = 0;

    std::int64_t local_minutes() const { return utc_minutes + offset_minutes; }
    Date local_date() const;

    friend bool operator==(const Timestamp& a, const Timestamp& b) {
        return a.utc_minutes == b.utc_minutes;
    }
    friend std::strong_ordering operator<=>(const Timestamp& a, const Timestamp& b) {
        return a.utc_minutes <=> b.utc_minutes;
    }
};

inline Timestamp operator+(Timestamp t, Minutes d) {
    t.utc_minutes += d.count();
    return t;
}
inline Timestamp operator-(Timestamp t, Minutes d) {
    t.utc_minutes -= d.count();
    return t;
}
inline Minutes operator-(const Timestamp& a, const Timestamp& b) {
    return Minutes{a.utc_minutes - b.utc_minutes};
}

/// Local wall-clock midnight of `date` in the given offset.
Timestamp local_midnight(Date date, std::int32_t offset_minutes);

/// Parses `YYYY-MM-DDTHH:MM[:SS](Z|±HH:MM)`. Seconds must be zero.
Timestamp parse_timestamp(std::string_view text);
/// Formats as `YYYY-MM-DDTHH:MM±HH:MM`.
std::string format_timestamp(const Timestamp& t);

Date parse_date(std::string_view text);
std::string format_date(Date date);

/// Parses `±HH:MM` or `Z`.
std::int32_t parse_offset(std::string_view text);
std::string format_offset(std::int32_t offset_minutes);

/// Parses durations such as `15min`, `1h`, `10d`, or a bare minute count.
Minutes parse_duration(std::string_view text);
std::string format_duration(Minutes d);

}  // namespace csm
