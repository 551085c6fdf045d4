#include "csm/time.hpp"

#include <charconv>
#include <cstdlib>

#include <fmt/format.h>

#include "csm/error.hpp"

namespace csm {

namespace {

int parse_digits(std::string_view text, std::size_t pos, std::size_t count, std::string_view what) {
    if (pos + count > text.size()) {
        throw Error(ErrorKind::parse, fmt::format("truncated {} in '{}'", what, text));
    }
    int value = 0;
    for (std::size_t i = pos; i < pos + count; ++i) {
        const char c = text[i];
        if (c < '0' || c > '9') {
            throw Error(ErrorKind::parse, fmt::format("bad {} in '{}'", what, text));
        }
        value = value * 10 + (c - '0');
    }
    return value;
}

void expect_char(std::string_view text, std::size_t pos, char c) {
    if (pos >= text.size() || text[pos] != c) {
        throw Error(ErrorKind::parse, fmt::format("expected '{}' at position {} in '{}'", c, pos, text));
    }
}

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

}  // namespace

Date Timestamp::local_date() const {
    const auto local = local_minutes();
    auto days = local / 1440;
    if (local % 1440 < 0) --days;
    return Date{std::chrono::days{days}};
}

Timestamp local_midnight(Date date, std::int32_t offset_minutes) {
    const std::int64_t local = static_cast<std::int64_t>(date.time_since_epoch().count()) * 1440;
    return Timestamp{local - offset_minutes, offset_minutes};
}

Date parse_date(std::string_view text) {
    text = trim(text);
    if (text.size() != 10) {
        throw Error(ErrorKind::parse, fmt::format("bad date '{}'", text));
    }
    const int y = parse_digits(text, 0, 4, "year");
    expect_char(text, 4, '-');
    const int m = parse_digits(text, 5, 2, "month");
    expect_char(text, 7, '-');
    const int d = parse_digits(text, 8, 2, "day");
    const std::chrono::year_month_day ymd{std::chrono::year{y}, std::chrono::month{static_cast<unsigned>(m)},
                                          std::chrono::day{static_cast<unsigned>(d)}};
    if (!ymd.ok()) {
        throw Error(ErrorKind::parse, fmt::format("invalid calendar date '{}'", text));
    }
    return Date{ymd};
}

std::string format_date(Date date) {
    const std::chrono::year_month_day ymd{date};
    return fmt::format("{:04d}-{:02d}-{:02d}", static_cast<int>(ymd.year()),
                       static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
}

std::int32_t parse_offset(std::string_view text) {
    text = trim(text);
    if (text == "Z") return 0;
    if (text.size() != 6 || (text[0] != '+' && text[0] != '-')) {
        throw Error(ErrorKind::parse, fmt::format("bad UTC offset '{}'", text));
    }
    const int h = parse_digits(text, 1, 2, "offset hour");
    expect_char(text, 3, ':');
    const int m = parse_digits(text, 4, 2, "offset minute");
    if (h > 18 || m > 59) {
        throw Error(ErrorKind::parse, fmt::format("UTC offset out of range '{}'", text));
    }
    const int total = h * 60 + m;
    return text[0] == '-' ? -total : total;
}

std::string format_offset(std::int32_t offset_minutes) {
    const char sign = offset_minutes < 0 ? '-' : '+';
    const int a = std::abs(offset_minutes);
    return fmt::format("{}{:02d}:{:02d}", sign, a / 60, a % 60);
}

Timestamp parse_timestamp(std::string_view text) {
    text = trim(text);
    if (text.size() < 16) {
        throw Error(ErrorKind::parse, fmt::format("bad timestamp '{}'", text));
    }
    const Date date = parse_date(text.substr(0, 10));
    if (text[10] != 'T' && text[10] != ' ') {
        throw Error(ErrorKind::parse, fmt::format("expected 'T' in timestamp '{}'", text));
    }
    const int hh = parse_digits(text, 11, 2, "hour");
    expect_char(text, 13, ':');
    const int mm = parse_digits(text, 14, 2, "minute");
    std::size_t pos = 16;
    if (pos < text.size() && text[pos] == ':') {
        const int ss = parse_digits(text, pos + 1, 2, "second");
        if (ss != 0) {
            throw Error(ErrorKind::parse, fmt::format("timestamps have minute precision: '{}'", text));
        }
        pos += 3;
    }
    if (hh > 23 || mm > 59) {
        throw Error(ErrorKind::parse, fmt::format("time of day out of range in '{}'", text));
    }
    if (pos >= text.size()) {
        throw Error(ErrorKind::parse, fmt::format("timestamp '{}' lacks a UTC offset", text));
    }
    const std::int32_t offset = parse_offset(text.substr(pos));
    Timestamp t = local_midnight(date, offset);
    t.utc_minutes += hh * 60 + mm;
    return t;
}

std::string format_timestamp(const Timestamp& t) {
    const auto local = t.local_minutes();
    auto minute_of_day = local % 1440;
    if (minute_of_day < 0) minute_of_day += 1440;
    return fmt::format("{}T{:02d}:{:02d}{}", format_date(t.local_date()), minute_of_day / 60,
                       minute_of_day % 60, format_offset(t.offset_minutes));
}

Minutes parse_duration(std::string_view text) {
    text = trim(text);
    long long value = 0;
    const auto* begin = text.data();
    const auto* end = text.data() + text.size();
    const auto [ptr, ec] = std::from_chars(begin, end, value);
    if (ec != std::errc{} || ptr == begin || value <= 0) {
        throw Error(ErrorKind::parse, fmt::format("bad duration '{}'", text));
    }
    const std::string_view unit{ptr, static_cast<std::size_t>(end - ptr)};
    if (unit.empty() || unit == "m" || unit == "min") return Minutes{value};
    if (unit == "h") return Minutes{value * 60};
    if (unit == "d") return Minutes{value * 1440};
    throw Error(ErrorKind::parse, fmt::format("unknown duration unit in '{}'", text));
}

std::string format_duration(Minutes d) {
    const auto m = d.count();
    if (m % 1440 == 0) return fmt::format("{}d", m / 1440);
    if (m % 60 == 0) return fmt::format("{}h", m / 60);
    return fmt::format("{}min", m);
}

}  // namespace csm
