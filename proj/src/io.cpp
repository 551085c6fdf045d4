#include "csm/io.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>
#include <set>

#include <fmt/format.h>
#include <fmt/ostream.h>

#include "csm/error.hpp"

namespace csm {

namespace {

std::string trimmed(std::string s) {
    while (!s.empty() && (s.back() == '\r' || s.back() == ' ' || s.back() == '\t')) s.pop_back();
    std::size_t b = 0;
    while (b < s.size() && (s[b] == ' ' || s[b] == '\t')) ++b;
    return s.substr(b);
}

double parse_number(const std::string& text, std::size_t line, std::string_view column) {
    double value = 0.0;
    const auto* begin = text.data();
    const auto* end = text.data() + text.size();
    const auto [ptr, ec] = std::from_chars(begin, end, value);
    if (ec != std::errc{} || ptr != end || text.empty()) {
        throw Error(ErrorKind::parse, fmt::format("line {}: column '{}' is not numeric: '{}'", line, column, text));
    }
    return value;
}

struct Metadata {
    std::optional<Minutes> resolution;
    std::optional<std::int32_t> offset;
};

void read_metadata(const std::string& line, Metadata& meta) {
    // "# key: value"
    auto body = trimmed(line.substr(1));
    auto colon = body.find(':');
    if (colon == std::string::npos) return;
    auto key = trimmed(body.substr(0, colon));
    auto value = trimmed(body.substr(colon + 1));
    if (key == "resolution") {
        meta.resolution = parse_duration(value);
    } else if (key == "timezone") {
        // Fixed offsets are enforced; named zones are informational.
        if (!value.empty() && (value[0] == '+' || value[0] == '-' || value == "Z")) meta.offset = parse_offset(value);
    }
}

struct Header {
    std::vector<std::string> names;
    std::size_t index(const std::string& name) const {
        auto it = std::find(names.begin(), names.end(), name);
        if (it == names.end()) {
            throw Error(ErrorKind::parse, fmt::format("header lacks column '{}'", name));
        }
        return static_cast<std::size_t>(it - names.begin());
    }
};

Minutes infer_resolution(const std::vector<std::vector<Timestamp>>& groups) {
    std::int64_t g = 0;
    for (const auto& times : groups) {
        for (std::size_t i = 1; i < times.size(); ++i) {
            g = std::gcd(g, (times[i] - times[i - 1]).count());
        }
    }
    if (g <= 0) {
        throw Error(ErrorKind::parse, "cannot infer resolution from fewer than two timestamps; declare '# resolution:'");
    }
    return Minutes{g};
}

void check_offset(const Metadata& meta, const Timestamp& t, std::size_t line) {
    if (meta.offset && *meta.offset != t.offset_minutes) {
        throw Error(ErrorKind::validation, fmt::format("line {}: offset {} differs from declared timezone {}", line,
                                                       format_offset(t.offset_minutes), format_offset(*meta.offset)));
    }
}

std::ifstream open_input(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::io, fmt::format("cannot open '{}'", path));
    return in;
}

std::optional<std::int32_t> common_offset(const std::vector<Timestamp>& times) {
    if (times.empty()) return std::nullopt;
    const auto o = times.front().offset_minutes;
    for (const auto& t : times) {
        if (t.offset_minutes != o) return std::nullopt;
    }
    return o;
}

}  // namespace

std::vector<std::string> split_line(const std::string& line, char delimiter) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        auto pos = line.find(delimiter, start);
        out.push_back(trimmed(line.substr(start, pos == std::string::npos ? std::string::npos : pos - start)));
        if (pos == std::string::npos) break;
        start = pos + 1;
    }
    return out;
}

std::map<std::string, ZoneSeries> ingest_visits(std::istream& in, const VisitSchema& schema) {
    Metadata meta;
    std::optional<Header> header;
    std::map<std::string, std::vector<std::pair<Timestamp, double>>> rows;
    std::set<std::pair<std::string, std::int64_t>> seen;

    std::string line;
    std::size_t lineno = 0;
    std::size_t ts_col = 0, zone_col = 0, count_col = 0;
    while (std::getline(in, line)) {
        ++lineno;
        line = trimmed(line);
        if (line.empty()) continue;
        if (line[0] == '#') {
            read_metadata(line, meta);
            continue;
        }
        auto fields = split_line(line, schema.delimiter);
        if (!header) {
            header = Header{fields};
            ts_col = header->index(schema.timestamp_column);
            zone_col = header->index(schema.zone_column);
            count_col = header->index(schema.visitors_column);
            continue;
        }
        if (fields.size() != header->names.size()) {
            throw Error(ErrorKind::parse, fmt::format("line {}: expected {} fields, got {}", lineno,
                                                      header->names.size(), fields.size()));
        }
        Timestamp t;
        try {
            t = parse_timestamp(fields[ts_col]);
        } catch (const Error& e) {
            throw Error(ErrorKind::parse, fmt::format("line {}: {}", lineno, e.what()));
        }
        check_offset(meta, t, lineno);
        const double count = parse_number(fields[count_col], lineno, schema.visitors_column);
        if (count < 0.0) {
            throw Error(ErrorKind::validation, fmt::format("line {}: negative visitor count {}", lineno, count));
        }
        const std::string& zone = fields[zone_col];
        if (zone.empty()) {
            throw Error(ErrorKind::parse, fmt::format("line {}: empty zone id", lineno));
        }
        if (!seen.emplace(zone, t.utc_minutes).second) {
            throw Error(ErrorKind::conflict, fmt::format("line {}: duplicate row for zone '{}' at {}", lineno, zone,
                                                         format_timestamp(t)));
        }
        rows[zone].emplace_back(t, count);
    }
    if (!header) {
        throw Error(ErrorKind::parse, "visitor file has no header row");
    }

    std::map<std::string, ZoneSeries> out;
    if (rows.empty()) return out;

    std::vector<std::vector<Timestamp>> groups;
    for (auto& [zone, obs] : rows) {
        std::sort(obs.begin(), obs.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
        std::vector<Timestamp> times;
        for (const auto& o : obs) times.push_back(o.first);
        groups.push_back(std::move(times));
    }
    const Minutes resolution = schema.resolution ? *schema.resolution
                               : meta.resolution ? *meta.resolution
                                                 : infer_resolution(groups);
    for (auto& [zone, obs] : rows) {
        out.emplace(zone, ZoneSeries::from_observations(zone, resolution, obs));
    }
    return out;
}

void write_visits(std::ostream& out, const std::map<std::string, ZoneSeries>& zones) {
    std::vector<Timestamp> all;
    std::optional<Minutes> resolution;
    for (const auto& [_, z] : zones) {
        resolution = z.resolution();
        for (const auto& p : z.points()) all.push_back(p.time);
    }
    if (resolution) fmt::print(out, "# resolution: {}\n", format_duration(*resolution));
    if (auto o = common_offset(all)) fmt::print(out, "# timezone: {}\n", format_offset(*o));
    out << "timestamp,zone_id,visitors\n";
    for (const auto& [id, z] : zones) {
        for (const auto& p : z.points()) {
            if (p.visitors) fmt::print(out, "{},{},{}\n", format_timestamp(p.time), id, *p.visitors);
        }
    }
}

WeatherSeries ingest_weather(std::istream& in, std::optional<Minutes> resolution) {
    Metadata meta;
    std::optional<Header> header;
    std::vector<std::pair<Timestamp, WeatherRecord>> rows;
    std::set<std::int64_t> seen;
    std::array<std::size_t, 6> cols{};
    static constexpr std::array<std::string_view, 6> names{"timestamp", "temp_c", "precip_prob_pct",
                                                           "cloudiness", "windspeed_ms", "precip_mm"};
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        line = trimmed(line);
        if (line.empty()) continue;
        if (line[0] == '#') {
            read_metadata(line, meta);
            continue;
        }
        auto fields = split_line(line, ',');
        if (!header) {
            header = Header{fields};
            for (std::size_t i = 0; i < names.size(); ++i) cols[i] = header->index(std::string(names[i]));
            continue;
        }
        if (fields.size() != header->names.size()) {
            throw Error(ErrorKind::parse, fmt::format("line {}: expected {} fields, got {}", lineno,
                                                      header->names.size(), fields.size()));
        }
        Timestamp t;
        try {
            t = parse_timestamp(fields[cols[0]]);
        } catch (const Error& e) {
            throw Error(ErrorKind::parse, fmt::format("line {}: {}", lineno, e.what()));
        }
        check_offset(meta, t, lineno);
        WeatherRecord r;
        r.temperature_c = parse_number(fields[cols[1]], lineno, names[1]);
        r.precip_prob_pct = parse_number(fields[cols[2]], lineno, names[2]);
        r.cloudiness = parse_number(fields[cols[3]], lineno, names[3]);
        r.windspeed_ms = parse_number(fields[cols[4]], lineno, names[4]);
        r.precip_mm = parse_number(fields[cols[5]], lineno, names[5]);
        try {
            r.validate();
        } catch (const Error& e) {
            throw Error(ErrorKind::validation, fmt::format("line {}: {}", lineno, e.what()));
        }
        if (!seen.insert(t.utc_minutes).second) {
            throw Error(ErrorKind::conflict, fmt::format("line {}: duplicate weather row at {}", lineno, format_timestamp(t)));
        }
        rows.emplace_back(t, r);
    }
    if (!header) {
        throw Error(ErrorKind::parse, "weather file has no header row");
    }
    std::sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    if (rows.empty()) return WeatherSeries(resolution.value_or(meta.resolution.value_or(kHour)), {});
    std::vector<std::vector<Timestamp>> groups(1);
    for (const auto& r : rows) groups[0].push_back(r.first);
    const Minutes res = resolution ? *resolution : meta.resolution ? *meta.resolution : infer_resolution(groups);
    return WeatherSeries::from_observations(res, rows);
}

void write_weather(std::ostream& out, const WeatherSeries& weather) {
    fmt::print(out, "# resolution: {}\n", format_duration(weather.resolution()));
    std::vector<Timestamp> all;
    for (const auto& p : weather.points()) all.push_back(p.time);
    if (auto o = common_offset(all)) fmt::print(out, "# timezone: {}\n", format_offset(*o));
    out << "timestamp,temp_c,precip_prob_pct,cloudiness,windspeed_ms,precip_mm\n";
    for (const auto& p : weather.points()) {
        if (!p.record) continue;
        const auto& r = *p.record;
        fmt::print(out, "{},{},{},{},{},{}\n", format_timestamp(p.time), r.temperature_c, r.precip_prob_pct,
                   r.cloudiness, r.windspeed_ms, r.precip_mm);
    }
}

HolidaySet read_holidays(std::istream& in) {
    HolidaySet out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        line = trimmed(line);
        if (line.empty() || line[0] == '#') continue;
        try {
            out.insert(parse_date(line));
        } catch (const Error& e) {
            throw Error(ErrorKind::parse, fmt::format("line {}: {}", lineno, e.what()));
        }
    }
    return out;
}

void write_holidays(std::ostream& out, const HolidaySet& holidays) {
    for (const auto& d : holidays) out << format_date(d) << '\n';
}

EventCalendar read_events(std::istream& in) {
    EventCalendar out;
    std::string line;
    std::size_t lineno = 0;
    bool header = true;
    while (std::getline(in, line)) {
        ++lineno;
        line = trimmed(line);
        if (line.empty() || line[0] == '#') continue;
        if (header) {
            header = false;
            if (line == "date,zone_id") continue;
        }
        const auto fields = split_line(line, ',');
        if (fields.size() != 2 || fields[1].empty()) {
            throw Error(ErrorKind::parse, fmt::format("line {}: expected date,zone_id", lineno));
        }
        try {
            out.emplace(parse_date(fields[0]), fields[1]);
        } catch (const Error& e) {
            throw Error(ErrorKind::parse, fmt::format("line {}: {}", lineno, e.what()));
        }
    }
    return out;
}

void write_events(std::ostream& out, const EventCalendar& events) {
    out << "date,zone_id\n";
    for (const auto& [d, zone] : events) out << format_date(d) << ',' << zone << '\n';
}

std::map<std::string, ZoneSeries> load_visits(const std::string& path, const VisitSchema& schema) {
    auto in = open_input(path);
    return ingest_visits(in, schema);
}

WeatherSeries load_weather(const std::string& path) {
    auto in = open_input(path);
    return ingest_weather(in);
}

HolidaySet load_holidays(const std::string& path) {
    auto in = open_input(path);
    return read_holidays(in);
}

EventCalendar load_events(const std::string& path) {
    auto in = open_input(path);
    return read_events(in);
}

}  // namespace csm
