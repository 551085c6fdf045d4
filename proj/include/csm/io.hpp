#pragma once

#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <string>

#include "csm/series.hpp"

namespace csm {

/// Column mapping for delimiter-separated visitor files.
struct VisitSchema {
    std::string timestamp_column = "timestamp";
    std::string zone_column = "zone_id";
    std::string visitors_column = "visitors";
    char delimiter = ',';
    /// Grid spacing; when absent it comes from a `# resolution: ...`
    /// metadata line or is inferred from the observed spacing.
    std::optional<Minutes> resolution;
};

/// Reads `timestamp,zone_id,visitors` rows into one series per zone.
/// Rows may arrive in any order. Lines starting with `#` carry metadata
/// (`# resolution: 1h`, `# timezone: +01:00`).
std::map<std::string, ZoneSeries> ingest_visits(std::istream& in, const VisitSchema& schema = {});
void write_visits(std::ostream& out, const std::map<std::string, ZoneSeries>& zones);

/// Reads `timestamp,temp_c,precip_prob_pct,cloudiness,windspeed_ms,precip_mm`.
WeatherSeries ingest_weather(std::istream& in, std::optional<Minutes> resolution = std::nullopt);
void write_weather(std::ostream& out, const WeatherSeries& weather);

/// One ISO date per line; blank lines and `#` comments ignored.
HolidaySet read_holidays(std::istream& in);
void write_holidays(std::ostream& out, const HolidaySet& holidays);

/// Planned events as `date,zone_id` rows.
using EventCalendar = std::set<std::pair<Date, std::string>>;
EventCalendar read_events(std::istream& in);
void write_events(std::ostream& out, const EventCalendar& events);

std::map<std::string, ZoneSeries> load_visits(const std::string& path, const VisitSchema& schema = {});
WeatherSeries load_weather(const std::string& path);
HolidaySet load_holidays(const std::string& path);
EventCalendar load_events(const std::string& path);

/// Splits one delimited line; no quoting.
std::vector<std::string> split_line(const std::string& line, char delimiter);

}  // namespace csm
