#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "csm/time.hpp"

namespace csm {

using HolidaySet = std::set<Date>;

struct WeatherRecord {
    double temperature_c = 0.0;
    double precip_prob_pct = 0.0;  // [0, 100]
    double cloudiness = 0.0;       // index >= 0
    double windspeed_ms = 0.0;
    double precip_mm = 0.0;

    /// Throws Error(validation) when a field leaves its physical range.
    void validate() const;

    friend bool operator==(const WeatherRecord&, const WeatherRecord&) = default;
};

/// One slot of a regular grid. A slot without a value is a gap.
/// `coverage` is the fraction of sub-buckets that contributed after resampling.
struct VisitPoint {
    Timestamp time;
    std::optional<double> visitors;
    double coverage = 1.0;

    bool is_gap() const { return !visitors.has_value(); }
    friend bool operator==(const VisitPoint&, const VisitPoint&) = default;
};

struct WeatherPoint {
    Timestamp time;
    std::optional<WeatherRecord> record;

    bool is_gap() const { return !record.has_value(); }
    friend bool operator==(const WeatherPoint&, const WeatherPoint&) = default;
};

struct TimeRange {
    Timestamp first;
    Timestamp last;
};

/// Visitor counts of a single zone on a contiguous grid. Gaps are explicit
/// slots; consecutive slots are exactly `resolution` apart.
class ZoneSeries {
public:
    ZoneSeries() = default;
    ZoneSeries(std::string zone_id, Minutes resolution, std::vector<VisitPoint> points);

    /// Builds a grid from sorted (time, count) observations, inserting gap
    /// slots wherever the spacing exceeds `resolution`.
    static ZoneSeries from_observations(std::string zone_id, Minutes resolution,
                                        const std::vector<std::pair<Timestamp, double>>& observations);

    const std::string& zone_id() const { return zone_id_; }
    Minutes resolution() const { return resolution_; }
    const std::vector<VisitPoint>& points() const { return points_; }
    std::size_t size() const { return points_.size(); }
    bool empty() const { return points_.empty(); }

    std::optional<std::size_t> index_of(const Timestamp& t) const;
    std::optional<double> value_at(const Timestamp& t) const;
    /// First and last non-gap slot.
    std::optional<TimeRange> observed_range() const;
    std::size_t gap_count() const;

    /// Slots with first <= time <= last, padded with gaps to cover the range.
    ZoneSeries slice(const Timestamp& first, const Timestamp& last) const;

    friend bool operator==(const ZoneSeries&, const ZoneSeries&) = default;

private:
    std::string zone_id_;
    Minutes resolution_{kHour};
    std::vector<VisitPoint> points_;
};

class WeatherSeries {
public:
    WeatherSeries() = default;
    WeatherSeries(Minutes resolution, std::vector<WeatherPoint> points);

    static WeatherSeries from_observations(Minutes resolution,
                                           const std::vector<std::pair<Timestamp, WeatherRecord>>& observations);

    Minutes resolution() const { return resolution_; }
    const std::vector<WeatherPoint>& points() const { return points_; }
    std::size_t size() const { return points_.size(); }
    bool empty() const { return points_.empty(); }

    std::optional<std::size_t> index_of(const Timestamp& t) const;
    const WeatherRecord* record_at(const Timestamp& t) const;
    std::optional<TimeRange> observed_range() const;
    WeatherSeries slice(const Timestamp& first, const Timestamp& last) const;

    /// Concatenates a later series onto this one; grids must line up.
    WeatherSeries extended_with(const WeatherSeries& later) const;

    friend bool operator==(const WeatherSeries&, const WeatherSeries&) = default;

private:
    Minutes resolution_{kHour};
    std::vector<WeatherPoint> points_;
};

struct CalendarFeatures {
    int hour = 0;
    int weekday = 0;  // Monday = 0
    int month = 1;
    bool is_weekend = false;
    bool is_holiday = false;

    friend bool operator==(const CalendarFeatures&, const CalendarFeatures&) = default;
};

/// Calendar fields of `t` in its own local time.
CalendarFeatures calendar_features(const Timestamp& t, const HolidaySet& holidays);

enum class ResampleMode { sum, mean };

/// Aggregates into buckets of `target` aligned to local midnight. Buckets
/// without data become gaps; partially covered buckets carry their coverage.
ZoneSeries resample(const ZoneSeries& series, Minutes target, ResampleMode mode);
/// Field-wise mean over each bucket.
WeatherSeries resample(const WeatherSeries& series, Minutes target);

/// Zones, weather and holidays on one shared grid.
class Dataset {
public:
    Dataset(std::map<std::string, ZoneSeries> zones, WeatherSeries weather, HolidaySet holidays,
            Minutes resolution);

    const std::map<std::string, ZoneSeries>& zones() const { return zones_; }
    const ZoneSeries& zone(const std::string& zone_id) const;
    bool has_zone(const std::string& zone_id) const { return zones_.count(zone_id) != 0; }
    std::vector<std::string> zone_ids() const;
    const WeatherSeries& weather() const { return weather_; }
    const HolidaySet& holidays() const { return holidays_; }
    Minutes resolution() const { return resolution_; }
    /// Grid timestamps shared by every member series.
    std::vector<Timestamp> timestamps() const;

private:
    std::map<std::string, ZoneSeries> zones_;
    WeatherSeries weather_;
    HolidaySet holidays_;
    Minutes resolution_;
};

/// Resamples every input to `resolution` and restricts them to the
/// intersection of their observed ranges. Weather is matched bucket by bucket.
Dataset align(const std::map<std::string, ZoneSeries>& zones, const WeatherSeries& weather,
              const HolidaySet& holidays, Minutes resolution);

}  // namespace csm
