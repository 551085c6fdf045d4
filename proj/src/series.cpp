#include "csm/series.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "csm/error.hpp"

namespace csm {

namespace {

std::int64_t floor_div(std::int64_t a, std::int64_t b) {
    std::int64_t q = a / b;
    if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
    return q;
}

template <typename Point>
void check_grid(const std::vector<Point>& points, Minutes resolution, std::string_view what) {
    if (resolution.count() <= 0) {
        throw Error(ErrorKind::validation, fmt::format("{}: resolution must be positive", what));
    }
    for (std::size_t i = 1; i < points.size(); ++i) {
        if (points[i].time - points[i - 1].time != resolution) {
            throw Error(ErrorKind::validation,
                        fmt::format("{}: slot {} at {} is not one resolution step after {}", what, i,
                                    format_timestamp(points[i].time), format_timestamp(points[i - 1].time)));
        }
    }
}

template <typename Point>
std::optional<std::size_t> grid_index(const std::vector<Point>& points, Minutes resolution, const Timestamp& t) {
    if (points.empty()) return std::nullopt;
    const auto delta = (t - points.front().time).count();
    if (delta < 0 || delta % resolution.count() != 0) return std::nullopt;
    const auto idx = static_cast<std::size_t>(delta / resolution.count());
    if (idx >= points.size()) return std::nullopt;
    return idx;
}

template <typename Point>
std::optional<TimeRange> observed(const std::vector<Point>& points) {
    auto first = std::find_if(points.begin(), points.end(), [](const Point& p) { return !p.is_gap(); });
    if (first == points.end()) return std::nullopt;
    auto last = std::find_if(points.rbegin(), points.rend(), [](const Point& p) { return !p.is_gap(); });
    return TimeRange{first->time, last->time};
}

template <typename Point>
std::vector<Point> slice_grid(const std::vector<Point>& points, Minutes resolution, const Timestamp& first,
                              const Timestamp& last) {
    std::vector<Point> out;
    if (last < first) return out;
    const std::int32_t offset = points.empty() ? first.offset_minutes : points.front().time.offset_minutes;
    Timestamp t{first.utc_minutes, offset};
    for (; t <= last; t = t + resolution) {
        if (auto idx = grid_index(points, resolution, t)) {
            out.push_back(points[*idx]);
        } else {
            Point gap{};
            gap.time = t;
            out.push_back(gap);
        }
    }
    return out;
}

// Output bucket boundaries are computed in the offset of the series' first slot.
struct Bucketing {
    std::int64_t target;
    std::int32_t offset;

    std::int64_t key(const Timestamp& t) const { return floor_div(t.utc_minutes + offset, target); }
    Timestamp start(std::int64_t key) const { return Timestamp{key * target - offset, offset}; }
};

void check_multiple(Minutes source, Minutes target) {
    if (target.count() <= 0 || target.count() % source.count() != 0) {
        throw Error(ErrorKind::invalid_argument,
                    fmt::format("target resolution {} is not a multiple of {}", format_duration(target),
                                format_duration(source)));
    }
}

std::string describe(const std::optional<TimeRange>& r) {
    if (!r) return "no observations";
    return fmt::format("{} .. {}", format_timestamp(r->first), format_timestamp(r->last));
}

}  // namespace

void WeatherRecord::validate() const {
    auto bad = [](std::string_view field, double v) {
        return Error(ErrorKind::validation, fmt::format("weather field {} out of range: {}", field, v));
    };
    if (!std::isfinite(temperature_c)) throw bad("temperature_c", temperature_c);
    if (!(precip_prob_pct >= 0.0 && precip_prob_pct <= 100.0)) throw bad("precip_prob_pct", precip_prob_pct);
    if (!(cloudiness >= 0.0) || !std::isfinite(cloudiness)) throw bad("cloudiness", cloudiness);
    if (!(windspeed_ms >= 0.0) || !std::isfinite(windspeed_ms)) throw bad("windspeed_ms", windspeed_ms);
    if (!(precip_mm >= 0.0) || !std::isfinite(precip_mm)) throw bad("precip_mm", precip_mm);
}

// ZoneSeries

ZoneSeries::ZoneSeries(std::string zone_id, Minutes resolution, std::vector<VisitPoint> points)
    : zone_id_(std::move(zone_id)), resolution_(resolution), points_(std::move(points)) {
    check_grid(points_, resolution_, fmt::format("zone '{}'", zone_id_));
    for (const auto& p : points_) {
        if (p.visitors && !(*p.visitors >= 0.0 && std::isfinite(*p.visitors))) {
            throw Error(ErrorKind::validation, fmt::format("zone '{}': negative or non-finite count {} at {}",
                                                           zone_id_, *p.visitors, format_timestamp(p.time)));
        }
        if (!(p.coverage >= 0.0 && p.coverage <= 1.0)) {
            throw Error(ErrorKind::validation, fmt::format("zone '{}': coverage {} outside [0,1]", zone_id_, p.coverage));
        }
    }
}

ZoneSeries ZoneSeries::from_observations(std::string zone_id, Minutes resolution,
                                         const std::vector<std::pair<Timestamp, double>>& observations) {
    std::vector<VisitPoint> points;
    for (const auto& [t, v] : observations) {
        if (!points.empty()) {
            const auto step = t - points.back().time;
            if (step.count() <= 0 || step.count() % resolution.count() != 0) {
                throw Error(ErrorKind::validation,
                            fmt::format("zone '{}': {} is off the {} grid", zone_id, format_timestamp(t),
                                        format_duration(resolution)));
            }
            for (auto g = points.back().time + resolution; g < t; g = g + resolution) {
                points.push_back(VisitPoint{g, std::nullopt, 0.0});
            }
        }
        points.push_back(VisitPoint{t, v, 1.0});
    }
    return ZoneSeries(std::move(zone_id), resolution, std::move(points));
}

std::optional<std::size_t> ZoneSeries::index_of(const Timestamp& t) const {
    return grid_index(points_, resolution_, t);
}

std::optional<double> ZoneSeries::value_at(const Timestamp& t) const {
    if (auto idx = index_of(t)) return points_[*idx].visitors;
    return std::nullopt;
}

std::optional<TimeRange> ZoneSeries::observed_range() const { return observed(points_); }

std::size_t ZoneSeries::gap_count() const {
    return static_cast<std::size_t>(
        std::count_if(points_.begin(), points_.end(), [](const VisitPoint& p) { return p.is_gap(); }));
}

ZoneSeries ZoneSeries::slice(const Timestamp& first, const Timestamp& last) const {
    auto pts = slice_grid(points_, resolution_, first, last);
    for (auto& p : pts) {
        if (p.is_gap()) p.coverage = 0.0;
    }
    return ZoneSeries(zone_id_, resolution_, std::move(pts));
}

// WeatherSeries

WeatherSeries::WeatherSeries(Minutes resolution, std::vector<WeatherPoint> points)
    : resolution_(resolution), points_(std::move(points)) {
    check_grid(points_, resolution_, "weather");
    for (const auto& p : points_) {
        if (p.record) p.record->validate();
    }
}

WeatherSeries WeatherSeries::from_observations(Minutes resolution,
                                               const std::vector<std::pair<Timestamp, WeatherRecord>>& observations) {
    std::vector<WeatherPoint> points;
    for (const auto& [t, rec] : observations) {
        if (!points.empty()) {
            const auto step = t - points.back().time;
            if (step.count() <= 0 || step.count() % resolution.count() != 0) {
                throw Error(ErrorKind::validation,
                            fmt::format("weather: {} is off the {} grid", format_timestamp(t), format_duration(resolution)));
            }
            for (auto g = points.back().time + resolution; g < t; g = g + resolution) {
                points.push_back(WeatherPoint{g, std::nullopt});
            }
        }
        points.push_back(WeatherPoint{t, rec});
    }
    return WeatherSeries(resolution, std::move(points));
}

std::optional<std::size_t> WeatherSeries::index_of(const Timestamp& t) const {
    return grid_index(points_, resolution_, t);
}

const WeatherRecord* WeatherSeries::record_at(const Timestamp& t) const {
    if (auto idx = index_of(t); idx && points_[*idx].record) return &*points_[*idx].record;
    return nullptr;
}

std::optional<TimeRange> WeatherSeries::observed_range() const { return observed(points_); }

WeatherSeries WeatherSeries::slice(const Timestamp& first, const Timestamp& last) const {
    return WeatherSeries(resolution_, slice_grid(points_, resolution_, first, last));
}

WeatherSeries WeatherSeries::extended_with(const WeatherSeries& later) const {
    if (later.empty()) return *this;
    if (empty()) return later;
    if (later.resolution_ != resolution_) {
        throw Error(ErrorKind::invalid_argument, "cannot join weather series of different resolutions");
    }
    std::vector<WeatherPoint> pts = points_;
    for (const auto& p : later.points_) {
        if (p.time <= pts.back().time) {
            if (auto idx = grid_index(pts, resolution_, p.time); idx && pts[*idx].is_gap()) pts[*idx] = p;
            continue;
        }
        for (auto g = pts.back().time + resolution_; g < p.time; g = g + resolution_) {
            pts.push_back(WeatherPoint{g, std::nullopt});
        }
        pts.push_back(p);
    }
    return WeatherSeries(resolution_, std::move(pts));
}

// Calendar

CalendarFeatures calendar_features(const Timestamp& t, const HolidaySet& holidays) {
    CalendarFeatures f;
    const Date day = t.local_date();
    auto minute_of_day = t.local_minutes() % 1440;
    if (minute_of_day < 0) minute_of_day += 1440;
    f.hour = static_cast<int>(minute_of_day / 60);
    f.weekday = static_cast<int>(std::chrono::weekday{day}.iso_encoding()) - 1;
    f.month = static_cast<int>(static_cast<unsigned>(std::chrono::year_month_day{day}.month()));
    f.is_weekend = f.weekday >= 5;
    f.is_holiday = holidays.count(day) != 0;
    return f;
}

// Resampling

ZoneSeries resample(const ZoneSeries& series, Minutes target, ResampleMode mode) {
    check_multiple(series.resolution(), target);
    if (target == series.resolution() || series.empty()) {
        if (series.empty()) return ZoneSeries(series.zone_id(), target, {});
        return series;
    }
    const Bucketing b{target.count(), series.points().front().time.offset_minutes};
    const double expected = static_cast<double>(target.count() / series.resolution().count());

    std::vector<VisitPoint> out;
    const auto& pts = series.points();
    std::size_t i = 0;
    while (i < pts.size()) {
        const auto key = b.key(pts[i].time);
        double sum = 0.0;
        double covered = 0.0;
        std::size_t present = 0;
        for (; i < pts.size() && b.key(pts[i].time) == key; ++i) {
            if (pts[i].visitors) {
                sum += *pts[i].visitors;
                covered += pts[i].coverage;
                ++present;
            }
        }
        VisitPoint bucket{b.start(key), std::nullopt, 0.0};
        if (present > 0) {
            bucket.visitors = mode == ResampleMode::sum ? sum : sum / static_cast<double>(present);
            bucket.coverage = std::min(1.0, covered / expected);
        }
        out.push_back(bucket);
    }
    return ZoneSeries(series.zone_id(), target, std::move(out));
}

WeatherSeries resample(const WeatherSeries& series, Minutes target) {
    check_multiple(series.resolution(), target);
    if (target == series.resolution() || series.empty()) {
        if (series.empty()) return WeatherSeries(target, {});
        return series;
    }
    const Bucketing b{target.count(), series.points().front().time.offset_minutes};
    std::vector<WeatherPoint> out;
    const auto& pts = series.points();
    std::size_t i = 0;
    while (i < pts.size()) {
        const auto key = b.key(pts[i].time);
        WeatherRecord acc;
        std::size_t present = 0;
        for (; i < pts.size() && b.key(pts[i].time) == key; ++i) {
            if (const auto& r = pts[i].record) {
                acc.temperature_c += r->temperature_c;
                acc.precip_prob_pct += r->precip_prob_pct;
                acc.cloudiness += r->cloudiness;
                acc.windspeed_ms += r->windspeed_ms;
                acc.precip_mm += r->precip_mm;
                ++present;
            }
        }
        WeatherPoint bucket{b.start(key), std::nullopt};
        if (present > 0) {
            const double n = static_cast<double>(present);
            acc.temperature_c /= n;
            acc.precip_prob_pct /= n;
            acc.cloudiness /= n;
            acc.windspeed_ms /= n;
            acc.precip_mm /= n;
            bucket.record = acc;
        }
        out.push_back(bucket);
    }
    return WeatherSeries(target, std::move(out));
}

// Dataset

Dataset::Dataset(std::map<std::string, ZoneSeries> zones, WeatherSeries weather, HolidaySet holidays,
                 Minutes resolution)
    : zones_(std::move(zones)), weather_(std::move(weather)), holidays_(std::move(holidays)), resolution_(resolution) {
    if (zones_.empty()) {
        throw Error(ErrorKind::validation, "dataset needs at least one zone");
    }
    if (weather_.resolution() != resolution_) {
        throw Error(ErrorKind::validation, "weather resolution differs from dataset resolution");
    }
    for (const auto& [id, z] : zones_) {
        if (z.zone_id() != id) {
            throw Error(ErrorKind::validation, fmt::format("zone key '{}' holds series '{}'", id, z.zone_id()));
        }
        if (z.resolution() != resolution_) {
            throw Error(ErrorKind::validation, fmt::format("zone '{}' resolution differs from dataset", id));
        }
        if (z.size() != weather_.size() || (!z.empty() && z.points().front().time != weather_.points().front().time)) {
            throw Error(ErrorKind::validation, fmt::format("zone '{}' is not on the dataset grid", id));
        }
    }
}

const ZoneSeries& Dataset::zone(const std::string& zone_id) const {
    auto it = zones_.find(zone_id);
    if (it == zones_.end()) {
        throw Error(ErrorKind::not_found, fmt::format("unknown zone '{}'", zone_id));
    }
    return it->second;
}

std::vector<std::string> Dataset::zone_ids() const {
    std::vector<std::string> ids;
    ids.reserve(zones_.size());
    for (const auto& [id, _] : zones_) ids.push_back(id);
    return ids;
}

std::vector<Timestamp> Dataset::timestamps() const {
    std::vector<Timestamp> out;
    out.reserve(weather_.size());
    for (const auto& p : weather_.points()) out.push_back(p.time);
    return out;
}

Dataset align(const std::map<std::string, ZoneSeries>& zones, const WeatherSeries& weather,
              const HolidaySet& holidays, Minutes resolution) {
    if (zones.empty()) {
        throw Error(ErrorKind::alignment, "no zones to align");
    }
    std::map<std::string, ZoneSeries> resampled;
    for (const auto& [id, z] : zones) {
        resampled.emplace(id, resample(z, resolution, ResampleMode::sum));
    }
    const WeatherSeries w = resample(weather, resolution);

    std::vector<std::pair<std::string, std::optional<TimeRange>>> ranges;
    for (const auto& [id, z] : resampled) ranges.emplace_back("zone " + id, z.observed_range());
    ranges.emplace_back("weather", w.observed_range());

    auto listing = [&] {
        std::string s;
        for (const auto& [name, r] : ranges) s += fmt::format("\n  {}: {}", name, describe(r));
        return s;
    };

    std::optional<std::int64_t> phase;
    Timestamp start{};
    Timestamp end{};
    bool first = true;
    for (const auto& [name, r] : ranges) {
        if (!r) {
            throw Error(ErrorKind::alignment, fmt::format("series without observations:{}", listing()));
        }
        const auto p = ((r->first.utc_minutes % resolution.count()) + resolution.count()) % resolution.count();
        if (phase && *phase != p) {
            throw Error(ErrorKind::alignment, fmt::format("series grids are out of phase:{}", listing()));
        }
        phase = p;
        if (first || r->first > start) start = r->first;
        if (first || r->last < end) end = r->last;
        first = false;
    }
    if (end < start) {
        throw Error(ErrorKind::alignment, fmt::format("time ranges do not intersect:{}", listing()));
    }

    std::map<std::string, ZoneSeries> sliced;
    for (const auto& [id, z] : resampled) sliced.emplace(id, z.slice(start, end));
    WeatherSeries ws = w.slice(start, end);
    return Dataset(std::move(sliced), std::move(ws), holidays, resolution);
}

}  // namespace csm
