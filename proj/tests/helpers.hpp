#pragma once

#include <filesystem>
#include <vector>

#include <unistd.h>

#include "csm/features.hpp"
#include "csm/series.hpp"

namespace csm::test {

inline Timestamp at(const char* text) { return parse_timestamp(text); }

/// Hourly grid starting at `start` with the given values (NaN marks a gap).
inline ZoneSeries hourly(const std::string& zone, const char* start, const std::vector<double>& values,
                         Minutes res = kHour) {
    std::vector<VisitPoint> pts;
    const Timestamp t0 = parse_timestamp(start);
    for (std::size_t i = 0; i < values.size(); ++i) {
        VisitPoint p{t0 + res * static_cast<int>(i), values[i], 1.0};
        if (values[i] != values[i]) p = VisitPoint{p.time, std::nullopt, 0.0};
        pts.push_back(p);
    }
    return ZoneSeries(zone, res, std::move(pts));
}

inline WeatherSeries flat_weather(const char* start, std::size_t n, WeatherRecord r = {10.0, 20.0, 50.0, 4.0, 0.0},
                                  Minutes res = kHour) {
    std::vector<WeatherPoint> pts;
    const Timestamp t0 = parse_timestamp(start);
    for (std::size_t i = 0; i < n; ++i) pts.push_back(WeatherPoint{t0 + res * static_cast<int>(i), r});
    return WeatherSeries(res, std::move(pts));
}

inline Dataset single_zone(const ZoneSeries& z, const WeatherSeries& w, HolidaySet holidays = {}) {
    return Dataset({{z.zone_id(), z}}, w, std::move(holidays), z.resolution());
}

/// Matrix from column vectors; names must be parseable feature names.
inline FeatureMatrix matrix(const std::vector<std::string>& names, const std::vector<std::vector<double>>& cols,
                            const std::vector<double>& target) {
    FeatureMatrix m;
    const auto n = static_cast<Eigen::Index>(target.size());
    m.rows.resize(n, static_cast<Eigen::Index>(cols.size()));
    m.target.resize(n);
    Timestamp t = parse_timestamp("2022-01-01T00:00+01:00");
    for (Eigen::Index i = 0; i < n; ++i) {
        for (std::size_t c = 0; c < cols.size(); ++c) m.rows(i, static_cast<Eigen::Index>(c)) = cols[c][static_cast<std::size_t>(i)];
        m.target(i) = target[static_cast<std::size_t>(i)];
        m.row_timestamps.push_back(t);
        t = t + kHour;
    }
    for (const auto& name : names) m.columns.push_back(parse_column(name));
    return m;
}

/// Fresh empty directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
    const auto p = std::filesystem::temp_directory_path() / ("csm_" + name + "_" + std::to_string(::getpid()));
    std::filesystem::remove_all(p);
    std::filesystem::create_directories(p);
    return p;
}

}  // namespace csm::test
