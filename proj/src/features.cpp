#include "csm/features.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>

#include <fmt/format.h>
#include <fmt/ostream.h>

#include "csm/error.hpp"

namespace csm {

namespace {

constexpr std::string_view kCalendarColumns[] = {"hour", "weekday", "month", "is_weekend", "is_holiday"};
constexpr std::string_view kWeatherColumns[] = {"temp_c", "precip_prob_pct", "cloudiness", "windspeed_ms", "precip_mm"};

double variance_of(std::span<const double> x) {
    if (x.empty()) return 0.0;
    double mean = 0.0;
    for (double v : x) mean += v;
    mean /= static_cast<double>(x.size());
    double ss = 0.0;
    for (double v : x) ss += (v - mean) * (v - mean);
    return ss / static_cast<double>(x.size());
}

std::span<const double> column_span(const Eigen::MatrixXd& m, Eigen::Index j) {
    return {m.col(j).data(), static_cast<std::size_t>(m.rows())};
}

}  // namespace

std::string_view to_string(ColumnKind kind) {
    switch (kind) {
    case ColumnKind::lag: return "lag";
    case ColumnKind::calendar: return "calendar";
    case ColumnKind::weather: return "weather";
    }
    return "unknown";
}

LagSpec::LagSpec(std::vector<int> lags) : lags_(std::move(lags)) {
    if (lags_.empty()) {
        throw Error(ErrorKind::invalid_argument, "lag spec must not be empty");
    }
    for (std::size_t i = 0; i < lags_.size(); ++i) {
        if (lags_[i] < 1) {
            throw Error(ErrorKind::invalid_argument, fmt::format("lag {} must be >= 1", lags_[i]));
        }
        if (i > 0 && lags_[i] <= lags_[i - 1]) {
            throw Error(ErrorKind::invalid_argument, "lags must be strictly increasing");
        }
    }
}

std::vector<std::string> FeatureMatrix::column_names() const {
    std::vector<std::string> names;
    names.reserve(columns.size());
    for (const auto& c : columns) names.push_back(c.name);
    return names;
}

std::optional<std::size_t> FeatureMatrix::column_index(const std::string& name) const {
    for (std::size_t i = 0; i < columns.size(); ++i) {
        if (columns[i].name == name) return i;
    }
    return std::nullopt;
}

FeatureMatrix FeatureMatrix::select_columns(const std::vector<std::size_t>& keep) const {
    FeatureMatrix out;
    out.target = target;
    out.row_timestamps = row_timestamps;
    out.dropped_rows = dropped_rows;
    out.rows.resize(rows.rows(), static_cast<Eigen::Index>(keep.size()));
    for (std::size_t j = 0; j < keep.size(); ++j) {
        out.columns.push_back(columns.at(keep[j]));
        out.rows.col(static_cast<Eigen::Index>(j)) = rows.col(static_cast<Eigen::Index>(keep[j]));
    }
    return out;
}

FeatureMatrix FeatureMatrix::select_rows(const std::vector<std::size_t>& keep) const {
    FeatureMatrix out;
    out.columns = columns;
    out.dropped_rows = dropped_rows;
    out.rows.resize(static_cast<Eigen::Index>(keep.size()), rows.cols());
    out.target.resize(static_cast<Eigen::Index>(keep.size()));
    for (std::size_t i = 0; i < keep.size(); ++i) {
        const auto src = static_cast<Eigen::Index>(keep[i]);
        out.rows.row(static_cast<Eigen::Index>(i)) = rows.row(src);
        out.target(static_cast<Eigen::Index>(i)) = target(src);
        out.row_timestamps.push_back(row_timestamps.at(keep[i]));
    }
    return out;
}

std::string lag_column(int lag) { return fmt::format("lag_{}", lag); }

Column parse_column(const std::string& name, int* lag) {
    if (name.rfind("lag_", 0) == 0) {
        int value = 0;
        const auto* begin = name.data() + 4;
        const auto* end = name.data() + name.size();
        const auto [ptr, ec] = std::from_chars(begin, end, value);
        if (ec != std::errc{} || ptr != end || value < 1) {
            throw Error(ErrorKind::invalid_argument, fmt::format("bad lag column '{}'", name));
        }
        if (lag) *lag = value;
        return {name, ColumnKind::lag};
    }
    for (auto c : kCalendarColumns) {
        if (name == c) return {name, ColumnKind::calendar};
    }
    for (auto c : kWeatherColumns) {
        if (name == c) return {name, ColumnKind::weather};
    }
    throw Error(ErrorKind::invalid_argument, fmt::format("unknown feature column '{}'", name));
}

std::vector<Column> standard_columns(const LagSpec& lag, const FeatureOptions& options, Minutes resolution) {
    std::vector<Column> cols;
    for (int l : lag.lags()) cols.push_back({lag_column(l), ColumnKind::lag});
    if (options.calendar) {
        for (auto c : kCalendarColumns) {
            if (c == "hour" && resolution >= kDay) continue;
            cols.push_back({std::string(c), ColumnKind::calendar});
        }
    }
    if (options.weather) {
        for (auto c : kWeatherColumns) cols.push_back({std::string(c), ColumnKind::weather});
    }
    return cols;
}

std::optional<std::vector<double>> assemble_row(std::span<const std::string> columns, const Timestamp& t,
                                                const HolidaySet& holidays, const WeatherRecord* weather,
                                                const LagLookup& lag_value) {
    std::vector<double> row;
    row.reserve(columns.size());
    std::optional<CalendarFeatures> cal;
    for (const auto& name : columns) {
        int lag = 0;
        const Column col = parse_column(name, &lag);
        switch (col.kind) {
        case ColumnKind::lag: {
            auto v = lag_value(lag);
            if (!v) return std::nullopt;
            row.push_back(*v);
            break;
        }
        case ColumnKind::calendar: {
            if (!cal) cal = calendar_features(t, holidays);
            if (name == "hour") row.push_back(cal->hour);
            else if (name == "weekday") row.push_back(cal->weekday);
            else if (name == "month") row.push_back(cal->month);
            else if (name == "is_weekend") row.push_back(cal->is_weekend ? 1.0 : 0.0);
            else row.push_back(cal->is_holiday ? 1.0 : 0.0);
            break;
        }
        case ColumnKind::weather: {
            if (!weather) return std::nullopt;
            if (name == "temp_c") row.push_back(weather->temperature_c);
            else if (name == "precip_prob_pct") row.push_back(weather->precip_prob_pct);
            else if (name == "cloudiness") row.push_back(weather->cloudiness);
            else if (name == "windspeed_ms") row.push_back(weather->windspeed_ms);
            else row.push_back(weather->precip_mm);
            break;
        }
        }
    }
    return row;
}

FeatureMatrix build_matrix(const Dataset& ds, const std::string& zone_id, const LagSpec& lag,
                           const FeatureOptions& options, int target_shift) {
    if (target_shift < 0) {
        throw Error(ErrorKind::invalid_argument, "target shift must be >= 0");
    }
    const ZoneSeries& zone = ds.zone(zone_id);
    const auto& pts = zone.points();
    const auto& wpts = ds.weather().points();
    const std::size_t n = pts.size();
    const auto max_lag = static_cast<std::size_t>(lag.max_lag());
    const auto shift = static_cast<std::size_t>(target_shift);

    FeatureMatrix m;
    m.columns = standard_columns(lag, options, ds.resolution());
    const auto names = m.column_names();

    std::vector<std::vector<double>> rows;
    std::vector<double> targets;
    if (n > max_lag + shift) {
        for (std::size_t i = max_lag; i + shift < n; ++i) {
            const auto& target = pts[i + shift].visitors;
            const WeatherRecord* w = wpts[i].record ? &*wpts[i].record : nullptr;
            std::optional<std::vector<double>> row;
            if (target) {
                row = assemble_row(names, pts[i].time, ds.holidays(), w,
                                   [&](int l) { return pts[i - static_cast<std::size_t>(l)].visitors; });
            }
            if (!row) {
                ++m.dropped_rows;
                continue;
            }
            rows.push_back(std::move(*row));
            targets.push_back(*target);
            m.row_timestamps.push_back(pts[i].time);
        }
    }
    if (rows.size() < 2) {
        throw Error(ErrorKind::insufficient_data,
                    fmt::format("zone '{}': {} usable rows for max lag {} (need >= 2)", zone_id, rows.size(), max_lag));
    }
    m.rows.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(names.size()));
    m.target.resize(static_cast<Eigen::Index>(rows.size()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        for (std::size_t j = 0; j < names.size(); ++j) {
            m.rows(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
        }
        m.target(static_cast<Eigen::Index>(i)) = targets[i];
    }
    return m;
}

std::optional<double> pearson(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size() || x.size() < 2) {
        throw Error(ErrorKind::invalid_argument, "pearson needs two vectors of equal length >= 2");
    }
    const double n = static_cast<double>(x.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double dx = x[i] - mx;
        const double dy = y[i] - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if (sxx <= 0.0 || syy <= 0.0) return std::nullopt;
    const double r = sxy / std::sqrt(sxx * syy);
    return std::clamp(r, -1.0, 1.0);
}

std::vector<std::string> SelectionReport::kept_columns() const {
    std::vector<std::string> out;
    for (const auto& e : entries) {
        if (e.kept) out.push_back(e.column.name);
    }
    return out;
}

void SelectionReport::write(std::ostream& out) const {
    out << "column,kind,variance,correlation,kept,reason\n";
    for (const auto& e : entries) {
        fmt::print(out, "{},{},{},{},{},{}\n", e.column.name, to_string(e.column.kind), e.variance,
                   e.correlation ? fmt::format("{}", *e.correlation) : std::string("undefined"), e.kept ? 1 : 0,
                   e.reason);
    }
}

std::pair<FeatureMatrix, SelectionReport> filter_features(const FeatureMatrix& m, const FilterThresholds& thresholds) {
    if (thresholds.min_variance < 0.0 || thresholds.min_abs_corr < 0.0) {
        throw Error(ErrorKind::invalid_argument, "filter thresholds must be >= 0");
    }
    SelectionReport report;
    std::vector<std::size_t> keep;
    const std::span<const double> target{m.target.data(), static_cast<std::size_t>(m.target.size())};
    for (std::size_t j = 0; j < m.columns.size(); ++j) {
        const auto col = column_span(m.rows, static_cast<Eigen::Index>(j));
        ColumnSelection sel;
        sel.column = m.columns[j];
        sel.variance = variance_of(col);
        if (col.size() >= 2) sel.correlation = pearson(col, target);
        if (sel.variance < thresholds.min_variance) {
            sel.kept = false;
            sel.reason = sel.variance == 0.0 ? "zero variance" : "low variance";
        } else if (thresholds.min_abs_corr > 0.0) {
            if (!sel.correlation) {
                sel.kept = false;
                sel.reason = "undefined correlation";
            } else if (std::abs(*sel.correlation) < thresholds.min_abs_corr) {
                sel.kept = false;
                sel.reason = fmt::format("|correlation| {:.4f} below {}", std::abs(*sel.correlation),
                                         thresholds.min_abs_corr);
            }
        }
        if (sel.kept) keep.push_back(j);
        report.entries.push_back(std::move(sel));
    }
    if (keep.empty()) {
        throw Error(ErrorKind::degenerate_selection, "feature filter removed every column");
    }
    return {m.select_columns(keep), std::move(report)};
}

}  // namespace csm
