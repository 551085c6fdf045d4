#pragma once

#include <functional>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "csm/series.hpp"

namespace csm {

enum class ColumnKind { lag, calendar, weather };

std::string_view to_string(ColumnKind kind);

struct Column {
    std::string name;
    ColumnKind kind = ColumnKind::lag;

    friend bool operator==(const Column&, const Column&) = default;
};

/// Lag offsets in units of the model resolution. Non-empty, strictly
/// increasing, every entry >= 1.
class LagSpec {
public:
    explicit LagSpec(std::vector<int> lags);

    const std::vector<int>& lags() const { return lags_; }
    int max_lag() const { return lags_.back(); }

    friend bool operator==(const LagSpec&, const LagSpec&) = default;

private:
    std::vector<int> lags_;
};

/// Which column families build_matrix emits besides the lags.
struct FeatureOptions {
    bool calendar = true;
    bool weather = true;
};

/// Supervised design matrix: one row per usable timestamp.
struct FeatureMatrix {
    std::vector<Column> columns;
    Eigen::MatrixXd rows;    // n x p
    Eigen::VectorXd target;  // n
    std::vector<Timestamp> row_timestamps;
    std::size_t dropped_rows = 0;

    std::size_t row_count() const { return static_cast<std::size_t>(rows.rows()); }
    std::size_t column_count() const { return columns.size(); }
    std::vector<std::string> column_names() const;
    std::optional<std::size_t> column_index(const std::string& name) const;

    /// Keeps the listed columns in the given order.
    FeatureMatrix select_columns(const std::vector<std::size_t>& keep) const;
    /// Keeps the listed rows in the given order.
    FeatureMatrix select_rows(const std::vector<std::size_t>& keep) const;
};

/// Column name of a lag feature, e.g. `lag_24`.
std::string lag_column(int lag);
/// Parses a column name into its kind (and lag offset for lag columns).
/// Throws Error(invalid_argument) for names that no feature source produces.
Column parse_column(const std::string& name, int* lag = nullptr);

/// Standard column layout emitted by build_matrix. Hour of day is left out once rows span a day or more.
std::vector<Column> standard_columns(const LagSpec& lag, const FeatureOptions& options = {},
                                     Minutes resolution = kHour);

/// Resolves the lag value `lag` steps before the row time; nullopt for a gap.
using LagLookup = std::function<std::optional<double>(int lag)>;

/// Computes one feature row for the named columns. Returns nullopt when a
/// lag or the weather record is unavailable.
std::optional<std::vector<double>> assemble_row(std::span<const std::string> columns, const Timestamp& t,
                                                const HolidaySet& holidays, const WeatherRecord* weather,
                                                const LagLookup& lag_value);

/// Row at time t: lags visitors(t - lag_i), calendar(t), weather(t); target
/// visitors(t + target_shift). Rows touching a gap are dropped and counted.
FeatureMatrix build_matrix(const Dataset& ds, const std::string& zone_id, const LagSpec& lag,
                           const FeatureOptions& options = {}, int target_shift = 0);

/// Population Pearson correlation; nullopt when either side has zero variance.
std::optional<double> pearson(std::span<const double> x, std::span<const double> y);

struct FilterThresholds {
    double min_variance = 1e-12;
    double min_abs_corr = 0.05;
};

struct ColumnSelection {
    Column column;
    double variance = 0.0;
    std::optional<double> correlation;
    bool kept = true;
    std::string reason;
};

struct SelectionReport {
    std::vector<ColumnSelection> entries;

    std::vector<std::string> kept_columns() const;
    void write(std::ostream& out) const;
};

/// Drops columns with variance below `min_variance` or |corr| below
/// `min_abs_corr`. Column order is preserved.
std::pair<FeatureMatrix, SelectionReport> filter_features(const FeatureMatrix& m, const FilterThresholds& thresholds = {});

}  // namespace csm
