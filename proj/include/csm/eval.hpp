#pragma once

#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "csm/boosting.hpp"
#include "csm/forecast.hpp"

namespace csm {

struct Metrics {
    double mae = 0.0;
    double rmse = 0.0;
    std::optional<double> mape;  // percent; undefined when every target was excluded
    std::size_t n_used = 0;
    std::size_t n_excluded_zero = 0;
};

/// MAPE only counts rows with |y| > mape_epsilon; the rest are tallied.
Metrics compute_metrics(std::span<const double> y, std::span<const double> yhat, double mape_epsilon = 1.0);

struct StepErrorProfile {
    std::vector<double> mean_abs_error;  // index k-1 for step k
    std::size_t origins = 0;
};

/// Mean absolute raw-prediction error per horizon step across origins.
StepErrorProfile step_error_profile(const std::vector<ForecastResult>& forecasts, const ZoneSeries& truth);

/// Forecasts from successive origins inside `ds`. Origin i sits at slot
/// `first_origin + i * stride`; each forecast sees history up to its origin only.
std::vector<ForecastResult> rolling_forecasts(const Model& model, const Dataset& ds, const std::string& zone_id,
                                              const LagSpec& lag, HorizonSpec h, std::size_t first_origin,
                                              std::size_t origins, std::size_t stride,
                                              GapPolicy gap_policy = GapPolicy::carry_forward);

struct ZoneComparison {
    std::string zone_id;
    double mlr_mae = 0.0;
    double gbrt_mae = 0.0;
    std::optional<double> improvement_pct;  // 100 (mlr - gbrt) / mlr
    std::optional<double> mlr_r_squared;
    std::size_t train_rows = 0;
    std::size_t test_rows = 0;
    std::vector<double> mlr_abs_errors;
    std::vector<double> gbrt_abs_errors;
    std::optional<std::string> error;
};

struct ComparisonReport {
    std::vector<ZoneComparison> zones;
    std::optional<double> average_improvement_pct;
    std::optional<std::string> max_improvement_zone;
    std::optional<double> max_improvement_pct;

    void write_csv(std::ostream& out) const;
    /// Long-form `zone_id,model,abs_error` rows for box plots.
    void write_error_samples(std::ostream& out) const;
    nlohmann::json summary() const;
};

/// Fits both trainers on the rows before `split` and scores them on the rest.
/// Zones that cannot be evaluated carry an error instead of failing the run.
ComparisonReport compare_models(const Dataset& ds, const std::vector<std::string>& zones, const LagSpec& lag,
                                const Trainer& mlr, const Trainer& gbrt, const Timestamp& split,
                                const FeatureOptions& features = {});

/// Splits matrix rows at `split`: rows strictly before go to training.
std::pair<FeatureMatrix, FeatureMatrix> split_rows(const FeatureMatrix& m, const Timestamp& split);

struct SweepPoint {
    int value = 0;
    double rmse = 0.0;  // mean over zones of the test RMSE
};

enum class SweepParameter { max_depth, n_estimators };

/// Test RMSE of boosting as one parameter varies.
std::vector<SweepPoint> sweep_gbrt(const Dataset& ds, const std::vector<std::string>& zones, const LagSpec& lag,
                                   const GbrtParams& base, SweepParameter parameter, const std::vector<int>& values,
                                   const Timestamp& split, std::uint64_t seed = 0);

}  // namespace csm
