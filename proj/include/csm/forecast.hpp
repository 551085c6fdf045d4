#pragma once

#include <functional>
#include <string>
#include <vector>

#include "csm/features.hpp"
#include "csm/model.hpp"
#include "csm/series.hpp"

namespace csm {

enum class Strategy { recursive, direct };

std::string_view to_string(Strategy s);
Strategy parse_strategy(std::string_view text);

/// How recursion treats a gap inside the observed lag window.
enum class GapPolicy { carry_forward, error };

class HorizonSpec {
public:
    explicit HorizonSpec(int steps);

    int steps() const { return steps_; }

private:
    int steps_;
};

struct ForecastStep {
    Timestamp time;
    double prediction = 0.0;  // clamped at zero for display and risk
    double raw = 0.0;
    /// Lag inputs of this step that were read from earlier predictions.
    int fed_back_lags = 0;

    friend bool operator==(const ForecastStep&, const ForecastStep&) = default;
};

struct ForecastResult {
    std::string zone_id;
    Timestamp origin;  // last observed slot
    Minutes resolution{kHour};
    Strategy strategy = Strategy::recursive;
    std::vector<ForecastStep> steps;

    friend bool operator==(const ForecastResult&, const ForecastResult&) = default;
};

struct ForecastOptions {
    HolidaySet holidays;
    GapPolicy gap_policy = GapPolicy::carry_forward;
};

/// Feeds each one-step prediction back as a lag input of later steps.
ForecastResult forecast_recursive(const Model& model, const ZoneSeries& history, const WeatherSeries& exog,
                                  const LagSpec& lag, HorizonSpec h, const ForecastOptions& options = {});

/// Builds the training matrix whose target is shifted `shift` steps ahead.
using MatrixFactory = std::function<FeatureMatrix(int shift)>;
using Trainer = std::function<Model(const FeatureMatrix&)>;

/// Model k (1-based) learns visitors(t + k - 1) from the row at t.
std::vector<Model> train_direct(const MatrixFactory& factory, HorizonSpec h, const Trainer& trainer);

/// Step k comes from model k applied to the first step's observed-only row.
ForecastResult forecast_direct(const std::vector<Model>& models, const ZoneSeries& history, const WeatherSeries& exog,
                               const LagSpec& lag, HorizonSpec h, const ForecastOptions& options = {});

struct DailyTotal {
    Date date;
    Timestamp start;
    double total = 0.0;      // sum of clamped predictions
    double raw_total = 0.0;  // sum of raw predictions
    int steps = 0;
    bool complete = false;   // all slots of the local day present
};

/// Sums sub-daily steps per local day.
std::vector<DailyTotal> daily_totals(const ForecastResult& f);

/// Daily forecast built from the complete days of a sub-daily forecast.
ForecastResult to_daily(const ForecastResult& f);

void write_forecast_csv(std::ostream& out, const ForecastResult& f);

}  // namespace csm
