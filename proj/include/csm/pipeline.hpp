#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "csm/boosting.hpp"
#include "csm/features.hpp"
#include "csm/forecast.hpp"
#include "csm/model.hpp"

namespace csm {

enum class ModelKind { mlr, gbrt };

std::string_view to_string(ModelKind k);
ModelKind parse_model_kind(std::string_view text);

struct TrainConfig {
    ModelKind kind = ModelKind::gbrt;
    /// Empty means default_lags(resolution).
    std::vector<int> lags;
    Minutes resolution = kHour;
    FeatureOptions features;
    bool filter = true;
    FilterThresholds thresholds;
    GbrtParams gbrt;
    std::uint64_t seed = 0;
    /// Number of per-step models trained for the direct strategy; 0 skips them.
    int direct_steps = 0;

    std::vector<int> effective_lags() const;
};

TrainConfig train_config_from_json(const nlohmann::json& j, TrainConfig base = {});
nlohmann::json to_json(const TrainConfig& c);

/// Everything needed to forecast one zone: the one-step model used by the
/// recursive strategy, optional per-step direct models, and training metadata.
struct ModelArtifact {
    std::string zone_id;
    ModelKind kind = ModelKind::gbrt;
    LagSpec lags{std::vector<int>{1}};
    Minutes resolution = kHour;
    Model one_step;
    std::vector<Model> direct;
    nlohmann::json metadata = nlohmann::json::object();

    bool supports(Strategy s) const { return s == Strategy::recursive || !direct.empty(); }
    int max_steps(Strategy s) const;
};

nlohmann::json to_json(const ModelArtifact& a);
ModelArtifact artifact_from_json(const nlohmann::json& j);

/// Lags of one and two steps plus one day and one week back where the
/// resolution allows; {1, 2, 7} for daily models.
std::vector<int> default_lags(Minutes resolution);

Model train_model(const FeatureMatrix& m, const TrainConfig& config);

/// Dataset restricted to one resolution; a no-op when it already matches.
Dataset at_resolution(const Dataset& ds, Minutes resolution);

/// Builds features, filters them, fits the model(s) and records metadata.
ModelArtifact train_zone(const Dataset& ds, const std::string& zone_id, const TrainConfig& config);

/// Forecast from the last observed slot of `history`. History and weather
/// are resampled to the artifact resolution when needed.
ForecastResult run_forecast(const ModelArtifact& artifact, const ZoneSeries& history, const WeatherSeries& weather,
                            const HolidaySet& holidays, int steps, Strategy strategy);

/// Horizon in model steps: a bare integer counts steps, a duration such as
/// `10d` is divided by the resolution and must be a multiple of it.
int parse_horizon(std::string_view text, Minutes resolution);

/// Daily total visitors summed over all zones against the daily mean
/// weather drivers and the weekend flag. Days with partial data are dropped.
FeatureMatrix daily_total_matrix(const Dataset& ds);

}  // namespace csm
