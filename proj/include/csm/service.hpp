#pragma once

#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "csm/config.hpp"
#include "csm/error.hpp"
#include "csm/io.hpp"
#include "csm/registry.hpp"
#include "csm/risk.hpp"

namespace csm {

/// Source of exogenous weather forecasts. The service ships with a
/// file-backed provider; a live provider client plugs in here.
class WeatherProvider {
public:
    virtual ~WeatherProvider() = default;
    /// Forecast weather for slots after the observed history.
    virtual WeatherSeries forecast() const = 0;
};

class FileWeatherProvider final : public WeatherProvider {
public:
    explicit FileWeatherProvider(WeatherSeries series) : series_(std::move(series)) {}
    WeatherSeries forecast() const override { return series_; }

private:
    WeatherSeries series_;
};

/// Observed data the service forecasts from.
struct ServiceInputs {
    std::map<std::string, ZoneSeries> history;
    WeatherSeries weather;  // observed weather
    HolidaySet holidays;
    EventCalendar events;
    RiskConfig risk;
};

ServiceInputs load_service_inputs(const DataPaths& paths, const RiskConfig& risk);

struct Response {
    int status = 200;
    nlohmann::json body;
};

/// Optional request parameters as received (query string or CLI flags).
struct ForecastQuery {
    std::optional<std::string> horizon;
    std::optional<std::string> strategy;
    std::optional<std::string> sentiment;
    std::optional<std::string> personnel_shortage;
};

/// Request handlers shared by the HTTP server and the CLI. Reads work on an
/// immutable snapshot of the active models; reload() swaps in a new one.
class ForecastService {
public:
    ForecastService(const ModelRegistry& registry, ServiceInputs inputs, const WeatherProvider& provider);

    /// Rebuilds the snapshot from the registry's active pointers.
    void reload();

    Response zones() const;
    Response forecast(const std::string& zone_id, const ForecastQuery& query) const;
    Response risk(const std::string& zone_id, const ForecastQuery& query) const;
    Response whatif(const nlohmann::json& request) const;
    Response models() const;

    struct Entry {
        int version = 0;
        ModelArtifact artifact;
        ZoneSeries history;     // at the artifact resolution
        WeatherSeries weather;  // observed + forecast at the artifact resolution
        ReferenceDistribution reference;
    };
    struct Snapshot {
        std::map<std::string, Entry> entries;
    };

    std::shared_ptr<const Snapshot> snapshot() const;

private:
    struct Run {
        ForecastResult result;
        std::vector<RiskAssessment> risk;
    };

    const Entry& entry_for(const Snapshot& snap, const std::string& zone_id) const;
    Run run(const Entry& e, const WeatherSeries& weather, int steps, Strategy strategy, double sentiment,
            double personnel) const;
    nlohmann::json run_json(const Entry& e, const Run& r) const;
    Response with_zone_list(Response r) const;

    const ModelRegistry& registry_;
    ServiceInputs inputs_;
    const WeatherProvider& provider_;
    mutable std::mutex mutex_;
    std::shared_ptr<const Snapshot> snapshot_;
};

/// JSON error body with the machine-readable kind.
nlohmann::json error_body(const Error& e);
/// HTTP status for a library error kind.
int http_status(ErrorKind kind);

/// Wire form of a forecast: steps, daily totals and optional per-step risk.
nlohmann::json forecast_to_json(const ForecastResult& f, const std::vector<RiskAssessment>& risk = {});

}  // namespace csm
