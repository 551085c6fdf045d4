#include "csm/service.hpp"

#include <filesystem>

#include <fmt/format.h>

namespace csm {

using nlohmann::json;

namespace {

double& field(WeatherRecord& r, const std::string& name) {
    if (name == "temp_c") return r.temperature_c;
    if (name == "precip_prob_pct") return r.precip_prob_pct;
    if (name == "cloudiness") return r.cloudiness;
    if (name == "windspeed_ms") return r.windspeed_ms;
    if (name == "precip_mm") return r.precip_mm;
    throw Error(ErrorKind::invalid_argument, fmt::format("unknown weather field '{}'", name));
}

double unit_score(const std::optional<std::string>& text, const char* name) {
    if (!text) return 0.0;
    double v = 0.0;
    try {
        std::size_t used = 0;
        v = std::stod(*text, &used);
        if (used != text->size()) throw std::invalid_argument(*text);
    } catch (const std::exception&) {
        throw Error(ErrorKind::invalid_argument, fmt::format("{} must be a number, got '{}'", name, *text));
    }
    if (!(v >= 0.0 && v <= 1.0)) throw Error(ErrorKind::invalid_argument, fmt::format("{} must lie in [0, 1]", name));
    return v;
}

// Drops trailing buckets that only partly cover their interval.
ZoneSeries without_partial_tail(const ZoneSeries& s) {
    auto pts = s.points();
    while (!pts.empty() && (pts.back().is_gap() || pts.back().coverage < 1.0)) pts.pop_back();
    return ZoneSeries(s.zone_id(), s.resolution(), std::move(pts));
}

template <class F>
Response guarded(F&& f) {
    try {
        return f();
    } catch (const Error& e) {
        return Response{http_status(e.kind()), error_body(e)};
    } catch (const json::exception& e) {
        return Response{422, json{{"error", "parse_error"}, {"message", e.what()}}};
    } catch (const std::exception& e) {
        return Response{500, json{{"error", "internal_error"}, {"message", e.what()}}};
    }
}

}  // namespace

ServiceInputs load_service_inputs(const DataPaths& paths, const RiskConfig& risk) {
    ServiceInputs in;
    in.history = load_visits(paths.visits.string());
    in.weather = load_weather(paths.weather.string());
    if (std::filesystem::exists(paths.holidays)) in.holidays = load_holidays(paths.holidays.string());
    if (std::filesystem::exists(paths.events)) in.events = load_events(paths.events.string());
    in.risk = risk;
    return in;
}

json error_body(const Error& e) {
    return json{{"error", std::string(to_string(e.kind()))}, {"message", e.what()}};
}

int http_status(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::not_found: return 404;
        case ErrorKind::conflict:
        case ErrorKind::model_mismatch: return 409;
        case ErrorKind::parse:
        case ErrorKind::validation:
        case ErrorKind::invalid_argument:
        case ErrorKind::coverage:
        case ErrorKind::alignment: return 422;
        default: return 500;
    }
}

json forecast_to_json(const ForecastResult& f, const std::vector<RiskAssessment>& risk) {
    json steps = json::array();
    for (std::size_t i = 0; i < f.steps.size(); ++i) {
        const auto& s = f.steps[i];
        json step{{"step", i + 1}, {"timestamp", format_timestamp(s.time)}, {"prediction", s.prediction}, {"raw", s.raw}};
        if (i < risk.size()) step["risk"] = to_json(risk[i]);
        steps.push_back(std::move(step));
    }
    json daily = json::array();
    for (const auto& d : daily_totals(f)) {
        daily.push_back(json{{"date", format_date(d.date)}, {"total", d.total}, {"steps", d.steps}, {"complete", d.complete}});
    }
    return json{{"zone_id", f.zone_id},
                {"origin", format_timestamp(f.origin)},
                {"resolution", format_duration(f.resolution)},
                {"strategy", std::string(to_string(f.strategy))},
                {"steps", std::move(steps)},
                {"daily", std::move(daily)}};
}

ForecastService::ForecastService(const ModelRegistry& registry, ServiceInputs inputs, const WeatherProvider& provider)
    : registry_(registry), inputs_(std::move(inputs)), provider_(provider) {
    reload();
}

void ForecastService::reload() {
    auto snap = std::make_shared<Snapshot>();
    const WeatherSeries weather = inputs_.weather.extended_with(provider_.forecast());
    for (const auto& zone : registry_.zones()) {
        const auto hist = inputs_.history.find(zone);
        const auto version = registry_.active_version(zone);
        if (hist == inputs_.history.end() || !version) continue;
        Entry e;
        e.version = *version;
        e.artifact = registry_.load(zone, *version);
        const Minutes res = e.artifact.resolution;
        e.history = hist->second.resolution() == res
                        ? hist->second
                        : without_partial_tail(resample(hist->second, res, ResampleMode::sum));
        e.weather = weather.resolution() == res ? weather : resample(weather, res);
        e.reference = ReferenceDistribution::from_series(e.history);
        snap->entries.emplace(zone, std::move(e));
    }
    std::lock_guard lock(mutex_);
    snapshot_ = std::move(snap);
}

std::shared_ptr<const ForecastService::Snapshot> ForecastService::snapshot() const {
    std::lock_guard lock(mutex_);
    return snapshot_;
}

Response ForecastService::with_zone_list(Response r) const {
    if (r.status == 404) {
        json ids = json::array();
        for (const auto& [id, series] : inputs_.history) ids.push_back(id);
        r.body["zones"] = std::move(ids);
    }
    return r;
}

const ForecastService::Entry& ForecastService::entry_for(const Snapshot& snap, const std::string& zone_id) const {
    if (!inputs_.history.count(zone_id)) {
        std::vector<std::string> ids;
        for (const auto& [id, s] : inputs_.history) ids.push_back(id);
        throw Error(ErrorKind::not_found,
                    fmt::format("unknown zone '{}'; known zones: {}", zone_id, fmt::join(ids, ", ")));
    }
    const auto it = snap.entries.find(zone_id);
    if (it == snap.entries.end()) {
        throw Error(ErrorKind::model_mismatch, fmt::format("zone '{}' has no active model", zone_id));
    }
    return it->second;
}

ForecastService::Run ForecastService::run(const Entry& e, const WeatherSeries& weather, int steps, Strategy strategy,
                                          double sentiment, double personnel) const {
    if (!e.artifact.supports(strategy)) {
        throw Error(ErrorKind::model_mismatch,
                    fmt::format("zone '{}': active model has no {} models", e.artifact.zone_id, to_string(strategy)));
    }
    if (steps > e.artifact.max_steps(strategy)) {
        throw Error(ErrorKind::coverage, fmt::format("horizon of {} steps exceeds the {} direct models", steps,
                                                     e.artifact.max_steps(strategy)));
    }
    Run r;
    r.result = run_forecast(e.artifact, e.history, weather, inputs_.holidays, steps, strategy);
    const RiskConfig& cfg = inputs_.risk;
    for (const auto& s : r.result.steps) {
        const WeatherRecord* rec = weather.record_at(s.time);
        const double extremity = rec ? weather_extremity(*rec, cfg) : 0.0;
        const double event = inputs_.events.count({s.time.local_date(), e.artifact.zone_id}) ? 1.0 : 0.0;
        const auto factors = cfg.weighted(
            {{"weather_extremity", extremity}, {"event_on", event}, {"sentiment", sentiment}, {"personnel_shortage", personnel}});
        r.risk.push_back(classify_risk(crowding_level(s.prediction, s.time, e.reference, cfg.crowding_cuts), factors, cfg));
    }
    return r;
}

json ForecastService::run_json(const Entry& e, const Run& r) const {
    json j = forecast_to_json(r.result, r.risk);
    j["format"] = "csm.forecast";
    j["version"] = 1;
    j["model"] = json{{"version", e.version}, {"kind", std::string(to_string(e.artifact.kind))}};
    return j;
}

Response ForecastService::zones() const {
    return guarded([&] {
        const auto snap = snapshot();
        json list = json::array();
        for (const auto& [id, series] : inputs_.history) {
            json z{{"zone_id", id}};
            const auto range = series.observed_range();
            z["last_observed"] = range ? json(format_timestamp(range->last)) : json(nullptr);
            if (const auto it = snap->entries.find(id); it != snap->entries.end()) {
                z["active_version"] = it->second.version;
                z["kind"] = std::string(to_string(it->second.artifact.kind));
                z["resolution"] = format_duration(it->second.artifact.resolution);
            } else {
                z["active_version"] = nullptr;
            }
            list.push_back(std::move(z));
        }
        return Response{200, json{{"format", "csm.zones"}, {"version", 1}, {"zones", std::move(list)}}};
    });
}

Response ForecastService::forecast(const std::string& zone_id, const ForecastQuery& q) const {
    return with_zone_list(guarded([&] {
        const auto snap = snapshot();
        const Entry& e = entry_for(*snap, zone_id);
        const int steps = parse_horizon(q.horizon.value_or("1d"), e.artifact.resolution);
        const Strategy strategy = parse_strategy(q.strategy.value_or("recursive"));
        const Run r = run(e, e.weather, steps, strategy, unit_score(q.sentiment, "sentiment"),
                          unit_score(q.personnel_shortage, "personnel_shortage"));
        return Response{200, run_json(e, r)};
    }));
}

Response ForecastService::risk(const std::string& zone_id, const ForecastQuery& q) const {
    return with_zone_list(guarded([&] {
        const auto snap = snapshot();
        const Entry& e = entry_for(*snap, zone_id);
        const int steps = parse_horizon(q.horizon.value_or("1d"), e.artifact.resolution);
        const Strategy strategy = parse_strategy(q.strategy.value_or("recursive"));
        const Run r = run(e, e.weather, steps, strategy, unit_score(q.sentiment, "sentiment"),
                          unit_score(q.personnel_shortage, "personnel_shortage"));
        std::size_t peak = 0;
        for (std::size_t i = 1; i < r.risk.size(); ++i) {
            if (r.risk[i].category > r.risk[peak].category) peak = i;
        }
        json steps_json = json::array();
        for (const auto& a : r.risk) steps_json.push_back(to_json(a));
        return Response{200, json{{"format", "csm.risk"},
                                  {"version", 1},
                                  {"zone_id", zone_id},
                                  {"current", to_json(r.risk.front())},
                                  {"peak", to_json(r.risk[peak])},
                                  {"steps", std::move(steps_json)}}};
    }));
}

Response ForecastService::whatif(const json& req) const {
    return with_zone_list(guarded([&] {
        if (!req.is_object()) throw Error(ErrorKind::invalid_argument, "what-if request must be an object");
        for (const auto& [key, v] : req.items()) {
            if (key != "zone_id" && key != "h" && key != "strategy" && key != "overrides") {
                throw Error(ErrorKind::invalid_argument, fmt::format("unknown request field '{}'", key));
            }
        }
        const auto snap = snapshot();
        const Entry& e = entry_for(*snap, req.at("zone_id").get<std::string>());
        const Minutes res = e.artifact.resolution;
        std::string h = "1d";
        if (req.contains("h")) h = req.at("h").is_number_integer() ? std::to_string(req.at("h").get<int>())
                                                                    : req.at("h").get<std::string>();
        const int steps = parse_horizon(h, res);
        const Strategy strategy = parse_strategy(req.value("strategy", std::string("recursive")));
        const Timestamp origin = e.history.points().back().time;

        auto pts = e.weather.points();
        for (const auto& o : req.value("overrides", json::array())) {
            if (!o.is_object()) throw Error(ErrorKind::invalid_argument, "each override must be an object");
            const std::string mode = o.value("mode", std::string("delta"));
            if (mode != "delta" && mode != "replace") {
                throw Error(ErrorKind::invalid_argument, fmt::format("override mode '{}' is not delta or replace", mode));
            }
            int first = 1;
            int last = steps;
            if (o.contains("step")) {
                first = last = o.at("step").get<int>();
                if (first < 1 || first > steps) {
                    throw Error(ErrorKind::invalid_argument,
                                fmt::format("override step {} outside the horizon 1..{}", first, steps));
                }
            }
            std::vector<std::pair<std::string, double>> changes;
            for (const auto& [key, v] : o.items()) {
                if (key == "step" || key == "mode") continue;
                WeatherRecord probe;
                field(probe, key);
                if (!v.is_number()) throw Error(ErrorKind::invalid_argument, fmt::format("override '{}' must be numeric", key));
                changes.emplace_back(key, v.get<double>());
            }
            for (int k = first; k <= last; ++k) {
                const auto t = origin + res * k;
                const auto idx = e.weather.index_of(t);
                if (!idx || !pts[*idx].record) {
                    throw Error(ErrorKind::coverage, fmt::format("no weather forecast at {}", format_timestamp(t)));
                }
                auto& rec = *pts[*idx].record;
                for (const auto& [name, value] : changes) {
                    double& f = field(rec, name);
                    f = mode == "delta" ? f + value : value;
                }
                try {
                    rec.validate();
                } catch (const Error& err) {
                    throw Error(ErrorKind::validation, fmt::format("override at step {}: {}", k, err.what()));
                }
            }
        }
        const WeatherSeries scenario_weather(res, std::move(pts));
        const Run base = run(e, e.weather, steps, strategy, 0.0, 0.0);
        const Run scen = run(e, scenario_weather, steps, strategy, 0.0, 0.0);

        json deltas = json::array();
        for (std::size_t i = 0; i < base.result.steps.size(); ++i) {
            deltas.push_back(json{{"step", i + 1},
                                  {"timestamp", format_timestamp(base.result.steps[i].time)},
                                  {"delta", scen.result.steps[i].prediction - base.result.steps[i].prediction},
                                  {"baseline_category", std::string(to_string(base.risk[i].category))},
                                  {"scenario_category", std::string(to_string(scen.risk[i].category))}});
        }
        json daily = json::array();
        const auto bd = daily_totals(base.result);
        const auto sd = daily_totals(scen.result);
        for (std::size_t i = 0; i < bd.size(); ++i) {
            daily.push_back(json{{"date", format_date(bd[i].date)}, {"delta", sd[i].total - bd[i].total},
                                 {"complete", bd[i].complete}});
        }
        return Response{200, json{{"format", "csm.whatif"},
                                  {"version", 1},
                                  {"zone_id", e.artifact.zone_id},
                                  {"baseline", run_json(e, base)},
                                  {"scenario", run_json(e, scen)},
                                  {"deltas", std::move(deltas)},
                                  {"daily_deltas", std::move(daily)}}};
    }));
}

Response ForecastService::models() const {
    return guarded([&] {
        const auto snap = snapshot();
        json list = json::array();
        for (const auto& zone : registry_.zones()) {
            json m{{"zone_id", zone}, {"versions", registry_.versions(zone)}};
            const auto active = registry_.active_version(zone);
            m["active_version"] = active ? json(*active) : json(nullptr);
            if (const auto it = snap->entries.find(zone); it != snap->entries.end()) {
                const auto& a = it->second.artifact;
                m["serving_version"] = it->second.version;
                m["kind"] = std::string(to_string(a.kind));
                m["resolution"] = format_duration(a.resolution);
                m["lags"] = a.lags.lags();
                json strategies = json::array({"recursive"});
                if (!a.direct.empty()) strategies.push_back("direct");
                m["strategies"] = std::move(strategies);
                m["metadata"] = a.metadata;
            }
            list.push_back(std::move(m));
        }
        return Response{200, json{{"format", "csm.models"}, {"version", 1}, {"models", std::move(list)}}};
    });
}

}  // namespace csm
