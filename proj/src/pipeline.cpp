#include "csm/pipeline.hpp"

#include <fmt/format.h>

#include "csm/error.hpp"
#include "csm/eval.hpp"
#include "csm/linreg.hpp"

namespace csm {

using nlohmann::json;

std::string_view to_string(ModelKind k) { return k == ModelKind::mlr ? "mlr" : "gbrt"; }

ModelKind parse_model_kind(std::string_view text) {
    if (text == "mlr") return ModelKind::mlr;
    if (text == "gbrt") return ModelKind::gbrt;
    throw Error(ErrorKind::invalid_argument, fmt::format("unknown model kind '{}' (expected mlr or gbrt)", text));
}

TrainConfig train_config_from_json(const json& j, TrainConfig c) {
    if (!j.is_object()) throw Error(ErrorKind::config, "train config must be an object");
    for (const auto& [key, v] : j.items()) {
        if (key == "kind") c.kind = parse_model_kind(v.get<std::string>());
        else if (key == "lags") c.lags = v.get<std::vector<int>>();
        else if (key == "resolution") c.resolution = parse_duration(v.get<std::string>());
        else if (key == "calendar_features") c.features.calendar = v.get<bool>();
        else if (key == "weather_features") c.features.weather = v.get<bool>();
        else if (key == "filter") c.filter = v.get<bool>();
        else if (key == "min_variance") c.thresholds.min_variance = v.get<double>();
        else if (key == "min_abs_corr") c.thresholds.min_abs_corr = v.get<double>();
        else if (key == "max_depth") c.gbrt.max_depth = v.get<int>();
        else if (key == "n_estimators") c.gbrt.n_estimators = v.get<int>();
        else if (key == "learning_rate") c.gbrt.learning_rate = v.get<double>();
        else if (key == "min_samples_leaf") c.gbrt.min_samples_leaf = v.get<int>();
        else if (key == "seed") c.seed = v.get<std::uint64_t>();
        else if (key == "direct_steps") c.direct_steps = v.get<int>();
        else throw Error(ErrorKind::config, fmt::format("unknown train option '{}'", key));
    }
    if (!c.lags.empty()) LagSpec{c.lags};
    c.gbrt.validate();
    if (c.direct_steps < 0) throw Error(ErrorKind::config, "direct_steps must be >= 0");
    return c;
}

json to_json(const TrainConfig& c) {
    return json{{"kind", to_string(c.kind)},
                {"lags", c.effective_lags()},
                {"resolution", format_duration(c.resolution)},
                {"calendar_features", c.features.calendar},
                {"weather_features", c.features.weather},
                {"filter", c.filter},
                {"min_variance", c.thresholds.min_variance},
                {"min_abs_corr", c.thresholds.min_abs_corr},
                {"max_depth", c.gbrt.max_depth},
                {"n_estimators", c.gbrt.n_estimators},
                {"learning_rate", c.gbrt.learning_rate},
                {"min_samples_leaf", c.gbrt.min_samples_leaf},
                {"seed", c.seed},
                {"direct_steps", c.direct_steps}};
}

int ModelArtifact::max_steps(Strategy s) const {
    if (s == Strategy::direct) return static_cast<int>(direct.size());
    return std::numeric_limits<int>::max();
}

json to_json(const ModelArtifact& a) {
    json direct = json::array();
    for (const auto& m : a.direct) direct.push_back(to_json(m));
    return json{{"format", "csm.artifact"},
                {"version", 1},
                {"zone_id", a.zone_id},
                {"kind", to_string(a.kind)},
                {"lags", a.lags.lags()},
                {"resolution", format_duration(a.resolution)},
                {"one_step", to_json(a.one_step)},
                {"direct", std::move(direct)},
                {"metadata", a.metadata}};
}

ModelArtifact artifact_from_json(const json& j) {
    try {
        if (j.at("format") != "csm.artifact") throw Error(ErrorKind::parse, "not a model artifact");
        if (j.at("version") != 1) {
            throw Error(ErrorKind::parse, fmt::format("unsupported artifact version {}", j.at("version").dump()));
        }
        ModelArtifact a;
        a.zone_id = j.at("zone_id").get<std::string>();
        a.kind = parse_model_kind(j.at("kind").get<std::string>());
        a.lags = LagSpec(j.at("lags").get<std::vector<int>>());
        a.resolution = parse_duration(j.at("resolution").get<std::string>());
        a.one_step = model_from_json(j.at("one_step"));
        for (const auto& m : j.at("direct")) a.direct.push_back(model_from_json(m));
        a.metadata = j.value("metadata", json::object());
        return a;
    } catch (const json::exception& e) {
        throw Error(ErrorKind::parse, fmt::format("malformed artifact: {}", e.what()));
    }
}

std::vector<int> default_lags(Minutes resolution) {
    if (resolution >= kDay) return {1, 2, 7};
    const int per_day = static_cast<int>(kDay / resolution);
    return {1, 2, per_day, 7 * per_day};
}

std::vector<int> TrainConfig::effective_lags() const { return lags.empty() ? default_lags(resolution) : lags; }

Model train_model(const FeatureMatrix& m, const TrainConfig& config) {
    if (config.kind == ModelKind::mlr) return fit_ols(m);
    return fit_gbrt(m, config.gbrt, config.seed);
}

Dataset at_resolution(const Dataset& ds, Minutes resolution) {
    if (ds.resolution() == resolution) return ds;
    return align(ds.zones(), ds.weather(), ds.holidays(), resolution);
}

namespace {

json metrics_json(const Metrics& m) {
    json j{{"mae", m.mae}, {"rmse", m.rmse}, {"n", m.n_used}};
    j["mape"] = m.mape ? json(*m.mape) : json(nullptr);
    return j;
}

Metrics in_sample(const Model& model, const FeatureMatrix& m) {
    std::vector<double> y(m.target.data(), m.target.data() + m.target.size());
    std::vector<double> yhat(y.size());
    std::vector<double> row(m.column_count());
    for (std::size_t i = 0; i < y.size(); ++i) {
        for (std::size_t c = 0; c < row.size(); ++c) {
            row[c] = m.rows(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c));
        }
        yhat[i] = predict(model, row);
    }
    return compute_metrics(y, yhat);
}

std::vector<std::size_t> indices_of(const FeatureMatrix& m, const std::vector<std::string>& names) {
    std::vector<std::size_t> out;
    for (const auto& n : names) out.push_back(*m.column_index(n));
    return out;
}

}  // namespace

ModelArtifact train_zone(const Dataset& source, const std::string& zone_id, const TrainConfig& config) {
    const Dataset ds = at_resolution(source, config.resolution);
    const LagSpec lag(config.effective_lags());
    FeatureMatrix base = build_matrix(ds, zone_id, lag, config.features, 0);

    json selection = json::array();
    std::vector<std::string> kept = base.column_names();
    if (config.filter) {
        auto [filtered, report] = filter_features(base, config.thresholds);
        kept = report.kept_columns();
        for (const auto& e : report.entries) {
            json row{{"column", e.column.name}, {"variance", e.variance}, {"kept", e.kept}, {"reason", e.reason}};
            row["correlation"] = e.correlation ? json(*e.correlation) : json(nullptr);
            selection.push_back(std::move(row));
        }
        base = std::move(filtered);
    }

    ModelArtifact a;
    a.zone_id = zone_id;
    a.kind = config.kind;
    a.lags = lag;
    a.resolution = config.resolution;
    a.one_step = train_model(base, config);

    if (config.direct_steps > 0) {
        const MatrixFactory factory = [&](int shift) {
            FeatureMatrix m = build_matrix(ds, zone_id, lag, config.features, shift);
            return m.select_columns(indices_of(m, kept));
        };
        a.direct = train_direct(factory, HorizonSpec(config.direct_steps),
                                [&](const FeatureMatrix& m) { return train_model(m, config); });
    }

    json meta;
    meta["train"] = to_json(config);
    meta["rows"] = base.row_count();
    meta["dropped_rows"] = base.dropped_rows;
    meta["data_range"] = {{"first", format_timestamp(base.row_timestamps.front())},
                          {"last", format_timestamp(base.row_timestamps.back())}};
    meta["columns"] = kept;
    meta["selection"] = std::move(selection);
    meta["in_sample"] = metrics_json(in_sample(a.one_step, base));
    if (const auto* lm = std::get_if<LinearModel>(&a.one_step)) meta["r_squared"] = lm->r_squared;
    a.metadata = std::move(meta);
    return a;
}

ForecastResult run_forecast(const ModelArtifact& artifact, const ZoneSeries& history, const WeatherSeries& weather,
                            const HolidaySet& holidays, int steps, Strategy strategy) {
    if (!artifact.supports(strategy)) {
        throw Error(ErrorKind::model_mismatch,
                    fmt::format("zone '{}': artifact has no direct models", artifact.zone_id));
    }
    const HorizonSpec h(steps);
    ZoneSeries hist = history;
    if (history.resolution() != artifact.resolution) {
        // A trailing bucket that only partly covers its interval is not a usable lag.
        auto pts = resample(history, artifact.resolution, ResampleMode::sum).points();
        while (!pts.empty() && (pts.back().is_gap() || pts.back().coverage < 1.0)) pts.pop_back();
        hist = ZoneSeries(history.zone_id(), artifact.resolution, std::move(pts));
    }
    const WeatherSeries exog = weather.resolution() == artifact.resolution ? weather : resample(weather, artifact.resolution);
    ForecastOptions options{holidays, GapPolicy::carry_forward};
    if (strategy == Strategy::recursive) return forecast_recursive(artifact.one_step, hist, exog, artifact.lags, h, options);
    if (steps > artifact.max_steps(strategy)) {
        throw Error(ErrorKind::model_mismatch, fmt::format("zone '{}': {} direct models cannot cover {} steps",
                                                           artifact.zone_id, artifact.direct.size(), steps));
    }
    std::vector<Model> models(artifact.direct.begin(), artifact.direct.begin() + steps);
    return forecast_direct(models, hist, exog, artifact.lags, h, options);
}

int parse_horizon(std::string_view text, Minutes resolution) {
    if (text.empty()) throw Error(ErrorKind::invalid_argument, "empty horizon");
    const bool bare = text.find_first_not_of("0123456789") == std::string_view::npos;
    if (bare) {
        const int steps = std::stoi(std::string(text));
        HorizonSpec{steps};
        return steps;
    }
    const Minutes d = parse_duration(text);
    if (d.count() <= 0 || d.count() % resolution.count() != 0) {
        throw Error(ErrorKind::invalid_argument,
                    fmt::format("horizon {} is not a positive multiple of {}", text, format_duration(resolution)));
    }
    return static_cast<int>(d.count() / resolution.count());
}

FeatureMatrix daily_total_matrix(const Dataset& ds) {
    const WeatherSeries weather = resample(ds.weather(), kDay);
    std::vector<ZoneSeries> zones;
    for (const auto& [id, z] : ds.zones()) zones.push_back(resample(z, kDay, ResampleMode::sum));

    FeatureMatrix m;
    for (const char* name : {"temp_c", "precip_prob_pct", "cloudiness", "windspeed_ms", "is_weekend"}) {
        m.columns.push_back(parse_column(name));
    }
    std::vector<std::array<double, 5>> rows;
    std::vector<double> target;
    for (const auto& wp : weather.points()) {
        bool complete = wp.record.has_value();
        double total = 0.0;
        for (const auto& z : zones) {
            const auto idx = z.index_of(wp.time);
            if (!idx || !z.points()[*idx].visitors || z.points()[*idx].coverage < 1.0) {
                complete = false;
                break;
            }
            total += *z.points()[*idx].visitors;
        }
        if (!complete) {
            ++m.dropped_rows;
            continue;
        }
        const auto& w = *wp.record;
        const double weekend = calendar_features(wp.time, ds.holidays()).is_weekend ? 1.0 : 0.0;
        rows.push_back({w.temperature_c, w.precip_prob_pct, w.cloudiness, w.windspeed_ms, weekend});
        target.push_back(total);
        m.row_timestamps.push_back(wp.time);
    }
    m.rows.resize(static_cast<Eigen::Index>(rows.size()), 5);
    m.target.resize(static_cast<Eigen::Index>(rows.size()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        for (std::size_t c = 0; c < 5; ++c) m.rows(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) = rows[i][c];
        m.target(static_cast<Eigen::Index>(i)) = target[i];
    }
    return m;
}

}  // namespace csm
