#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <fmt/ostream.h>
#include <json.hpp>

#include "csm/config.hpp"
#include "csm/error.hpp"
#include "csm/eval.hpp"
#include "csm/http_server.hpp"
#include "csm/io.hpp"
#include "csm/pipeline.hpp"
#include "csm/registry.hpp"
#include "csm/service.hpp"
#include "csm/synth.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace csm;

namespace {

std::ofstream open_output(const fs::path& p) {
    if (p.has_parent_path()) fs::create_directories(p.parent_path());
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorKind::io, fmt::format("cannot write {}", p.string()));
    return out;
}

struct Common {
    std::string config;
    std::string data;
    std::string registry;
    std::string out;

    AppConfig resolve() const {
        AppConfig c = resolve_config(config.empty() ? std::nullopt : std::optional<std::string>(config));
        if (!data.empty()) c.data = data_paths_in(data);
        if (!registry.empty()) c.registry = registry;
        if (!out.empty()) c.output_dir = out;
        return c;
    }
};

void add_common(CLI::App* cmd, Common& c, bool with_registry) {
    cmd->add_option("--config", c.config, "Config file (default: $CSM_CONFIG)");
    cmd->add_option("--data", c.data, "Data directory");
    if (with_registry) cmd->add_option("--registry", c.registry, "Model registry directory");
}

// Zones requested on the command line, or every zone of the dataset.
std::vector<std::string> pick_zones(const std::vector<std::string>& requested, const std::vector<std::string>& available) {
    if (requested.empty()) return available;
    for (const auto& z : requested) {
        if (std::find(available.begin(), available.end(), z) == available.end()) {
            throw Error(ErrorKind::not_found, fmt::format("unknown zone '{}'", z));
        }
    }
    return requested;
}

std::vector<int> parse_lags(const std::string& text) {
    std::vector<int> out;
    for (const auto& part : split_line(text, ',')) {
        try {
            out.push_back(std::stoi(part));
        } catch (const std::exception&) {
            throw Error(ErrorKind::invalid_argument, fmt::format("bad lag '{}'", part));
        }
    }
    LagSpec{out};
    return out;
}

// Split at local midnight `test_days` days before the end of the data.
Timestamp test_split(const Dataset& ds, int test_days) {
    const auto ts = ds.timestamps();
    if (ts.empty()) throw Error(ErrorKind::insufficient_data, "empty dataset");
    if (test_days < 1) throw Error(ErrorKind::invalid_argument, "test days must be >= 1");
    const Date last = ts.back().local_date();
    return local_midnight(last - std::chrono::days{test_days - 1}, ts.back().offset_minutes);
}

// generate

struct GenerateArgs {
    Common common;
    std::uint64_t seed = 0;
    int days = 400;
    int forecast_days = 14;
    bool nonlinear = false;
    double noise_sigma = 1000.0;
    double persistence = 0.0;
    bool no_count_noise = false;
};

int run_generate(const GenerateArgs& a) {
    const AppConfig cfg = a.common.resolve();
    const fs::path dir = a.common.data.empty() ? cfg.data.visits.parent_path() : fs::path(a.common.data);
    if (a.forecast_days < 1) throw Error(ErrorKind::invalid_argument, "forecast days must be >= 1");

    GeneratorConfig g;
    g.days = a.days;
    g.seed = a.seed;
    g.noise_sigma = a.noise_sigma;
    g.persistence = a.persistence;
    g.count_noise = !a.no_count_noise;
    if (a.nonlinear) g.saturation_width = 4.0;

    WeatherConfig w;
    w.days = a.days + a.forecast_days;
    w.seed = a.seed;
    const WeatherSeries weather = generate_weather(w);
    const SyntheticDataset synth = generate_visits(g, weather);

    const auto& pts = weather.points();
    const auto split = static_cast<std::size_t>(a.days) * 24;
    const WeatherSeries observed(kHour, {pts.begin(), pts.begin() + static_cast<std::ptrdiff_t>(split)});
    const WeatherSeries forecast(kHour, {pts.begin() + static_cast<std::ptrdiff_t>(split), pts.end()});

    fs::create_directories(dir);
    const DataPaths paths = data_paths_in(dir);
    {
        auto out = open_output(paths.visits);
        write_visits(out, synth.dataset.zones());
    }
    {
        auto out = open_output(paths.weather);
        write_weather(out, observed);
    }
    {
        auto out = open_output(paths.weather_forecast);
        write_weather(out, forecast);
    }
    {
        auto out = open_output(paths.holidays);
        write_holidays(out, fixed_holidays(synth.days.front(), forecast.points().back().time.local_date()));
    }
    {
        auto out = open_output(paths.events);
        write_events(out, synth.events);
    }
    {
        auto out = open_output(dir / "truth_daily.csv");
        out << "date,zone_id,latent_total\n";
        for (const auto& [zone, totals] : synth.latent_daily) {
            for (std::size_t d = 0; d < totals.size(); ++d) {
                fmt::print(out, "{},{},{}\n", format_date(synth.days[d]), zone, totals[d]);
            }
        }
    }
    std::cout << json{{"data_dir", dir.string()}, {"zones", synth.dataset.zone_ids().size()}, {"days", a.days},
                      {"forecast_days", a.forecast_days}, {"seed", a.seed}}
                     .dump()
              << '\n';
    return 0;
}

// train

struct TrainArgs {
    Common common;
    std::string model;
    std::vector<std::string> zones;
    std::string lags;
    std::string resolution;
    int depth = 0;
    int estimators = 0;
    double learning_rate = 0.0;
    int direct_steps = -1;
    long long seed = -1;
    bool no_filter = false;
    bool no_activate = false;
};

int run_train(const TrainArgs& a) {
    const AppConfig cfg = a.common.resolve();
    TrainConfig tc = cfg.train;
    if (!a.model.empty()) tc.kind = parse_model_kind(a.model);
    if (!a.resolution.empty()) tc.resolution = parse_duration(a.resolution);
    if (!a.lags.empty()) tc.lags = parse_lags(a.lags);
    if (a.depth > 0) tc.gbrt.max_depth = a.depth;
    if (a.estimators > 0) tc.gbrt.n_estimators = a.estimators;
    if (a.learning_rate > 0.0) tc.gbrt.learning_rate = a.learning_rate;
    if (a.direct_steps >= 0) tc.direct_steps = a.direct_steps;
    if (a.seed >= 0) tc.seed = static_cast<std::uint64_t>(a.seed);
    if (a.no_filter) tc.filter = false;
    tc.gbrt.validate();

    const Dataset ds = load_dataset(cfg.data);
    ModelRegistry registry(cfg.registry);
    json summary = json::array();
    for (const auto& zone : pick_zones(a.zones, ds.zone_ids())) {
        const ModelArtifact artifact = train_zone(ds, zone, tc);
        const int version = registry.publish(artifact);
        if (!a.no_activate) registry.activate(zone, version);
        summary.push_back(json{{"zone_id", zone},
                               {"version", version},
                               {"active", !a.no_activate},
                               {"kind", std::string(to_string(artifact.kind))},
                               {"rows", artifact.metadata.at("rows")},
                               {"in_sample", artifact.metadata.at("in_sample")}});
    }
    std::cout << summary.dump() << '\n';
    return 0;
}

// evaluate

struct EvaluateArgs {
    Common common;
    bool compare = false;
    std::vector<std::string> zones;
    int test_days = 60;
    std::string resolution;
};

int run_evaluate(const EvaluateArgs& a) {
    if (!a.compare) throw Error(ErrorKind::invalid_argument, "evaluate needs --compare");
    const AppConfig cfg = a.common.resolve();
    TrainConfig tc = cfg.train;
    if (!a.resolution.empty()) tc.resolution = parse_duration(a.resolution);
    const Dataset ds = at_resolution(load_dataset(cfg.data), tc.resolution);
    const Timestamp split = test_split(ds, a.test_days);
    const GbrtParams params = tc.gbrt;
    const std::uint64_t seed = tc.seed;
    const auto report = compare_models(
        ds, pick_zones(a.zones, ds.zone_ids()), LagSpec(tc.effective_lags()),
        [](const FeatureMatrix& m) -> Model { return fit_ols(m); },
        [&](const FeatureMatrix& m) -> Model { return fit_gbrt(m, params, seed); }, split, tc.features);
    {
        auto out = open_output(cfg.output_dir / "comparison.csv");
        report.write_csv(out);
    }
    {
        auto out = open_output(cfg.output_dir / "comparison_errors.csv");
        report.write_error_samples(out);
    }
    std::cout << report.summary().dump() << '\n';
    return 0;
}

// forecast

struct ForecastArgs {
    Common common;
    std::vector<std::string> zones;
    std::string horizon = "1d";
    std::string strategy = "recursive";
};

int run_forecast_cmd(const ForecastArgs& a) {
    const AppConfig cfg = a.common.resolve();
    const auto history = load_visits(cfg.data.visits.string());
    const WeatherSeries weather =
        load_weather(cfg.data.weather.string()).extended_with(load_weather(cfg.data.weather_forecast.string()));
    const HolidaySet holidays = fs::exists(cfg.data.holidays) ? load_holidays(cfg.data.holidays.string()) : HolidaySet{};
    const Strategy strategy = parse_strategy(a.strategy);
    const ModelRegistry registry(cfg.registry);

    std::vector<std::string> zones = a.zones;
    if (zones.empty()) {
        for (const auto& z : registry.zones()) {
            if (registry.active_version(z) && history.count(z)) zones.push_back(z);
        }
        if (zones.empty()) throw Error(ErrorKind::model_mismatch, "no zone has an active model");
    }
    json written = json::array();
    for (const auto& zone : zones) {
        const auto hist = history.find(zone);
        if (hist == history.end()) throw Error(ErrorKind::not_found, fmt::format("unknown zone '{}'", zone));
        const auto version = registry.active_version(zone);
        if (!version) throw Error(ErrorKind::model_mismatch, fmt::format("zone '{}' has no active model", zone));
        const ModelArtifact artifact = registry.load(zone, *version);
        const int steps = parse_horizon(a.horizon, artifact.resolution);
        const ForecastResult f = run_forecast(artifact, hist->second, weather, holidays, steps, strategy);
        const fs::path p = cfg.output_dir / fmt::format("forecast_{}.csv", zone);
        auto out = open_output(p);
        write_forecast_csv(out, f);
        written.push_back(json{{"zone_id", zone}, {"version", *version}, {"steps", steps}, {"file", p.string()}});
    }
    std::cout << written.dump() << '\n';
    return 0;
}

// risk and serve share the service

struct RiskArgs {
    Common common;
    std::string zone;
    std::string horizon = "1d";
    std::string strategy = "recursive";
    std::string sentiment;
    std::string personnel;
};

int run_risk(const RiskArgs& a) {
    const AppConfig cfg = a.common.resolve();
    const ModelRegistry registry(cfg.registry);
    const FileWeatherProvider provider(load_weather(cfg.data.weather_forecast.string()));
    const ForecastService service(registry, load_service_inputs(cfg.data, cfg.risk), provider);
    ForecastQuery q{a.horizon, a.strategy, std::nullopt, std::nullopt};
    if (!a.sentiment.empty()) q.sentiment = a.sentiment;
    if (!a.personnel.empty()) q.personnel_shortage = a.personnel;
    const Response r = service.risk(a.zone, q);
    if (r.status != 200) {
        std::cerr << r.body.dump() << '\n';
        return 1;
    }
    std::cout << r.body.dump(2) << '\n';
    return 0;
}

struct ServeArgs {
    Common common;
    std::string host;
    int port = -1;
};

int run_serve(const ServeArgs& a) {
    const AppConfig cfg = a.common.resolve();
    const ModelRegistry registry(cfg.registry);
    const FileWeatherProvider provider(load_weather(cfg.data.weather_forecast.string()));
    ForecastService service(registry, load_service_inputs(cfg.data, cfg.risk), provider);
    HttpServer server(service);
    const std::string host = a.host.empty() ? cfg.server.host : a.host;
    const int port = server.bind(host, a.port >= 0 ? a.port : cfg.server.port);
    std::cout << json{{"listening", fmt::format("http://{}:{}", host, port)}}.dump() << std::endl;
    server.listen();
    return 0;
}

// plot

struct PlotArgs {
    Common common;
    int test_days = 60;
    std::string resolution = "1d";
    std::string lags;
    int horizon = 10;
};

std::vector<double> predict_matrix(const Model& m, const FeatureMatrix& x) {
    std::vector<double> out;
    std::vector<double> row(x.column_count());
    for (std::size_t i = 0; i < x.row_count(); ++i) {
        for (std::size_t c = 0; c < row.size(); ++c) {
            row[c] = x.rows(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c));
        }
        out.push_back(predict(m, row));
    }
    return out;
}

int run_plot(const PlotArgs& a) {
    const AppConfig cfg = a.common.resolve();
    const Minutes res = parse_duration(a.resolution);
    const Dataset ds = at_resolution(load_dataset(cfg.data), res);
    const LagSpec lag(a.lags.empty() ? default_lags(res) : parse_lags(a.lags));
    const Timestamp split = test_split(ds, a.test_days);
    const auto zones = ds.zone_ids();
    const GbrtParams params = cfg.train.gbrt;
    const std::uint64_t seed = cfg.train.seed;
    const fs::path dir = cfg.output_dir;
    const Trainer gbrt = [&](const FeatureMatrix& m) -> Model { return fit_gbrt(m, params, seed); };

    const auto report = compare_models(
        ds, zones, lag, [](const FeatureMatrix& m) -> Model { return fit_ols(m); }, gbrt, split);
    {
        auto out = open_output(dir / "fig7.csv");
        report.write_csv(out);
    }
    for (const auto& [name, parameter, values] :
         {std::tuple{"fig8a.csv", SweepParameter::max_depth, std::vector<int>{1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12}},
          std::tuple{"fig8b.csv", SweepParameter::n_estimators,
                     std::vector<int>{1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12, 13, 14, 15, 16, 17, 18, 19, 20}}}) {
        auto out = open_output(dir / name);
        out << (parameter == SweepParameter::max_depth ? "max_depth" : "n_estimators") << ",rmse\n";
        for (const auto& p : sweep_gbrt(ds, zones, lag, params, parameter, values, split, seed)) {
            fmt::print(out, "{},{}\n", p.value, p.rmse);
        }
    }

    auto fig9a = open_output(dir / "fig9a.csv");
    auto fig9b = open_output(dir / "fig9b.csv");
    auto fig10 = open_output(dir / "fig10.csv");
    auto fig11 = open_output(dir / "fig11.csv");
    fig9a << "zone_id,timestamp,truth,prediction\n";
    fig9b << "zone_id,abs_error\n";
    fig10 << "zone_id,step,mean_abs_error,origins\n";
    fig11 << "zone_id,timestamp,truth,prediction\n";

    const auto ts = ds.timestamps();
    const auto split_idx = static_cast<std::size_t>(std::lower_bound(ts.begin(), ts.end(), split) - ts.begin());
    // Last Saturday origin whose full horizon lies inside the data.
    std::optional<std::size_t> saturday;
    for (std::size_t i = split_idx; i + static_cast<std::size_t>(a.horizon) <= ts.size(); ++i) {
        if (calendar_features(ts[i], {}).weekday == 5 && calendar_features(ts[i], {}).hour == 0) saturday = i;
    }
    std::map<std::string, ForecastResult> examples;

    for (const auto& zone : zones) {
        const auto [train, test] = split_rows(build_matrix(ds, zone, lag), split);
        const Model model = gbrt(train);
        const auto pred = predict_matrix(model, test);
        for (std::size_t i = 0; i < pred.size(); ++i) {
            const double y = test.target(static_cast<Eigen::Index>(i));
            fmt::print(fig9a, "{},{},{},{}\n", zone, format_timestamp(test.row_timestamps[i]), y, pred[i]);
            fmt::print(fig9b, "{},{}\n", zone, std::abs(y - pred[i]));
        }
        const HorizonSpec h(a.horizon);
        if (split_idx >= 1 && split_idx + static_cast<std::size_t>(a.horizon) <= ts.size()) {
            const std::size_t origins = ts.size() - static_cast<std::size_t>(a.horizon) - split_idx + 1;
            const auto runs = rolling_forecasts(model, ds, zone, lag, h, split_idx - 1, origins, 1);
            const auto profile = step_error_profile(runs, ds.zone(zone));
            for (std::size_t k = 0; k < profile.mean_abs_error.size(); ++k) {
                fmt::print(fig10, "{},{},{},{}\n", zone, k + 1, profile.mean_abs_error[k], profile.origins);
            }
        }
        if (saturday) {
            examples.emplace(zone, rolling_forecasts(model, ds, zone, lag, h, *saturday - 1, 1, 1).front());
        }
    }
    // Single zones plus the boulevard as the sum of its sections.
    const auto truth_at = [&](const std::string& zone, const Timestamp& t) {
        return ds.zone(zone).value_at(t).value_or(std::numeric_limits<double>::quiet_NaN());
    };
    for (const auto& zone : {"pier", "kurhaus_plein", "beach_stadium"}) {
        const auto it = examples.find(zone);
        if (it == examples.end()) continue;
        for (const auto& s : it->second.steps) {
            fmt::print(fig11, "{},{},{},{}\n", zone, format_timestamp(s.time), truth_at(zone, s.time), s.prediction);
        }
    }
    std::vector<std::string> boulevard;
    for (const auto& [zone, f] : examples) {
        if (zone.rfind("boulevard_", 0) == 0) boulevard.push_back(zone);
    }
    if (!boulevard.empty()) {
        const auto& first = examples.at(boulevard.front());
        for (std::size_t k = 0; k < first.steps.size(); ++k) {
            double truth = 0.0;
            double pred = 0.0;
            for (const auto& z : boulevard) {
                truth += truth_at(z, examples.at(z).steps[k].time);
                pred += examples.at(z).steps[k].prediction;
            }
            fmt::print(fig11, "boulevard,{},{},{}\n", format_timestamp(first.steps[k].time), truth, pred);
        }
    }
    std::cout << json{{"output_dir", dir.string()},
                      {"files", {"fig7.csv", "fig8a.csv", "fig8b.csv", "fig9a.csv", "fig9b.csv", "fig10.csv", "fig11.csv"}},
                      {"comparison", report.summary()}}
                     .dump()
              << '\n';
    return 0;
}

void print_error(std::string_view kind, std::string_view message) {
    std::cerr << json{{"error", kind}, {"message", message}}.dump() << '\n';
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"csm: crowd forecasting and risk decision support"};
    app.require_subcommand(1);

    GenerateArgs gen;
    auto* g = app.add_subcommand("generate", "Write a seeded synthetic dataset");
    g->add_option("--config", gen.common.config, "Config file (default: $CSM_CONFIG)");
    g->add_option("--out,--data", gen.common.data, "Output data directory");
    g->add_option("--seed", gen.seed, "Random seed");
    g->add_option("--days", gen.days, "Observed days")->check(CLI::PositiveNumber);
    g->add_option("--forecast-days", gen.forecast_days, "Days of weather forecast after the observations");
    g->add_flag("--nonlinear", gen.nonlinear, "Saturating temperature response");
    g->add_option("--noise-sigma", gen.noise_sigma, "Daily noise on the all-zone total");
    g->add_option("--persistence", gen.persistence, "AR(1) coefficient of the daily noise");
    g->add_flag("--no-count-noise", gen.no_count_noise, "Emit expected hourly counts");

    TrainArgs tr;
    auto* t = app.add_subcommand("train", "Train and publish zone models");
    add_common(t, tr.common, true);
    t->add_option("--model", tr.model, "mlr or gbrt");
    t->add_option("--zone", tr.zones, "Zone id (repeatable; default all)");
    t->add_option("--lags", tr.lags, "Comma-separated lag steps");
    t->add_option("--resolution", tr.resolution, "Model resolution, e.g. 1h or 1d");
    t->add_option("--depth", tr.depth, "Maximum tree depth");
    t->add_option("--estimators", tr.estimators, "Number of trees");
    t->add_option("--learning-rate", tr.learning_rate, "Shrinkage");
    t->add_option("--direct-steps", tr.direct_steps, "Per-step models for the direct strategy");
    t->add_option("--seed", tr.seed, "Training seed");
    t->add_flag("--no-filter", tr.no_filter, "Keep every feature column");
    t->add_flag("--no-activate", tr.no_activate, "Publish without activating");

    EvaluateArgs ev;
    auto* e = app.add_subcommand("evaluate", "Compare models on a held-out tail");
    add_common(e, ev.common, false);
    e->add_option("--out", ev.common.out, "Output directory");
    e->add_flag("--compare", ev.compare, "MLR versus GBRT per zone");
    e->add_option("--zone", ev.zones, "Zone id (repeatable; default all)");
    e->add_option("--test-days", ev.test_days, "Held-out days at the end");
    e->add_option("--resolution", ev.resolution, "Model resolution");

    ForecastArgs fc;
    auto* f = app.add_subcommand("forecast", "Forecast zones with their active models");
    add_common(f, fc.common, true);
    f->add_option("--out", fc.common.out, "Output directory");
    f->add_option("--zone", fc.zones, "Zone id (repeatable; default all with a model)");
    f->add_option("--horizon", fc.horizon, "Steps or duration such as 10d");
    f->add_option("--strategy", fc.strategy, "recursive or direct");

    RiskArgs rk;
    auto* r = app.add_subcommand("risk", "Risk assessment per forecast step");
    add_common(r, rk.common, true);
    r->add_option("--zone", rk.zone, "Zone id")->required();
    r->add_option("--horizon", rk.horizon, "Steps or duration");
    r->add_option("--strategy", rk.strategy, "recursive or direct");
    r->add_option("--sentiment", rk.sentiment, "Sentiment factor in [0, 1]");
    r->add_option("--personnel-shortage", rk.personnel, "Personnel shortage factor in [0, 1]");

    ServeArgs sv;
    auto* s = app.add_subcommand("serve", "Serve the HTTP API");
    add_common(s, sv.common, true);
    s->add_option("--host", sv.host, "Bind address");
    s->add_option("--port", sv.port, "Port (0 picks a free one)");

    PlotArgs pl;
    auto* p = app.add_subcommand("plot", "Write figure-data CSV files");
    add_common(p, pl.common, false);
    p->add_option("--out", pl.common.out, "Output directory");
    p->add_option("--test-days", pl.test_days, "Held-out days at the end");
    p->add_option("--resolution", pl.resolution, "Analysis resolution");
    p->add_option("--lags", pl.lags, "Comma-separated lag steps");
    p->add_option("--horizon", pl.horizon, "Multi-step horizon in steps");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& ex) {
        return app.exit(ex);
    } catch (const CLI::CallForAllHelp& ex) {
        return app.exit(ex);
    } catch (const CLI::ParseError& ex) {
        print_error("usage_error", ex.what());
        return 2;
    }

    try {
        if (*g) return run_generate(gen);
        if (*t) return run_train(tr);
        if (*e) return run_evaluate(ev);
        if (*f) return run_forecast_cmd(fc);
        if (*r) return run_risk(rk);
        if (*s) return run_serve(sv);
        if (*p) return run_plot(pl);
    } catch (const Error& ex) {
        print_error(to_string(ex.kind()), ex.what());
        return 1;
    } catch (const std::exception& ex) {
        print_error("internal_error", ex.what());
        return 1;
    }
    return 1;
}
