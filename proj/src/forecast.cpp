#include "csm/forecast.hpp"

#include <algorithm>
#include <ostream>

#include <fmt/format.h>
#include <fmt/ostream.h>

#include "csm/error.hpp"

namespace csm {

namespace {

struct History {
    const ZoneSeries& series;
    GapPolicy policy;

    // Value at `t` for t within the observed history.
    double at(const Timestamp& t) const {
        const auto idx = series.index_of(t);
        if (!idx) {
            throw Error(ErrorKind::coverage,
                        fmt::format("zone '{}': history lacks {}", series.zone_id(), format_timestamp(t)));
        }
        const auto& pts = series.points();
        if (pts[*idx].visitors) return *pts[*idx].visitors;
        if (policy == GapPolicy::error) {
            throw Error(ErrorKind::coverage,
                        fmt::format("zone '{}': gap at {} inside the lag window", series.zone_id(), format_timestamp(t)));
        }
        for (std::size_t i = *idx; i-- > 0;) {
            if (pts[i].visitors) return *pts[i].visitors;
        }
        throw Error(ErrorKind::coverage,
                    fmt::format("zone '{}': no observation before gap at {}", series.zone_id(), format_timestamp(t)));
    }
};

void check_inputs(const ZoneSeries& history, const LagSpec& lag, const WeatherSeries& exog, HorizonSpec h) {
    if (history.empty()) {
        throw Error(ErrorKind::insufficient_data, "forecast needs a non-empty history");
    }
    if (history.size() < static_cast<std::size_t>(lag.max_lag())) {
        throw Error(ErrorKind::insufficient_data, fmt::format("zone '{}': history of {} slots is shorter than max lag {}",
                                                              history.zone_id(), history.size(), lag.max_lag()));
    }
    if (exog.resolution() != history.resolution()) {
        throw Error(ErrorKind::invalid_argument, "exogenous weather resolution differs from history");
    }
    const auto origin = history.points().back().time;
    std::vector<std::string> missing;
    for (int k = 1; k <= h.steps(); ++k) {
        const auto t = origin + history.resolution() * k;
        if (!exog.record_at(t)) missing.push_back(format_timestamp(t));
    }
    if (!missing.empty()) {
        throw Error(ErrorKind::coverage, fmt::format("weather forecast misses {} of {} steps (first {})", missing.size(),
                                                     h.steps(), missing.front()));
    }
}

void check_lags(const Model& model, const LagSpec& lag) {
    for (const auto& name : model_columns(model)) {
        int l = 0;
        if (parse_column(name, &l).kind == ColumnKind::lag &&
            std::find(lag.lags().begin(), lag.lags().end(), l) == lag.lags().end()) {
            throw Error(ErrorKind::model_mismatch, fmt::format("model column '{}' is not in the lag spec", name));
        }
    }
}

ForecastStep make_step(const Timestamp& t, double raw, int fed_back) {
    return ForecastStep{t, std::max(0.0, raw), raw, fed_back};
}

}  // namespace

std::string_view to_string(Strategy s) { return s == Strategy::recursive ? "recursive" : "direct"; }

Strategy parse_strategy(std::string_view text) {
    if (text == "recursive") return Strategy::recursive;
    if (text == "direct") return Strategy::direct;
    throw Error(ErrorKind::invalid_argument, fmt::format("unknown strategy '{}'", text));
}

HorizonSpec::HorizonSpec(int steps) : steps_(steps) {
    if (steps < 1) throw Error(ErrorKind::invalid_argument, "horizon must be >= 1 step");
}

ForecastResult forecast_recursive(const Model& model, const ZoneSeries& history, const WeatherSeries& exog,
                                  const LagSpec& lag, HorizonSpec h, const ForecastOptions& options) {
    check_inputs(history, lag, exog, h);
    check_lags(model, lag);
    const History hist{history, options.gap_policy};
    const auto res = history.resolution();
    const auto origin = history.points().back().time;
    const auto& columns = model_columns(model);

    ForecastResult out{history.zone_id(), origin, res, Strategy::recursive, {}};
    for (int k = 1; k <= h.steps(); ++k) {
        const auto t = origin + res * k;
        int fed_back = 0;
        auto row = assemble_row(columns, t, options.holidays, exog.record_at(t), [&](int l) -> std::optional<double> {
            if (l < k) {
                ++fed_back;
                return out.steps[static_cast<std::size_t>(k - l - 1)].raw;
            }
            return hist.at(t - res * l);
        });
        const double raw = predict(model, *row);
        out.steps.push_back(make_step(t, raw, fed_back));
    }
    return out;
}

std::vector<Model> train_direct(const MatrixFactory& factory, HorizonSpec h, const Trainer& trainer) {
    std::vector<Model> models;
    models.reserve(static_cast<std::size_t>(h.steps()));
    for (int k = 1; k <= h.steps(); ++k) {
        try {
            models.push_back(trainer(factory(k - 1)));
        } catch (const Error& e) {
            if (e.kind() == ErrorKind::insufficient_data) {
                throw Error(ErrorKind::insufficient_data, fmt::format("direct step {}: {}", k, e.what()));
            }
            throw;
        }
    }
    return models;
}

ForecastResult forecast_direct(const std::vector<Model>& models, const ZoneSeries& history, const WeatherSeries& exog,
                               const LagSpec& lag, HorizonSpec h, const ForecastOptions& options) {
    if (models.size() < static_cast<std::size_t>(h.steps())) {
        throw Error(ErrorKind::model_mismatch,
                    fmt::format("direct forecast needs {} models, have {}", h.steps(), models.size()));
    }
    check_inputs(history, lag, exog, h);
    const History hist{history, options.gap_policy};
    const auto res = history.resolution();
    const auto origin = history.points().back().time;
    const auto first = origin + res;

    ForecastResult out{history.zone_id(), origin, res, Strategy::direct, {}};
    for (int k = 1; k <= h.steps(); ++k) {
        const auto& model = models[static_cast<std::size_t>(k - 1)];
        check_lags(model, lag);
        auto row = assemble_row(model_columns(model), first, options.holidays, exog.record_at(first),
                                [&](int l) -> std::optional<double> { return hist.at(first - res * l); });
        out.steps.push_back(make_step(origin + res * k, predict(model, *row), 0));
    }
    return out;
}

std::vector<DailyTotal> daily_totals(const ForecastResult& f) {
    std::vector<DailyTotal> out;
    const auto per_day = static_cast<int>(kDay / f.resolution);
    for (const auto& s : f.steps) {
        const Date d = s.time.local_date();
        if (out.empty() || out.back().date != d) {
            out.push_back(DailyTotal{d, local_midnight(d, s.time.offset_minutes), 0.0, 0.0, 0, false});
        }
        auto& day = out.back();
        day.total += s.prediction;
        day.raw_total += s.raw;
        day.steps += 1;
    }
    for (auto& d : out) d.complete = per_day > 0 && d.steps == per_day;
    return out;
}

ForecastResult to_daily(const ForecastResult& f) {
    if (f.resolution >= kDay) return f;
    ForecastResult out{f.zone_id, f.origin, kDay, f.strategy, {}};
    for (const auto& d : daily_totals(f)) {
        if (!d.complete) continue;
        out.steps.push_back(ForecastStep{d.start, d.total, d.raw_total, 0});
    }
    if (!out.steps.empty()) out.origin = out.steps.front().time - kDay;
    return out;
}

void write_forecast_csv(std::ostream& out, const ForecastResult& f) {
    out << "timestamp,zone_id,prediction,strategy\n";
    for (const auto& s : f.steps) {
        fmt::print(out, "{},{},{},{}\n", format_timestamp(s.time), f.zone_id, s.prediction, to_string(f.strategy));
    }
}

}  // namespace csm
