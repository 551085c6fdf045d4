#include "csm/eval.hpp"

#include <cmath>

#include <fmt/format.h>
#include <fmt/ostream.h>

#include "csm/error.hpp"

namespace csm {

Metrics compute_metrics(std::span<const double> y, std::span<const double> yhat, double mape_epsilon) {
    if (y.size() != yhat.size()) {
        throw Error(ErrorKind::invalid_argument,
                    fmt::format("metric inputs differ in length ({} vs {})", y.size(), yhat.size()));
    }
    if (y.empty()) {
        throw Error(ErrorKind::invalid_argument, "metrics need at least one pair");
    }
    double abs_sum = 0.0;
    double sq_sum = 0.0;
    double pct_sum = 0.0;
    Metrics m;
    for (std::size_t i = 0; i < y.size(); ++i) {
        const double e = std::abs(y[i] - yhat[i]);
        abs_sum += e;
        sq_sum += e * e;
        if (std::abs(y[i]) > mape_epsilon) {
            pct_sum += e / std::abs(y[i]);
            ++m.n_used;
        } else {
            ++m.n_excluded_zero;
        }
    }
    const double n = static_cast<double>(y.size());
    m.mae = abs_sum / n;
    m.rmse = std::sqrt(sq_sum / n);
    // Rounding can leave sqrt(mean e^2) a hair below mean |e| when all errors are equal.
    m.rmse = std::max(m.rmse, m.mae);
    if (m.n_used > 0) m.mape = 100.0 * pct_sum / static_cast<double>(m.n_used);
    return m;
}

StepErrorProfile step_error_profile(const std::vector<ForecastResult>& forecasts, const ZoneSeries& truth) {
    StepErrorProfile p;
    if (forecasts.empty()) return p;
    const std::size_t h = forecasts.front().steps.size();
    std::vector<double> sums(h, 0.0);
    std::vector<std::string> missing;
    for (const auto& f : forecasts) {
        if (f.steps.size() != h) {
            throw Error(ErrorKind::invalid_argument, "forecasts in a profile must share one horizon");
        }
        for (std::size_t k = 0; k < h; ++k) {
            const auto v = truth.value_at(f.steps[k].time);
            if (!v) {
                missing.push_back(format_timestamp(f.steps[k].time));
                continue;
            }
            sums[k] += std::abs(*v - f.steps[k].raw);
        }
    }
    if (!missing.empty()) {
        std::string list;
        for (std::size_t i = 0; i < missing.size() && i < 10; ++i) list += (i ? ", " : "") + missing[i];
        throw Error(ErrorKind::coverage, fmt::format("truth missing at {} forecast steps: {}{}", missing.size(), list,
                                                     missing.size() > 10 ? ", ..." : ""));
    }
    p.origins = forecasts.size();
    for (auto& s : sums) s /= static_cast<double>(forecasts.size());
    p.mean_abs_error = std::move(sums);
    return p;
}

std::vector<ForecastResult> rolling_forecasts(const Model& model, const Dataset& ds, const std::string& zone_id,
                                              const LagSpec& lag, HorizonSpec h, std::size_t first_origin,
                                              std::size_t origins, std::size_t stride, GapPolicy gap_policy) {
    if (stride == 0) throw Error(ErrorKind::invalid_argument, "rolling stride must be >= 1");
    const auto& zone = ds.zone(zone_id);
    const auto& pts = zone.points();
    const auto steps = static_cast<std::size_t>(h.steps());
    ForecastOptions options{ds.holidays(), gap_policy};
    std::vector<ForecastResult> out;
    for (std::size_t i = 0; i < origins; ++i) {
        const std::size_t o = first_origin + i * stride;
        if (o + steps >= pts.size()) {
            throw Error(ErrorKind::insufficient_data,
                        fmt::format("zone '{}': origin {} + {} steps exceeds {} slots", zone_id, o, steps, pts.size()));
        }
        const ZoneSeries history = zone.slice(pts.front().time, pts[o].time);
        const WeatherSeries exog = ds.weather().slice(pts[o + 1].time, pts[o + steps].time);
        out.push_back(forecast_recursive(model, history, exog, lag, h, options));
    }
    return out;
}

std::pair<FeatureMatrix, FeatureMatrix> split_rows(const FeatureMatrix& m, const Timestamp& split) {
    std::vector<std::size_t> train, test;
    for (std::size_t i = 0; i < m.row_count(); ++i) {
        (m.row_timestamps[i] < split ? train : test).push_back(i);
    }
    return {m.select_rows(train), m.select_rows(test)};
}

namespace {

std::vector<double> abs_errors(const Eigen::VectorXd& y, const Eigen::VectorXd& yhat) {
    std::vector<double> out(static_cast<std::size_t>(y.size()));
    for (Eigen::Index i = 0; i < y.size(); ++i) out[static_cast<std::size_t>(i)] = std::abs(y(i) - yhat(i));
    return out;
}

Eigen::VectorXd predict_rows(const Model& model, const FeatureMatrix& m) {
    Eigen::VectorXd out(m.rows.rows());
    std::vector<double> row(m.column_count());
    for (Eigen::Index i = 0; i < m.rows.rows(); ++i) {
        for (Eigen::Index j = 0; j < m.rows.cols(); ++j) row[static_cast<std::size_t>(j)] = m.rows(i, j);
        out(i) = predict(model, row);
    }
    return out;
}

double mean_of(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

}  // namespace

ComparisonReport compare_models(const Dataset& ds, const std::vector<std::string>& zones, const LagSpec& lag,
                                const Trainer& mlr, const Trainer& gbrt, const Timestamp& split,
                                const FeatureOptions& features) {
    ComparisonReport report;
    std::vector<double> improvements;
    for (const auto& zone : zones) {
        ZoneComparison zc;
        zc.zone_id = zone;
        try {
            const auto [train, test] = split_rows(build_matrix(ds, zone, lag, features), split);
            zc.train_rows = train.row_count();
            zc.test_rows = test.row_count();
            if (train.row_count() < 2 || test.row_count() < 2) {
                throw Error(ErrorKind::insufficient_data,
                            fmt::format("{} train / {} test rows (need >= 2 each)", train.row_count(), test.row_count()));
            }
            const Model a = mlr(train);
            const Model b = gbrt(train);
            zc.mlr_abs_errors = abs_errors(test.target, predict_rows(a, test));
            zc.gbrt_abs_errors = abs_errors(test.target, predict_rows(b, test));
            zc.mlr_mae = mean_of(zc.mlr_abs_errors);
            zc.gbrt_mae = mean_of(zc.gbrt_abs_errors);
            if (zc.mlr_mae > 0.0) {
                zc.improvement_pct = 100.0 * (zc.mlr_mae - zc.gbrt_mae) / zc.mlr_mae;
                improvements.push_back(*zc.improvement_pct);
                if (!report.max_improvement_pct || *zc.improvement_pct > *report.max_improvement_pct) {
                    report.max_improvement_pct = zc.improvement_pct;
                    report.max_improvement_zone = zone;
                }
            }
            if (const auto* lm = std::get_if<LinearModel>(&a)) zc.mlr_r_squared = lm->r_squared;
        } catch (const Error& e) {
            zc.error = fmt::format("{}: {}", to_string(e.kind()), e.what());
        }
        report.zones.push_back(std::move(zc));
    }
    if (!improvements.empty()) report.average_improvement_pct = mean_of(improvements);
    return report;
}

void ComparisonReport::write_csv(std::ostream& out) const {
    auto opt = [](const std::optional<double>& v) { return v ? fmt::format("{}", *v) : std::string(); };
    out << "zone_id,mlr_mae,gbrt_mae,improvement_pct,mlr_r_squared,train_rows,test_rows,error\n";
    for (const auto& z : zones) {
        fmt::print(out, "{},{},{},{},{},{},{},{}\n", z.zone_id, z.mlr_mae, z.gbrt_mae, opt(z.improvement_pct),
                   opt(z.mlr_r_squared), z.train_rows, z.test_rows, z.error.value_or(""));
    }
}

void ComparisonReport::write_error_samples(std::ostream& out) const {
    out << "zone_id,model,abs_error\n";
    for (const auto& z : zones) {
        for (double e : z.mlr_abs_errors) fmt::print(out, "{},mlr,{}\n", z.zone_id, e);
        for (double e : z.gbrt_abs_errors) fmt::print(out, "{},gbrt,{}\n", z.zone_id, e);
    }
}

nlohmann::json ComparisonReport::summary() const {
    nlohmann::json j;
    j["format_version"] = 1;
    j["average_improvement_pct"] = average_improvement_pct ? nlohmann::json(*average_improvement_pct) : nullptr;
    j["max_improvement_pct"] = max_improvement_pct ? nlohmann::json(*max_improvement_pct) : nullptr;
    j["max_improvement_zone"] = max_improvement_zone ? nlohmann::json(*max_improvement_zone) : nullptr;
    nlohmann::json zs = nlohmann::json::array();
    for (const auto& z : zones) {
        nlohmann::json zj{{"zone_id", z.zone_id}, {"train_rows", z.train_rows}, {"test_rows", z.test_rows}};
        if (z.error) {
            zj["error"] = *z.error;
        } else {
            zj["mlr_mae"] = z.mlr_mae;
            zj["gbrt_mae"] = z.gbrt_mae;
            zj["improvement_pct"] = z.improvement_pct ? nlohmann::json(*z.improvement_pct) : nullptr;
            zj["mlr_r_squared"] = z.mlr_r_squared ? nlohmann::json(*z.mlr_r_squared) : nullptr;
        }
        zs.push_back(std::move(zj));
    }
    j["zones"] = std::move(zs);
    return j;
}

std::vector<SweepPoint> sweep_gbrt(const Dataset& ds, const std::vector<std::string>& zones, const LagSpec& lag,
                                   const GbrtParams& base, SweepParameter parameter, const std::vector<int>& values,
                                   const Timestamp& split, std::uint64_t seed) {
    std::vector<std::pair<FeatureMatrix, FeatureMatrix>> splits;
    for (const auto& z : zones) splits.push_back(split_rows(build_matrix(ds, z, lag), split));

    std::vector<SweepPoint> out;
    for (int v : values) {
        GbrtParams p = base;
        (parameter == SweepParameter::max_depth ? p.max_depth : p.n_estimators) = v;
        double total = 0.0;
        for (const auto& [train, test] : splits) {
            const auto e = fit_gbrt(train, p, seed);
            const Eigen::VectorXd yhat = predict_ensemble(e, test.rows);
            total += compute_metrics({test.target.data(), test.row_count()}, {yhat.data(), test.row_count()}).rmse;
        }
        out.push_back({v, total / static_cast<double>(splits.size())});
    }
    return out;
}

}  // namespace csm
