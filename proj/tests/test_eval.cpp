#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "csm/error.hpp"
#include "csm/eval.hpp"
#include "csm/linreg.hpp"
#include "helpers.hpp"
#include "oracles.hpp"

using namespace csm;

namespace {

constexpr const char* kStart = "2022-04-04T00:00+02:00";

bool close_rel(double a, double b, double tol = 1e-12) {
    return std::abs(a - b) <= tol * std::max({1.0, std::abs(a), std::abs(b)});
}

LinearModel persistence() {
    LinearModel m;
    m.names = {"lag_1"};
    m.coefficients = {1.0};
    m.standard_errors = {0.0};
    return m;
}

// Visitors jump from 100 to 500 when the temperature crosses 15 degrees.
Dataset step_dataset(std::uint64_t seed, int n = 600) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> temp(0.0, 30.0);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::vector<WeatherPoint> wpts;
    std::vector<double> visits;
    const auto t0 = test::at(kStart);
    for (int i = 0; i < n; ++i) {
        // the other columns are noise the target ignores; constant ones would make OLS singular
        WeatherRecord r{temp(rng), 100.0 * unit(rng), 8.0 * unit(rng), 10.0 * unit(rng), 2.0 * unit(rng)};
        wpts.push_back(WeatherPoint{t0 + kHour * i, r});
        visits.push_back(r.temperature_c < 15.0 ? 100.0 : 500.0);
    }
    const auto z = test::hourly("a", kStart, visits);
    auto z2 = test::hourly("b", kStart, visits);
    return Dataset({{"a", z}, {"b", z2}}, WeatherSeries(kHour, std::move(wpts)), {}, kHour);
}

}  // namespace

TEST_CASE("metric examples") {
    const std::vector<double> y{10, 20};
    const auto perfect = compute_metrics(y, y);
    CHECK(perfect.mae == 0.0);
    CHECK(perfect.rmse == 0.0);
    CHECK(*perfect.mape == 0.0);

    const std::vector<double> yhat{12, 16};
    const auto m = compute_metrics(y, yhat);
    CHECK(m.mae == 3.0);
    CHECK(m.rmse == doctest::Approx(std::sqrt(10.0)).epsilon(1e-15));
    CHECK(*m.mape == doctest::Approx(20.0).epsilon(1e-15));
    CHECK(m.n_used == 2);

    const std::vector<double> zeros{0, 0}, pm{1, -1};
    const auto z = compute_metrics(zeros, pm);
    CHECK(z.mae == 1.0);
    CHECK(z.rmse == 1.0);
    CHECK(!z.mape);
    CHECK(z.n_excluded_zero == 2);
}

TEST_CASE("metric input errors") {
    const std::vector<double> a{1, 2}, b{1};
    CHECK_THROWS_AS(compute_metrics(a, b), Error);
    CHECK_THROWS_AS(compute_metrics(std::vector<double>{}, std::vector<double>{}), Error);
}

TEST_CASE("metrics match the naive loop and rmse bounds mae") {
    std::mt19937_64 rng(11);
    std::uniform_int_distribution<int> len(1, 50);
    std::normal_distribution<double> nd(0.0, 50.0);
    for (int trial = 0; trial < 300; ++trial) {
        const int n = len(rng);
        std::vector<double> y, yhat;
        for (int i = 0; i < n; ++i) {
            y.push_back(trial % 5 == 0 ? std::round(nd(rng) / 40.0) : nd(rng));
            yhat.push_back(nd(rng));
        }
        const auto lib = compute_metrics(y, yhat);
        const auto ref = oracle::metrics(y, yhat);
        CHECK(close_rel(lib.mae, ref.mae));
        CHECK(close_rel(lib.rmse, ref.rmse));
        REQUIRE(lib.mape.has_value() == ref.mape.has_value());
        if (ref.mape) CHECK(close_rel(*lib.mape, *ref.mape));
        CHECK(lib.rmse >= lib.mae);
    }
}

TEST_CASE("rmse equals mae for constant errors") {
    const std::vector<double> y(7, 0.1), yhat(7, 0.4);
    const auto m = compute_metrics(y, yhat);
    CHECK(m.rmse >= m.mae);
}

TEST_CASE("metrics ignore pair order") {
    std::mt19937_64 rng(5);
    std::normal_distribution<double> nd(100.0, 30.0);
    std::vector<std::pair<double, double>> pairs;
    for (int i = 0; i < 40; ++i) pairs.emplace_back(nd(rng), nd(rng));
    auto unzip = [](const auto& ps) {
        std::vector<double> a, b;
        for (auto [x, y] : ps) {
            a.push_back(x);
            b.push_back(y);
        }
        return std::pair{a, b};
    };
    const auto [y0, h0] = unzip(pairs);
    const auto base = compute_metrics(y0, h0);
    for (int k = 0; k < 10; ++k) {
        std::shuffle(pairs.begin(), pairs.end(), rng);
        const auto [y, h] = unzip(pairs);
        const auto m = compute_metrics(y, h);
        CHECK(close_rel(m.mae, base.mae));
        CHECK(close_rel(m.rmse, base.rmse));
        CHECK(close_rel(*m.mape, *base.mape));
    }
}

TEST_CASE("step profile examples") {
    const auto truth = test::hourly("z", kStart, {1, 2, 3, 4, 5, 6});
    auto step = [](const char* t, double raw) { return ForecastStep{test::at(t), raw, raw, 0}; };

    ForecastResult perfect{"z", test::at(kStart), kHour, Strategy::recursive,
                           {step("2022-04-04T01:00+02:00", 2), step("2022-04-04T02:00+02:00", 3)}};
    const auto p0 = step_error_profile({perfect}, truth);
    CHECK(p0.mean_abs_error == std::vector<double>{0.0, 0.0});

    ForecastResult a{"z", test::at(kStart), kHour, Strategy::recursive, {step("2022-04-04T01:00+02:00", 4)}};
    ForecastResult b{"z", test::at(kStart), kHour, Strategy::recursive, {step("2022-04-04T02:00+02:00", -1)}};
    const auto p1 = step_error_profile({a, b}, truth);
    CHECK(p1.origins == 2);
    CHECK(p1.mean_abs_error == std::vector<double>{3.0});

    ForecastResult late{"z", test::at(kStart), kHour, Strategy::recursive, {step("2022-04-05T01:00+02:00", 1)}};
    try {
        step_error_profile({late}, truth);
        FAIL("expected coverage error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::coverage);
    }
    CHECK_THROWS_AS(step_error_profile({perfect, a}, truth), Error);
}

TEST_CASE("persistence on a linear trend errs by k times the slope") {
    const double s = 2.0;
    std::vector<double> values;
    for (int t = 0; t < 60; ++t) values.push_back(s * t);
    const auto ds = test::single_zone(test::hourly("z", kStart, values), test::flat_weather(kStart, 60));
    const LagSpec lag({1});
    const auto forecasts = rolling_forecasts(persistence(), ds, "z", lag, HorizonSpec(5), 3, 8, 6);
    REQUIRE(forecasts.size() == 8);
    for (std::size_t i = 1; i < forecasts.size(); ++i) {
        CHECK(forecasts[i].origin == forecasts[i - 1].origin + kHour * 6);
    }
    const auto p = step_error_profile(forecasts, ds.zone("z"));
    REQUIRE(p.mean_abs_error.size() == 5);
    for (int k = 1; k <= 5; ++k) CHECK(p.mean_abs_error[static_cast<std::size_t>(k - 1)] == k * s);

    CHECK_THROWS_AS(rolling_forecasts(persistence(), ds, "z", lag, HorizonSpec(5), 50, 2, 6), Error);
    CHECK_THROWS_AS(rolling_forecasts(persistence(), ds, "z", lag, HorizonSpec(5), 3, 2, 0), Error);
}

TEST_CASE("rolling forecasts only see history up to their origin") {
    std::vector<double> values(40, 5.0);
    values[30] = 1e6;  // a spike after the origin must not leak into the forecast
    const auto ds = test::single_zone(test::hourly("z", kStart, values), test::flat_weather(kStart, 40));
    const auto f = rolling_forecasts(persistence(), ds, "z", LagSpec({1}), HorizonSpec(3), 25, 1, 1);
    for (const auto& st : f[0].steps) CHECK(st.raw == 5.0);
}

TEST_CASE("split rows at a timestamp") {
    const auto m = test::matrix({"lag_1"}, {{1, 2, 3, 4}}, {1, 2, 3, 4});
    const auto [train, test] = split_rows(m, m.row_timestamps[3]);
    CHECK(train.row_count() == 3);
    CHECK(test.row_count() == 1);
    CHECK(test.target(0) == 4.0);
}

TEST_CASE("self comparison shows no improvement") {
    const auto ds = step_dataset(1);
    const Trainer ols = [](const FeatureMatrix& m) -> Model { return fit_ols(m); };
    const auto split = ds.zone("a").points()[400].time;
    const FeatureOptions weather_only{false, true};
    const auto report = compare_models(ds, {"a", "b"}, LagSpec({1}), ols, ols, split, weather_only);
    REQUIRE(report.zones.size() == 2);
    for (const auto& z : report.zones) {
        CHECK(!z.error);
        CHECK(*z.improvement_pct == 0.0);
        CHECK(z.mlr_abs_errors == z.gbrt_abs_errors);
        CHECK(z.mlr_r_squared.has_value());
    }
    CHECK(*report.average_improvement_pct == 0.0);
}

TEST_CASE("boosting beats least squares on a step target") {
    const auto ds = step_dataset(2);
    const Trainer ols = [](const FeatureMatrix& m) -> Model { return fit_ols(m); };
    const Trainer gbrt = [](const FeatureMatrix& m) -> Model { return fit_gbrt(m, GbrtParams{3, 15, 0.3, 1, {}}); };
    const auto split = ds.zone("a").points()[400].time;
    const FeatureOptions weather_only{false, true};
    const auto report = compare_models(ds, {"a", "missing"}, LagSpec({1}), ols, gbrt, split, weather_only);
    REQUIRE(report.zones.size() == 2);
    const auto& a = report.zones[0];
    REQUIRE(!a.error);
    CHECK(a.train_rows + a.test_rows == 599);
    CHECK(a.gbrt_mae < a.mlr_mae);
    CHECK(*a.improvement_pct > 0.0);
    CHECK(a.improvement_pct == doctest::Approx(100.0 * (a.mlr_mae - a.gbrt_mae) / a.mlr_mae));
    // the unknown zone is reported, not fatal
    CHECK(report.zones[1].error.has_value());
    CHECK(*report.max_improvement_zone == "a");

    std::ostringstream csv, samples;
    report.write_csv(csv);
    report.write_error_samples(samples);
    CHECK(csv.str().rfind("zone_id,mlr_mae,gbrt_mae,improvement_pct", 0) == 0);
    CHECK(samples.str().rfind("zone_id,model,abs_error\n", 0) == 0);
    const auto j = report.summary();
    CHECK(j["zones"].size() == 2);
    CHECK(j["zones"][1].contains("error"));
}

TEST_CASE("depth sweep on a step target") {
    const auto ds = step_dataset(3);
    const auto split = ds.zone("a").points()[400].time;
    const auto pts = sweep_gbrt(ds, {"a"}, LagSpec({1}), GbrtParams{}, SweepParameter::max_depth, {1, 3}, split);
    REQUIRE(pts.size() == 2);
    CHECK(pts[0].value == 1);
    CHECK(pts[1].value == 3);
    CHECK(pts[1].rmse <= pts[0].rmse);
    const auto est =
        sweep_gbrt(ds, {"a"}, LagSpec({1}), GbrtParams{}, SweepParameter::n_estimators, {1, 10}, split);
    CHECK(est[1].rmse < est[0].rmse);
}
