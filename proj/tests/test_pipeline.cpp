#include <doctest.h>

#include "csm/error.hpp"
#include "csm/pipeline.hpp"
#include "csm/synth.hpp"
#include "helpers.hpp"

using namespace csm;

namespace {

SyntheticDataset small(int days = 40) {
    GeneratorConfig c;
    c.days = days;
    c.seed = 4;
    c.zones = {{"pier", 1.6, false}, {"beach_stadium", 0.5, true}};
    return generate_visits(c, generate_weather(days, 4));
}

TrainConfig fast(ModelKind kind) {
    TrainConfig t;
    t.kind = kind;
    t.gbrt.max_depth = 4;
    t.gbrt.n_estimators = 5;
    return t;
}

}  // namespace

TEST_CASE("default lags per resolution") {
    CHECK(default_lags(kHour) == std::vector<int>{1, 2, 24, 168});
    CHECK(default_lags(Minutes{15}) == std::vector<int>{1, 2, 96, 672});
    CHECK(default_lags(kDay) == std::vector<int>{1, 2, 7});
    TrainConfig t;
    t.resolution = kDay;
    CHECK(t.effective_lags() == std::vector<int>{1, 2, 7});
    t.lags = {3};
    CHECK(t.effective_lags() == std::vector<int>{3});
}

TEST_CASE("horizon parsing") {
    CHECK(parse_horizon("10d", kHour) == 240);
    CHECK(parse_horizon("24", kHour) == 24);
    CHECK(parse_horizon("10d", kDay) == 10);
    CHECK(parse_horizon("2h", Minutes{15}) == 8);
    CHECK_THROWS_AS(parse_horizon("90m", kHour), Error);
    CHECK_THROWS_AS(parse_horizon("0", kHour), Error);
    CHECK_THROWS_AS(parse_horizon("", kHour), Error);
    CHECK_THROWS_AS(parse_horizon("soon", kHour), Error);
}

TEST_CASE("train config json") {
    const auto c = train_config_from_json(nlohmann::json::parse(
        R"({"kind": "mlr", "lags": [1, 24], "resolution": "1h", "max_depth": 6, "direct_steps": 3})"));
    CHECK(c.kind == ModelKind::mlr);
    CHECK(c.lags == std::vector<int>{1, 24});
    CHECK(c.gbrt.max_depth == 6);
    CHECK(c.direct_steps == 3);
    const auto back = train_config_from_json(to_json(c));
    CHECK(to_json(back) == to_json(c));

    CHECK_THROWS_AS(train_config_from_json(nlohmann::json{{"depth", 3}}), Error);
    CHECK_THROWS_AS(train_config_from_json(nlohmann::json{{"lags", {2, 1}}}), Error);
    CHECK_THROWS_AS(train_config_from_json(nlohmann::json{{"learning_rate", 0.0}}), Error);
    CHECK_THROWS_AS(train_config_from_json(nlohmann::json{{"direct_steps", -1}}), Error);
    CHECK_THROWS_AS(train_config_from_json(nlohmann::json::array()), Error);
    CHECK(parse_model_kind("gbrt") == ModelKind::gbrt);
    CHECK_THROWS_AS(parse_model_kind("xgb"), Error);
}

TEST_CASE("train a zone and record metadata") {
    const auto s = small();
    const auto a = train_zone(s.dataset, "pier", fast(ModelKind::mlr));
    CHECK(a.zone_id == "pier");
    CHECK(a.kind == ModelKind::mlr);
    CHECK(a.lags.lags() == std::vector<int>{1, 2, 24, 168});
    CHECK(std::holds_alternative<LinearModel>(a.one_step));
    for (const char* key : {"train", "rows", "dropped_rows", "data_range", "columns", "selection", "in_sample",
                            "r_squared"}) {
        CHECK_MESSAGE(a.metadata.contains(key), key);
    }
    CHECK(a.metadata["rows"].get<std::size_t>() == 40 * 24 - 168);
    CHECK(a.metadata["columns"] == nlohmann::json(model_columns(a.one_step)));
    CHECK(a.metadata["r_squared"].get<double>() > 0.5);
    CHECK(!a.supports(Strategy::direct));
    CHECK_THROWS_AS(train_zone(s.dataset, "nowhere", fast(ModelKind::mlr)), Error);
}

TEST_CASE("artifact round trip predicts identically") {
    const auto s = small();
    auto config = fast(ModelKind::gbrt);
    config.direct_steps = 3;
    const auto a = train_zone(s.dataset, "pier", config);
    REQUIRE(a.direct.size() == 3);
    CHECK(a.supports(Strategy::direct));
    CHECK(a.max_steps(Strategy::direct) == 3);

    const auto b = artifact_from_json(nlohmann::json::parse(to_json(a).dump()));
    CHECK(b.zone_id == a.zone_id);
    CHECK(b.lags == a.lags);
    CHECK(b.resolution == a.resolution);
    CHECK(b.metadata == a.metadata);

    const auto& zone = s.dataset.zone("pier");
    const auto cut = zone.points()[zone.size() - 49].time;
    const auto history = zone.slice(zone.points().front().time, cut);
    for (auto strategy : {Strategy::recursive, Strategy::direct}) {
        const int h = strategy == Strategy::direct ? 3 : 48;
        const auto fa = run_forecast(a, history, s.dataset.weather(), s.dataset.holidays(), h, strategy);
        const auto fb = run_forecast(b, history, s.dataset.weather(), s.dataset.holidays(), h, strategy);
        CHECK(fa == fb);
        CHECK(fa.steps.size() == static_cast<std::size_t>(h));
    }
    CHECK_THROWS_AS(run_forecast(a, history, s.dataset.weather(), {}, 4, Strategy::direct), Error);

    auto bad = to_json(a);
    bad["version"] = 7;
    CHECK_THROWS_AS(artifact_from_json(bad), Error);
    bad = to_json(a);
    bad.erase("one_step");
    CHECK_THROWS_AS(artifact_from_json(bad), Error);
}

TEST_CASE("daily artifact forecasts from hourly history") {
    const auto s = small(60);
    auto config = fast(ModelKind::mlr);
    config.resolution = kDay;
    const auto a = train_zone(s.dataset, "pier", config);
    CHECK(a.lags.lags() == std::vector<int>{1, 2, 7});

    // History ends mid-day: the partial last day must not be used as a lag.
    const auto& zone = s.dataset.zone("pier");
    const auto history = zone.slice(zone.points().front().time, zone.points()[50 * 24 + 11].time);
    const auto f = run_forecast(a, history, s.dataset.weather(), s.dataset.holidays(), 3, Strategy::recursive);
    REQUIRE(f.steps.size() == 3);
    CHECK(f.resolution == kDay);
    CHECK(f.origin == zone.points()[49 * 24].time);
    CHECK(f.steps[0].time == zone.points()[50 * 24].time);
}

TEST_CASE("daily total matrix drops incomplete days") {
    const auto s = small(10);
    const auto& full = s.dataset;
    const auto m = daily_total_matrix(full);
    CHECK(m.row_count() == 10);
    CHECK(m.dropped_rows == 0);
    double day0 = 0.0;
    for (const auto& [id, z] : full.zones()) {
        for (int h = 0; h < 24; ++h) day0 += *z.points()[static_cast<std::size_t>(h)].visitors;
    }
    CHECK(m.target(0) == doctest::Approx(day0));

    auto zones = full.zones();
    auto pts = zones.at("pier").points();
    pts[30] = VisitPoint{pts[30].time, std::nullopt, 0.0};
    zones.at("pier") = ZoneSeries("pier", kHour, pts);
    const auto gappy = daily_total_matrix(Dataset(zones, full.weather(), full.holidays(), kHour));
    CHECK(gappy.row_count() == 9);
    CHECK(gappy.dropped_rows == 1);
}
