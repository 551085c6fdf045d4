#include <doctest.h>

#include <cmath>
#include <numeric>

#include "csm/error.hpp"
#include "csm/linreg.hpp"
#include "csm/pipeline.hpp"
#include "csm/synth.hpp"
#include "helpers.hpp"

using namespace csm;

namespace {

GeneratorConfig quiet(int days) {
    GeneratorConfig c;
    c.days = days;
    c.noise_sigma = 0.0;
    c.count_noise = false;
    c.event_rate = 0.0;
    return c;
}

// Hourly weather from local midnight of Monday 2022-04-04, one record per day.
WeatherSeries daily_weather(const std::vector<WeatherRecord>& per_day) {
    std::vector<WeatherPoint> pts;
    const auto t0 = test::at("2022-04-04T00:00+02:00");
    for (std::size_t d = 0; d < per_day.size(); ++d) {
        for (int h = 0; h < 24; ++h) pts.push_back(WeatherPoint{t0 + kHour * static_cast<int>(d * 24 + h), per_day[d]});
    }
    return WeatherSeries(kHour, std::move(pts));
}

double day_total(const SyntheticDataset& s, std::size_t d) {
    double t = 0.0;
    for (const auto& [id, v] : s.latent_daily) t += v[d];
    return t;
}

}  // namespace

TEST_CASE("default zones and profile") {
    const auto zones = default_zones();
    CHECK(zones.size() == 16);
    int events = 0;
    for (const auto& z : zones) events += z.event_driven ? 1 : 0;
    CHECK(events == 1);
    const auto p = default_daily_profile();
    CHECK(std::accumulate(p.begin(), p.end(), 0.0) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(p[14] > p[3]);
}

TEST_CASE("generator config validation") {
    GeneratorConfig c;
    CHECK_NOTHROW(c.validate());
    auto bad = c;
    bad.daily_profile[0] += 0.01;
    CHECK_THROWS_AS(bad.validate(), Error);
    bad = c;
    bad.zones[3].base_scale = 0.0;
    CHECK_THROWS_AS(bad.validate(), Error);
    bad = c;
    bad.zones[1].zone_id = bad.zones[0].zone_id;
    CHECK_THROWS_AS(bad.validate(), Error);
    bad = c;
    bad.persistence = 1.0;
    CHECK_THROWS_AS(bad.validate(), Error);
    bad = c;
    bad.noise_sigma = -1;
    CHECK_THROWS_AS(bad.validate(), Error);
}

TEST_CASE("weather is deterministic per seed") {
    const auto a = generate_weather(30, 9);
    CHECK(a == generate_weather(30, 9));
    CHECK(!(a == generate_weather(30, 10)));
    CHECK(a.size() == 30 * 24);
    CHECK(a.points().front().time == test::at("2021-04-01T00:00+01:00"));
    CHECK_THROWS_AS(generate_weather(0, 1), Error);
}

TEST_CASE("weather respects record ranges") {
    std::size_t scanned = 0;
    for (std::uint64_t seed = 0; seed < 3; ++seed) {
        const auto w = generate_weather(420, seed);
        for (const auto& p : w.points()) {
            REQUIRE(p.record);
            CHECK_NOTHROW(p.record->validate());
            CHECK(p.record->temperature_c > -30.0);
            CHECK(p.record->temperature_c < 45.0);
            ++scanned;
        }
    }
    CHECK(scanned >= 10000);
}

TEST_CASE("noise free weather repeats every four years") {
    WeatherConfig c;
    c.days = 1470;
    c.noise_scale = 0.0;
    const auto w = generate_weather(c);
    // 4 x 365.25 days: a whole number of both seasonal years and days
    const auto period = kHour * 35064;
    std::size_t compared = 0;
    for (const auto& p : w.points()) {
        const auto* later = w.record_at(p.time + period);
        if (!later) continue;
        CHECK(later->temperature_c == doctest::Approx(p.record->temperature_c).epsilon(1e-9));
        CHECK(later->windspeed_ms == doctest::Approx(p.record->windspeed_ms).epsilon(1e-9));
        CHECK(later->cloudiness == doctest::Approx(p.record->cloudiness).epsilon(1e-9));
        CHECK(later->precip_prob_pct == doctest::Approx(p.record->precip_prob_pct).epsilon(1e-9));
        ++compared;
    }
    CHECK(compared > 200);
}

TEST_CASE("weekend lifts the daily total by the weekend effect") {
    // Monday through Sunday with identical weather.
    const WeatherRecord r{12.0, 30.0, 60.0, 5.0, 0.0};
    const auto s = generate_visits(quiet(7), daily_weather(std::vector<WeatherRecord>(7, r)));
    CHECK(day_total(s, 5) - day_total(s, 4) == doctest::Approx(3246.0).epsilon(1e-9));
    CHECK(day_total(s, 6) - day_total(s, 0) == doctest::Approx(3246.0).epsilon(1e-9));
    CHECK(day_total(s, 1) == doctest::Approx(day_total(s, 0)).epsilon(1e-12));
}

TEST_CASE("one degree warmer adds the temperature effect") {
    std::vector<WeatherRecord> days(3, WeatherRecord{12.0, 30.0, 60.0, 5.0, 0.0});
    days[1].temperature_c = 13.0;
    const auto s = generate_visits(quiet(3), daily_weather(days));
    CHECK(day_total(s, 1) - day_total(s, 0) == doctest::Approx(225.0).epsilon(1e-9));

    // hourly counts carry the same total when count noise is off
    double hourly = 0.0;
    for (const auto& [id, z] : s.dataset.zones()) {
        for (int h = 24; h < 48; ++h) hourly += *z.points()[static_cast<std::size_t>(h)].visitors;
    }
    CHECK(hourly == doctest::Approx(day_total(s, 1)).epsilon(1e-12));
}

TEST_CASE("least squares recovers the effects from noise free totals") {
    const auto weather = generate_weather(400, 21);
    const auto s = generate_visits(quiet(400), weather);
    const auto m = daily_total_matrix(s.dataset);
    CHECK(m.column_names() == std::vector<std::string>{"temp_c", "precip_prob_pct", "cloudiness", "windspeed_ms",
                                                       "is_weekend"});
    const auto fit = fit_ols(m);
    const std::vector<double> truth{225, -10, -29, -290, 3246};
    for (std::size_t i = 0; i < truth.size(); ++i) {
        CHECK(std::abs(fit.coefficients[i] - truth[i]) <= 1e-6 * std::abs(truth[i]));
    }
    CHECK(std::abs(fit.intercept - 30000.0) <= 1e-6 * 30000.0);
}

TEST_CASE("saturating temperature response") {
    auto c = quiet(1);
    CHECK(temperature_response(c, 30.0) == 30.0);
    c.saturation_width = 4.0;
    CHECK(temperature_response(c, 14.0) == 14.0);
    CHECK(temperature_response(c, 40.0) < 18.0);
    CHECK(temperature_response(c, 40.0) > temperature_response(c, 20.0));
}

TEST_CASE("visits are deterministic and non negative") {
    const auto weather = generate_weather(60, 5);
    GeneratorConfig c;
    c.days = 60;
    c.seed = 5;
    c.noise_sigma = 6000.0;  // large enough to push some latent totals below zero
    const auto a = generate_visits(c, weather);
    const auto b = generate_visits(c, weather);
    CHECK(a.dataset.zones() == b.dataset.zones());
    CHECK(a.latent_daily == b.latent_daily);
    CHECK(a.events == b.events);
    for (const auto& [id, z] : a.dataset.zones()) {
        CHECK(z.size() == 60 * 24);
        for (const auto& p : z.points()) CHECK(*p.visitors >= 0.0);
    }
    c.seed = 6;
    CHECK(!(generate_visits(c, weather).latent_daily == a.latent_daily));
}

TEST_CASE("zone substreams do not depend on other zones") {
    const auto weather = generate_weather(90, 1);
    GeneratorConfig c;
    c.days = 90;
    c.seed = 3;
    auto other = c;
    other.zones[7].event_driven = false;
    other.zones[2].event_driven = true;
    const auto a = generate_visits(c, weather);
    const auto b = generate_visits(other, weather);
    CHECK(a.dataset.zone("pier") == b.dataset.zone("pier"));
    CHECK(a.dataset.zone("kurhaus_plein") == b.dataset.zone("kurhaus_plein"));
    CHECK(!(a.dataset.zone("beach_stadium") == b.dataset.zone("beach_stadium")));
}

TEST_CASE("events only hit event driven zones") {
    const auto weather = generate_weather(400, 2);
    GeneratorConfig c;
    c.seed = 2;
    const auto s = generate_visits(c, weather);
    CHECK(!s.events.empty());
    for (const auto& [day, zone] : s.events) CHECK(zone == "beach_stadium");
    CHECK(s.days.size() == 400);
    CHECK(!s.dataset.holidays().empty());
}

TEST_CASE("generator input checks") {
    GeneratorConfig c;
    c.days = 10;
    CHECK_THROWS_AS(generate_visits(c, generate_weather(5, 1)), Error);
    const auto shifted = generate_weather(11, 1);
    const auto late = shifted.slice(shifted.points()[3].time, shifted.points().back().time);
    CHECK_THROWS_AS(generate_visits(c, late), Error);
}

TEST_CASE("fixed holidays") {
    using namespace std::chrono;
    const auto h = fixed_holidays(Date{year{2021} / 4 / 1}, Date{year{2022} / 5 / 5});
    CHECK(h.count(Date{year{2021} / 4 / 27}));
    CHECK(h.count(Date{year{2022} / 1 / 1}));
    CHECK(h.count(Date{year{2022} / 5 / 5}));
    CHECK(!h.count(Date{year{2021} / 1 / 1}));
}
