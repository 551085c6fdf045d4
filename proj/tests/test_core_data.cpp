#include <doctest.h>

#include <cmath>
#include <random>

#include "csm/error.hpp"
#include "csm/series.hpp"
#include "helpers.hpp"

using namespace csm;
using csm::test::at;

namespace {

ErrorKind kind_of(auto&& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.kind();
    }
    FAIL("expected an error");
    return ErrorKind::io;
}

}  // namespace

TEST_CASE("timestamps keep their offset and compare by instant") {
    const auto a = at("2022-04-09T14:00+02:00");
    const auto b = at("2022-04-09T12:00Z");
    CHECK(a == b);
    CHECK(format_timestamp(a) == "2022-04-09T14:00+02:00");
    CHECK(format_timestamp(b) == "2022-04-09T12:00+00:00");
    CHECK(at("2022-04-09T14:00:00+02:00") == a);
    CHECK(kind_of([] { at("2022-04-09T14:00:30+02:00"); }) == ErrorKind::parse);
    CHECK(kind_of([] { at("2022-04-09 14:00"); }) == ErrorKind::parse);
    CHECK(kind_of([] { at("2022-02-30T00:00Z"); }) == ErrorKind::parse);
    CHECK(at("2022-04-09T23:30-01:00").local_date() == parse_date("2022-04-09"));
}

TEST_CASE("durations") {
    CHECK(parse_duration("15min") == kQuarterHour);
    CHECK(parse_duration("1h") == kHour);
    CHECK(parse_duration("10d") == kDay * 10);
    CHECK(parse_duration("90") == Minutes{90});
    CHECK(format_duration(kDay) == "1d");
    CHECK(format_duration(kQuarterHour) == "15min");
    CHECK(kind_of([] { parse_duration("1w"); }) == ErrorKind::parse);
}

TEST_CASE("calendar features") {
    const auto sat = calendar_features(at("2022-04-09T14:00+02:00"), {});
    CHECK(sat.weekday == 5);
    CHECK(sat.is_weekend);
    CHECK(sat.month == 4);
    CHECK(sat.hour == 14);

    const auto mon = calendar_features(at("2022-04-11T00:00+02:00"), {});
    CHECK(mon.weekday == 0);
    CHECK(mon.hour == 0);
    CHECK_FALSE(mon.is_weekend);

    const HolidaySet kings_day{parse_date("2022-04-27")};
    CHECK(calendar_features(at("2022-04-27T10:00+02:00"), kings_day).is_holiday);
    CHECK_FALSE(calendar_features(at("2022-04-26T10:00+02:00"), kings_day).is_holiday);

    // Local time decides the day: 23:30 UTC on Friday is Saturday in +02:00.
    CHECK(calendar_features(at("2022-04-08T23:30Z") + Minutes{0}, {}).weekday == 4);
    Timestamp shifted = at("2022-04-08T23:30Z");
    shifted.offset_minutes = 120;
    CHECK(calendar_features(shifted, {}).weekday == 5);
}

TEST_CASE("calendar features are pure and respect their ranges") {
    Timestamp t = at("2021-01-01T00:00+01:00");
    for (int i = 0; i < 24 * 400; ++i, t = t + kHour) {
        const auto f = calendar_features(t, {});
        CHECK(f == calendar_features(t, {}));
        REQUIRE((f.hour >= 0 && f.hour <= 23));
        REQUIRE((f.weekday >= 0 && f.weekday <= 6));
        REQUIRE((f.month >= 1 && f.month <= 12));
        REQUIRE(f.is_weekend == (f.weekday >= 5));
    }
}

TEST_CASE("series invariants are enforced") {
    const auto t0 = at("2022-04-09T10:00+02:00");
    CHECK(kind_of([&] { ZoneSeries("pier", kHour, {{t0, 1.0, 1.0}, {t0 + kHour * 2, 2.0, 1.0}}); }) ==
          ErrorKind::validation);
    CHECK(kind_of([&] { ZoneSeries("pier", kHour, {{t0, -1.0, 1.0}}); }) == ErrorKind::validation);
    CHECK(kind_of([&] { ZoneSeries("pier", kHour, {{t0, 1.0, 1.0}, {t0, 2.0, 1.0}}); }) == ErrorKind::validation);
}

TEST_CASE("from_observations marks gaps explicitly") {
    const auto t0 = at("2022-04-09T10:00+02:00");
    const auto s = ZoneSeries::from_observations("pier", kHour, {{t0, 5.0}, {t0 + kHour * 3, 0.0}});
    REQUIRE(s.size() == 4);
    CHECK(s.gap_count() == 2);
    CHECK(s.points()[1].is_gap());
    CHECK(s.value_at(t0 + kHour * 3) == 0.0);
    CHECK_FALSE(s.value_at(t0 + kHour).has_value());
}

TEST_CASE("resample sums and averages buckets") {
    const auto q = test::hourly("pier", "2022-04-09T10:00+02:00", {1, 2, 3, 4}, kQuarterHour);
    const auto h = resample(q, kHour, ResampleMode::sum);
    REQUIRE(h.size() == 1);
    CHECK(*h.points()[0].visitors == 10.0);
    CHECK(h.points()[0].coverage == 1.0);
    CHECK(*resample(q, kHour, ResampleMode::mean).points()[0].visitors == 2.5);

    const auto day = resample(test::hourly("pier", "2022-04-09T00:00+02:00", std::vector<double>(24, 1.0)), kDay,
                              ResampleMode::sum);
    REQUIRE(day.size() == 1);
    CHECK(*day.points()[0].visitors == 24.0);
    CHECK(day.points()[0].time == at("2022-04-09T00:00+02:00"));
}

TEST_CASE("resample marks partial and empty buckets") {
    std::vector<double> v(48, 1.0);
    v[5] = NAN;
    for (int i = 24; i < 48; ++i) v[static_cast<std::size_t>(i)] = NAN;
    const auto day = resample(test::hourly("pier", "2022-04-09T00:00+02:00", v), kDay, ResampleMode::sum);
    REQUIRE(day.size() == 2);
    CHECK(*day.points()[0].visitors == 23.0);
    CHECK(day.points()[0].coverage == doctest::Approx(23.0 / 24.0));
    CHECK(day.points()[1].is_gap());
    CHECK(day.points()[1].coverage == 0.0);
}

TEST_CASE("resample rejects non-multiple targets") {
    const auto h = test::hourly("pier", "2022-04-09T00:00+02:00", {1, 2, 3});
    CHECK(kind_of([&] { resample(h, Minutes{90}, ResampleMode::sum); }) == ErrorKind::invalid_argument);
    CHECK(kind_of([&] { resample(h, kQuarterHour, ResampleMode::sum); }) == ErrorKind::invalid_argument);
}

TEST_CASE("bucketed sums are associative on gap-free series") {
    std::mt19937_64 rng(11);
    std::uniform_int_distribution<int> count(0, 50);
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<double> v(4 * 24 * 5);
        for (auto& x : v) x = count(rng);
        const auto q = test::hourly("pier", "2022-04-09T00:00+02:00", v, kQuarterHour);
        const auto direct = resample(q, kDay, ResampleMode::sum);
        const auto staged = resample(resample(q, kHour, ResampleMode::sum), kDay, ResampleMode::sum);
        CHECK(direct == staged);
    }
}

TEST_CASE("align intersects covered ranges") {
    const auto zone = test::hourly("pier", "2022-01-01T00:00+01:00", std::vector<double>(24 * 90, 3.0));
    const auto weather = test::flat_weather("2022-02-01T00:00+01:00", 24 * 89);
    const Dataset ds = align({{"pier", zone}}, weather, {}, kHour);
    const auto ts = ds.timestamps();
    CHECK(ts.front() == at("2022-02-01T00:00+01:00"));
    CHECK(ts.back() == zone.points().back().time);
    CHECK(ds.zone("pier").size() == ts.size());

    const Dataset same = align({{"pier", zone}}, test::flat_weather("2022-01-01T00:00+01:00", 24 * 90), {}, kHour);
    CHECK(same.zone("pier") == zone);

    const auto late = test::flat_weather("2022-06-01T00:00+01:00", 24);
    try {
        align({{"pier", zone}}, late, {}, kHour);
        FAIL("expected alignment error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::alignment);
        CHECK(std::string(e.what()).find("zone pier") != std::string::npos);
        CHECK(std::string(e.what()).find("weather") != std::string::npos);
    }
}

TEST_CASE("align resamples to a coarser resolution") {
    const auto zone = test::hourly("pier", "2022-01-01T00:00+01:00", std::vector<double>(48, 2.0));
    const Dataset ds = align({{"pier", zone}}, test::flat_weather("2022-01-01T00:00+01:00", 48), {}, kDay);
    REQUIRE(ds.zone("pier").size() == 2);
    CHECK(*ds.zone("pier").points()[1].visitors == 48.0);
    CHECK(ds.weather().points()[0].record->temperature_c == 10.0);
}

TEST_CASE("dataset lookups") {
    const auto zone = test::hourly("pier", "2022-01-01T00:00+01:00", {1, 2});
    const Dataset ds = test::single_zone(zone, test::flat_weather("2022-01-01T00:00+01:00", 2));
    CHECK(ds.zone_ids() == std::vector<std::string>{"pier"});
    CHECK(kind_of([&] { ds.zone("kurhaus"); }) == ErrorKind::not_found);
}

TEST_CASE("weather records validate their ranges") {
    CHECK_NOTHROW(WeatherRecord{20, 100, 0, 0, 0}.validate());
    CHECK(kind_of([] { WeatherRecord{20, 101, 0, 0, 0}.validate(); }) == ErrorKind::validation);
    CHECK(kind_of([] { WeatherRecord{20, 50, -1, 0, 0}.validate(); }) == ErrorKind::validation);
    CHECK(kind_of([] { WeatherRecord{20, 50, 0, -0.1, 0}.validate(); }) == ErrorKind::validation);
    CHECK(kind_of([] { WeatherRecord{20, 50, 0, 0, -2}.validate(); }) == ErrorKind::validation);
}
