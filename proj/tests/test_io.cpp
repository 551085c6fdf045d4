#include <doctest.h>

#include <algorithm>
#include <random>
#include <sstream>

#include <fmt/format.h>

#include "csm/error.hpp"
#include "csm/io.hpp"
#include "helpers.hpp"

using namespace csm;

namespace {

std::map<std::string, ZoneSeries> ingest(const std::string& text) {
    std::istringstream in(text);
    return ingest_visits(in);
}

ErrorKind ingest_error(const std::string& text, std::string* message = nullptr) {
    try {
        ingest(text);
    } catch (const Error& e) {
        if (message) *message = e.what();
        return e.kind();
    }
    FAIL("expected an error");
    return ErrorKind::io;
}

}  // namespace

TEST_CASE("two quarter-hour rows become one two-point series") {
    const auto zones = ingest("timestamp,zone_id,visitors\n"
                              "2022-04-09T10:00+02:00,pier,5\n"
                              "2022-04-09T10:15+02:00,pier,7\n");
    REQUIRE(zones.size() == 1);
    const auto& s = zones.at("pier");
    CHECK(s.resolution() == kQuarterHour);
    REQUIRE(s.size() == 2);
    CHECK(*s.points()[0].visitors == 5.0);
    CHECK(*s.points()[1].visitors == 7.0);
}

TEST_CASE("header-only file yields an empty map") {
    CHECK(ingest("timestamp,zone_id,visitors\n").empty());
}

TEST_CASE("columns are matched by header name") {
    const auto zones = ingest("# resolution: 1h\nvisitors,timestamp,zone_id\n3,2022-04-09T10:00+02:00,pier\n");
    CHECK(*zones.at("pier").points()[0].visitors == 3.0);
}

TEST_CASE("shuffled rows ingest like sorted rows") {
    std::vector<std::string> rows;
    for (int i = 0; i < 10; ++i) {
        rows.push_back(fmt::format("2022-04-09T{:02d}:00+02:00,{},{}", i, i % 2 ? "pier" : "kurhaus", i * 3));
    }
    std::string sorted = "timestamp,zone_id,visitors\n";
    for (const auto& r : rows) sorted += r + "\n";
    std::mt19937 rng(3);
    std::shuffle(rows.begin(), rows.end(), rng);
    std::string shuffled = "timestamp,zone_id,visitors\n";
    for (const auto& r : rows) shuffled += r + "\n";
    CHECK(ingest(sorted) == ingest(shuffled));
}

TEST_CASE("ingest errors carry their kind and row") {
    std::string msg;
    CHECK(ingest_error("timestamp,zone_id,visitors\n2022-04-09T10:00+02:00,pier,1\nyesterday,pier,2\n", &msg) ==
          ErrorKind::parse);
    CHECK(msg.find("line 3") != std::string::npos);
    CHECK(ingest_error("timestamp,zone_id,visitors\n2022-04-09T10:00+02:00,pier,-1\n") == ErrorKind::validation);
    CHECK(ingest_error("timestamp,zone_id,visitors\n2022-04-09T10:00+02:00,pier,1\n2022-04-09T10:00+02:00,pier,2\n") ==
          ErrorKind::conflict);
    CHECK(ingest_error("timestamp,zone_id,visitors\n2022-04-09T10:00+02:00,pier,many\n") == ErrorKind::parse);
    CHECK(ingest_error("time,zone_id,visitors\n") == ErrorKind::parse);
}

TEST_CASE("metadata declares resolution and rejects mixed offsets") {
    const auto zones = ingest("# resolution: 1h\ntimestamp,zone_id,visitors\n"
                              "2022-04-09T10:00+02:00,pier,5\n2022-04-09T13:00+02:00,pier,7\n");
    CHECK(zones.at("pier").resolution() == kHour);
    CHECK(zones.at("pier").gap_count() == 2);
    CHECK(ingest_error("# timezone: +02:00\ntimestamp,zone_id,visitors\n"
                       "2022-04-09T10:00+02:00,pier,5\n2022-04-09T11:00+01:00,pier,7\n") == ErrorKind::validation);
    std::string msg;
    ingest_error("timestamp,zone_id,visitors\n2022-04-09T10:00+02:00,pier,5\n", &msg);
    CHECK(msg.find("resolution") != std::string::npos);
}

TEST_CASE("visits round-trip through the file format") {
    std::vector<double> v{0, 3, NAN, 12.5, 7};
    std::map<std::string, ZoneSeries> zones{
        {"pier", test::hourly("pier", "2022-04-09T10:00+02:00", v)},
        {"kurhaus", test::hourly("kurhaus", "2022-04-09T09:00+02:00", {1, 2})},
    };
    std::ostringstream out;
    write_visits(out, zones);
    const auto back = ingest(out.str());
    CHECK(back == zones);
    std::ostringstream again;
    write_visits(again, back);
    CHECK(again.str() == out.str());
}

TEST_CASE("weather round-trips and validates") {
    auto w = test::flat_weather("2022-04-09T00:00+02:00", 5, {12.25, 40, 0.5, 3.1, 0.2});
    std::ostringstream out;
    write_weather(out, w);
    std::istringstream in(out.str());
    CHECK(ingest_weather(in) == w);

    std::istringstream bad("timestamp,temp_c,precip_prob_pct,cloudiness,windspeed_ms,precip_mm\n"
                           "2022-04-09T00:00+02:00,10,140,1,1,0\n");
    CHECK_THROWS_AS(ingest_weather(bad), Error);
}

TEST_CASE("holidays and events") {
    std::istringstream h("# Dutch\n2022-04-27\n\n2022-12-25\n");
    const auto days = read_holidays(h);
    CHECK(days.size() == 2);
    CHECK(days.count(parse_date("2022-04-27")) == 1);

    EventCalendar ev{{parse_date("2022-07-01"), "beach_stadium"}};
    std::ostringstream out;
    write_events(out, ev);
    std::istringstream in(out.str());
    CHECK(read_events(in) == ev);
}
