#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <random>
#include <set>

#include "atp/core/geo.hpp"
#include "atp/core/rng.hpp"
#include "atp/core/time.hpp"
#include "atp/core/types.hpp"

using namespace atp;

TEST_CASE("haversine matches hand-computed distances") {
  CHECK(haversine_m(48.99, 1.91, 48.99, 1.91) == 0.0);
  CHECK(std::abs(haversine_m(0.0, 0.0, 0.0, 1.0) - 111194.93) < 0.01);
  CHECK(std::abs(haversine_m(90.0, 0.0, -90.0, 0.0) - 20015086.8) < 0.1);
}

TEST_CASE("haversine is symmetric and satisfies the triangle inequality") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> lat(-80.0, 80.0);
  std::uniform_real_distribution<double> lon(-180.0, 180.0);
  for (int i = 0; i < 200; ++i) {
    const double a_lat = lat(rng), a_lon = lon(rng);
    const double b_lat = lat(rng), b_lon = lon(rng);
    const double c_lat = lat(rng), c_lon = lon(rng);
    const double ab = haversine_m(a_lat, a_lon, b_lat, b_lon);
    const double ba = haversine_m(b_lat, b_lon, a_lat, a_lon);
    const double bc = haversine_m(b_lat, b_lon, c_lat, c_lon);
    const double ac = haversine_m(a_lat, a_lon, c_lat, c_lon);
    CHECK(std::abs(ab - ba) < 1e-6);
    CHECK(ac <= ab + bc + 1e-6);
    CHECK(ab >= 0.0);
  }
}

TEST_CASE("stop membership is boundary inclusive") {
  Stop s;
  s.stop_id = "S";
  s.lat = 58.41;
  s.lon = 15.62;
  double p_lat = 0.0, p_lon = 0.0;
  offset_by_meters(s.lat, s.lon, 12.0, 0.0, p_lat, p_lon);
  s.radius_m = haversine_m(s.lat, s.lon, p_lat, p_lon);
  CHECK(within_stop_radius(p_lat, p_lon, s));
  s.radius_m *= 0.999;
  CHECK_FALSE(within_stop_radius(p_lat, p_lon, s));
}

TEST_CASE("local meter offsets round-trip") {
  const double lat0 = 61.5, lon0 = 23.77;
  double lat1 = 0.0, lon1 = 0.0;
  offset_by_meters(lat0, lon0, 130.0, -75.0, lat1, lon1);
  double east = 0.0, north = 0.0;
  en_offset_m(lat0, lon0, lat1, lon1, east, north);
  CHECK(std::abs(east - 130.0) < 0.01);
  CHECK(std::abs(north + 75.0) < 0.01);
  CHECK(std::abs(haversine_m(lat0, lon0, lat1, lon1) - std::hypot(130.0, 75.0)) < 0.05);
}

TEST_CASE("point-to-chord distance handles interior and endpoint cases") {
  const double lat0 = 48.99, lon0 = 1.91;
  double b_lat = 0.0, b_lon = 0.0;
  offset_by_meters(lat0, lon0, 1000.0, 0.0, b_lat, b_lon);
  double mid_lat = 0.0, mid_lon = 0.0;
  offset_by_meters(lat0, lon0, 500.0, 600.0, mid_lat, mid_lon);
  CHECK(std::abs(point_to_chord_m(mid_lat, mid_lon, lat0, lon0, b_lat, b_lon) - 600.0) < 1.0);
  double beyond_lat = 0.0, beyond_lon = 0.0;
  offset_by_meters(lat0, lon0, 1300.0, 0.0, beyond_lat, beyond_lon);
  CHECK(std::abs(point_to_chord_m(beyond_lat, beyond_lon, lat0, lon0, b_lat, b_lon) - 300.0) <
        1.0);
  CHECK(point_to_chord_m(lat0, lon0, lat0, lon0, b_lat, b_lon) < 1e-6);
}

TEST_CASE("time encoding hits the cardinal points") {
  const TimestampMs monday_midnight = from_civil(2023, 1, 9);
  CHECK(day_of_week(monday_midnight) == 0);
  TimeEncoding e = encode_time(monday_midnight);
  CHECK(std::abs(e.tod_sin - 0.0) < 1e-12);
  CHECK(std::abs(e.tod_cos - 1.0) < 1e-12);
  CHECK(std::abs(e.dow_sin - 0.0) < 1e-12);
  CHECK(std::abs(e.dow_cos - 1.0) < 1e-12);

  e = encode_time(from_civil(2023, 1, 9, 6));
  CHECK(std::abs(e.tod_sin - 1.0) < 1e-12);
  CHECK(std::abs(e.tod_cos - 0.0) < 1e-12);

  e = encode_time(from_civil(2023, 1, 9, 12));
  CHECK(std::abs(e.tod_sin - 0.0) < 1e-12);
  CHECK(std::abs(e.tod_cos + 1.0) < 1e-12);

  // Sunday, six days in: the day-of-week phase is 2*pi*6/7.
  e = encode_time(from_civil(2023, 1, 15, 3));
  const double phase = 2.0 * M_PI * 6.0 / 7.0;
  CHECK(std::abs(e.dow_sin - std::sin(phase)) < 1e-12);
  CHECK(std::abs(e.dow_cos - std::cos(phase)) < 1e-12);
}

TEST_CASE("time encoding stays on the unit circle") {
  std::mt19937_64 rng(11);
  std::uniform_int_distribution<std::int64_t> dist(0, 4102444800000LL);  // through 2100
  for (int i = 0; i < 500; ++i) {
    const TimeEncoding e = encode_time(dist(rng));
    CHECK(std::abs(e.tod_sin * e.tod_sin + e.tod_cos * e.tod_cos - 1.0) < 1e-12);
    CHECK(std::abs(e.dow_sin * e.dow_sin + e.dow_cos * e.dow_cos - 1.0) < 1e-12);
  }
}

TEST_CASE("civil time helpers agree with each other") {
  CHECK(parse_iso_date("2023-01-09") == from_civil(2023, 1, 9));
  CHECK(from_civil(1970, 1, 1) == 0);
  CHECK(from_civil(2023, 1, 9, 8, 30, 15, 250) ==
        parse_iso8601("2023-01-09T08:30:15.250Z"));
  CHECK(hour_of_day(from_civil(2023, 1, 9, 23, 59, 59)) == 23);
  CHECK(seconds_of_day(from_civil(2023, 1, 9, 8)) == doctest::Approx(28800.0));
  CHECK(floor_to_hour(from_civil(2023, 6, 5, 10, 37, 12, 500)) == from_civil(2023, 6, 5, 10));
  CHECK(day_of_week(from_civil(2023, 1, 15)) == 6);  // Sunday
  CHECK(day_of_week(from_civil(2023, 1, 16)) == 0);  // next Monday
}

TEST_CASE("ISO-8601 strings round-trip through parse and format") {
  for (const char* s : {"2023-01-09T08:00:00Z", "1999-12-31T23:59:59Z",
                        "2023-01-09T08:30:15.250Z", "2024-02-29T12:00:00Z"}) {
    CHECK(format_iso8601(parse_iso8601(s)) == s);
  }
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<std::int64_t> dist(0, 4102444800000LL);
  for (int i = 0; i < 300; ++i) {
    const TimestampMs t = dist(rng);
    CHECK(parse_iso8601(format_iso8601(t)) == t);
  }
}

TEST_CASE("malformed timestamps are rejected") {
  CHECK_THROWS_AS((void)parse_iso8601("2023-01-09 08:00:00Z"), std::invalid_argument);
  CHECK_THROWS_AS((void)parse_iso8601("2023-13-09T08:00:00Z"), std::invalid_argument);
  CHECK_THROWS_AS((void)parse_iso8601("2023-01-09T08:00:00"), std::invalid_argument);
  CHECK_THROWS_AS((void)parse_iso8601("not a time"), std::invalid_argument);
  CHECK_THROWS_AS((void)parse_iso_date("2023/01/09"), std::invalid_argument);
}

TEST_CASE("event factories enforce their invariants") {
  const Event d = Event::dwell("V1", "S1", 1000, 26000);
  CHECK(d.duration_s() == doctest::Approx(25.0));
  CHECK(d.kind == EventKind::kDwell);
  const Event r = Event::run("V1", Segment{"S1", "S2"}, 26000, 121000);
  CHECK(r.duration_s() == doctest::Approx(95.0));
  CHECK(r.segment.key() == "S1->S2");
  CHECK_THROWS_AS((void)Event::dwell("V1", "S1", 2000, 1000), std::invalid_argument);
  CHECK_THROWS_AS((void)Event::dwell("", "S1", 0, 1), std::invalid_argument);
  CHECK_THROWS_AS((void)Event::run("V1", Segment{"", "S2"}, 0, 1), std::invalid_argument);
  CHECK(Event::dwell("V1", "S1", 5000, 5000).duration_s() == 0.0);
}

TEST_CASE("route loop detection keys off the duplicate terminal stop") {
  Route loop;
  loop.stops = {"A", "B", "C", "A"};
  CHECK(loop.is_loop());
  Route line;
  line.stops = {"A", "B", "C"};
  CHECK_FALSE(line.is_loop());
}

TEST_CASE("derived seeds separate streams deterministically") {
  CHECK(derive_seed(42, 1) == derive_seed(42, 1));
  CHECK(derive_seed(42, 1) != derive_seed(42, 2));
  CHECK(derive_seed(42, 1) != derive_seed(43, 1));
  std::set<std::uint64_t> seen;
  for (std::uint64_t s = 0; s < 1000; ++s) seen.insert(derive_seed(1234, s));
  CHECK(seen.size() == 1000);
}
