#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "atp/core/geo.hpp"
#include "atp/preprocess/preprocess.hpp"
#include "atp/synth/synth.hpp"

using namespace atp;

namespace {

// Stops laid out west-to-east on a straight line, spacing_m apart.
std::vector<Stop> line_stops(int n, double spacing_m, double radius_m = 15.0,
                             double lat0 = 48.99, double lon0 = 1.91) {
  std::vector<Stop> stops;
  for (int i = 0; i < n; ++i) {
    Stop s;
    s.stop_id = "S" + std::to_string(i + 1);
    s.name = s.stop_id;
    offset_by_meters(lat0, lon0, spacing_m * i, 0.0, s.lat, s.lon);
    s.radius_m = radius_m;
    stops.push_back(s);
  }
  return stops;
}

GpsFix fix_at(const std::vector<Stop>& stops, double east_m, TimestampMs t, double speed_kmh,
              const std::string& vehicle = "V1") {
  GpsFix f;
  f.vehicle_id = vehicle;
  f.t = t;
  offset_by_meters(stops[0].lat, stops[0].lon, east_m, 0.0, f.lat, f.lon);
  f.speed_kmh = speed_kmh;
  return f;
}

Route line_route(const std::vector<Stop>& stops) {
  Route r;
  r.route_id = "R1";
  for (const auto& s : stops) r.stops.push_back(s.stop_id);
  return r;
}

}  // namespace

TEST_CASE("stationarity honors the speed channel and the jitter threshold") {
  PreprocessConfig speed_cfg;
  GpsFix a = fix_at(line_stops(1, 0), 0.0, 0, 0.0);
  GpsFix b = fix_at(line_stops(1, 0), 0.0, 5000, 0.0);
  CHECK(is_stationary(a, b, speed_cfg));
  b.speed_kmh = 3.0;
  CHECK_FALSE(is_stationary(a, b, speed_cfg));

  PreprocessConfig gps_cfg;
  gps_cfg.detection_mode = DetectionMode::kGpsOnly;
  gps_cfg.jitter_threshold_m = 2.0;
  GpsFix near = fix_at(line_stops(1, 0), 1.2, 5000, 3.0);
  CHECK(is_stationary(a, near, gps_cfg));
  GpsFix at_threshold = fix_at(line_stops(1, 0), 2.0, 5000, 3.0);
  CHECK_FALSE(is_stationary(a, at_threshold, gps_cfg));  // strict <

  b.speed_kmh.reset();
  CHECK_THROWS_AS((void)is_stationary(a, b, speed_cfg), std::runtime_error);
  GpsFix late = a;
  CHECK_THROWS_AS((void)is_stationary(b, late, speed_cfg), std::invalid_argument);
}

TEST_CASE("a hand-built trace yields the dwell/run/dwell pattern with exact durations") {
  const auto stops = line_stops(2, 300.0);
  const Route route = line_route(stops);
  std::vector<GpsFix> trace;
  // Parked at S1 for fixes t=0..20, rolling toward S2 from t=25, parked at
  // S2 t=120..130, rolling away from t=135. 30 fixes at a 5 s period.
  for (int t = 0; t <= 20; t += 5) trace.push_back(fix_at(stops, 0.0, t * 1000, 0.0));
  for (int t = 25; t <= 115; t += 5)
    trace.push_back(fix_at(stops, (t - 25) * 300.0 / 95.0, t * 1000, 11.4));
  for (int t = 120; t <= 130; t += 5) trace.push_back(fix_at(stops, 300.0, t * 1000, 0.0));
  for (int t = 135; t <= 145; t += 5)
    trace.push_back(fix_at(stops, 300.0 + (t - 130) * 3.0, t * 1000, 11.4));
  REQUIRE(trace.size() == 30);

  PreprocessConfig cfg;
  const EventStream out = detect_events(trace, route, stops, cfg);
  REQUIRE(out.events.size() == 3);
  CHECK(out.events[0].kind == EventKind::kDwell);
  CHECK(out.events[0].stop_id == "S1");
  CHECK(out.events[0].duration_s() == doctest::Approx(25.0).epsilon(1e-12));
  CHECK(out.events[1].kind == EventKind::kRun);
  CHECK(out.events[1].segment.key() == "S1->S2");
  CHECK(out.events[1].duration_s() == doctest::Approx(95.0).epsilon(1e-12));
  CHECK(out.events[2].kind == EventKind::kDwell);
  CHECK(out.events[2].stop_id == "S2");
  CHECK(out.events[2].duration_s() == doctest::Approx(15.0).epsilon(1e-12));
}

TEST_CASE("crossing a stop radius without stopping inserts a zero dwell") {
  const auto stops = line_stops(3, 300.0);
  const Route route = line_route(stops);
  std::vector<GpsFix> trace;
  for (int t = 0; t <= 10; t += 5) trace.push_back(fix_at(stops, 0.0, t * 1000, 0.0));
  // 5 m/s straight through S2's radius; 12 km/h within it.
  for (int t = 15; t <= 125; t += 5)
    trace.push_back(fix_at(stops, (t - 10) * 5.0, t * 1000, 18.0));
  for (int t = 130; t <= 140; t += 5) trace.push_back(fix_at(stops, 600.0, t * 1000, 0.0));
  trace.push_back(fix_at(stops, 615.0, 145000, 18.0));

  PreprocessConfig cfg;
  const EventStream out = detect_events(trace, route, stops, cfg);
  REQUIRE(out.events.size() == 5);
  CHECK(out.events[0].stop_id == "S1");
  CHECK(out.events[1].segment.key() == "S1->S2");
  CHECK(out.events[2].kind == EventKind::kDwell);
  CHECK(out.events[2].stop_id == "S2");
  CHECK(out.events[2].duration_s() == 0.0);
  CHECK(out.events[3].segment.key() == "S2->S3");
  CHECK(out.events[4].stop_id == "S3");
  // The pass instant lands when the vehicle is nearest S2: 300 m at 5 m/s
  // from the last parked fix at t=10.
  CHECK(std::abs(static_cast<double>(out.events[2].start) / 1000.0 - 70.0) < 1.0);
}

TEST_CASE("off-route and excluded fixes are dropped") {
  const auto stops = line_stops(2, 1000.0);
  const Route route = line_route(stops);
  PreprocessConfig cfg;
  ExclusionZone depot;
  offset_by_meters(stops[0].lat, stops[0].lon, -400.0, 0.0, depot.lat, depot.lon);
  depot.radius_m = 50.0;
  cfg.exclusion_zones.push_back(depot);

  std::vector<GpsFix> trace;
  trace.push_back(fix_at(stops, 500.0, 0, 10.0));  // on the chord
  GpsFix far_off = fix_at(stops, 500.0, 5000, 10.0);
  offset_by_meters(far_off.lat, far_off.lon, 0.0, 600.0, far_off.lat, far_off.lon);
  trace.push_back(far_off);  // 600 m from the chord, corridor 100 m
  trace.push_back(fix_at(stops, -400.0, 10000, 0.0));  // inside the depot zone

  const auto kept = exclude_off_route(trace, route, stops, cfg);
  REQUIRE(kept.size() == 1);
  CHECK(kept[0].t == 0);

  std::vector<GpsFix> depot_only(5, fix_at(stops, -400.0, 0, 0.0));
  for (int i = 0; i < 5; ++i) depot_only[i].t = i * 5000;
  const EventStream none =
      detect_events(exclude_off_route(depot_only, route, stops, cfg), route, stops, cfg);
  CHECK(none.events.empty());
}

TEST_CASE("overlapping stop radii resolve by route successor") {
  auto stops = line_stops(2, 300.0);  // S1, S2
  Stop c;
  c.stop_id = "S3";
  c.name = "S3";
  offset_by_meters(stops[0].lat, stops[0].lon, 600.0, 0.0, c.lat, c.lon);
  c.radius_m = 20.0;
  Stop d = c;
  d.stop_id = "S4";
  d.name = "S4";
  offset_by_meters(stops[0].lat, stops[0].lon, 610.0, 0.0, d.lat, d.lon);
  stops.push_back(c);
  stops.push_back(d);
  Route route = line_route(stops);

  GpsFix between = fix_at(stops, 605.0, 0, 0.0);  // inside both S3 and S4
  ResolveOutcome r = resolve_stop(between, route, stops, std::string("S2"));
  CHECK_FALSE(r.ambiguous);
  REQUIRE(r.stop_id.has_value());
  CHECK(*r.stop_id == "S3");

  r = resolve_stop(between, route, stops, std::string("S3"));
  REQUIRE(r.stop_id.has_value());
  CHECK(*r.stop_id == "S4");

  r = resolve_stop(between, route, stops, std::nullopt);
  CHECK(r.ambiguous);
  CHECK_FALSE(r.stop_id.has_value());

  GpsFix lone = fix_at(stops, 300.0, 0, 0.0);
  r = resolve_stop(lone, route, stops, std::nullopt);
  REQUIRE(r.stop_id.has_value());
  CHECK(*r.stop_id == "S2");

  GpsFix outside = fix_at(stops, 150.0, 0, 0.0);
  r = resolve_stop(outside, route, stops, std::string("S1"));
  CHECK_FALSE(r.stop_id.has_value());
  CHECK_FALSE(r.ambiguous);
}

TEST_CASE("stop order exceptions pin the successor in overlap zones") {
  auto stops = line_stops(3, 300.0);
  Route route = line_route(stops);
  route.stop_order_exceptions = {{"S1", "S3"}};
  RouteCycle cycle(route);
  REQUIRE(cycle.successor("S1").has_value());
  CHECK(*cycle.successor("S1") == "S3");
  REQUIRE(cycle.successor("S2").has_value());
  CHECK(*cycle.successor("S2") == "S3");
}

TEST_CASE("sampling rate changes are reported and slow portions discarded") {
  const auto stops = line_stops(1, 0.0);
  RateChangeConfig cfg;

  std::vector<GpsFix> steady;
  for (int i = 0; i < 720; ++i) steady.push_back(fix_at(stops, 0.0, i * 5000, 0.0));
  CHECK(detect_sampling_rate_change(steady, cfg).empty());

  std::vector<GpsFix> shifted = steady;  // 1 h at 5 s, then 30 s
  TimestampMs t = shifted.back().t;
  for (int i = 0; i < 120; ++i) {
    t += 30000;
    shifted.push_back(fix_at(stops, 0.0, t, 0.0));
  }
  const auto changes = detect_sampling_rate_change(shifted, cfg);
  REQUIRE(!changes.empty());
  const double transition_s = 720.0 * 5.0;
  const double change_s = static_cast<double>(changes.front().at) / 1000.0;
  CHECK(std::abs(change_s - transition_s) <= cfg.window * 30.0);
  CHECK(changes.front().old_period_s == doctest::Approx(5.0));
  CHECK(changes.front().new_period_s == doctest::Approx(30.0));

  const auto kept = discard_rate_changed(shifted, changes, cfg);
  CHECK(kept.size() < shifted.size());
  for (std::size_t i = 1; i < kept.size(); ++i)
    CHECK(static_cast<double>(kept[i].t - kept[i - 1].t) / 1000.0 < 29.0);

  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> jitter(-0.2, 0.2);
  std::vector<GpsFix> wobbly;
  double wt = 0.0;
  for (int i = 0; i < 600; ++i) {
    wobbly.push_back(
        fix_at(stops, 0.0, static_cast<TimestampMs>(std::llround(wt * 1000.0)), 0.0));
    wt += 5.0 + jitter(rng);
  }
  CHECK(detect_sampling_rate_change(wobbly, cfg).empty());
}

TEST_CASE("weather joins by floored hour with a bounded backward fallback") {
  EventStream stream;
  const TimestampMs d = parse_iso8601("2023-01-09T00:00:00Z");
  stream.events.push_back(Event::dwell("V1", "S1", d + 10 * kMsPerHour + 37 * kMsPerMinute,
                                       d + 10 * kMsPerHour + 38 * kMsPerMinute));
  stream.events.push_back(Event::dwell("V1", "S1", d + 12 * kMsPerHour + 15 * kMsPerMinute,
                                       d + 12 * kMsPerHour + 16 * kMsPerMinute));
  stream.events.push_back(Event::dwell("V1", "S1", d + 20 * kMsPerHour,
                                       d + 20 * kMsPerHour + kMsPerMinute));

  std::vector<WeatherRecord> weather;
  weather.push_back(WeatherRecord{d + 10 * kMsPerHour, 5.0, 0.0, 2.0});
  weather.push_back(WeatherRecord{d + 11 * kMsPerHour, 7.5, 0.3, 2.5});

  PreprocessConfig cfg;
  const EventStream joined = join_weather(stream, weather, cfg);
  REQUIRE(joined.has_weather());
  REQUIRE(joined.weather[0].has_value());
  CHECK(joined.weather[0]->temp_c == doctest::Approx(5.0));  // floor to hour 10
  REQUIRE(joined.weather[1].has_value());
  CHECK(joined.weather[1]->temp_c == doctest::Approx(7.5));  // hour 12 absent, hour 11 near
  CHECK_FALSE(joined.weather[2].has_value());                // nearest record 9 h back
}

namespace {

struct RecoveryStats {
  std::size_t truth_n = 0;
  std::size_t matched = 0;
  double max_abs_err_s = 0.0;
  std::vector<double> abs_errs_s;
  std::size_t truth_zero = 0;
  std::size_t detected_zero = 0;
  std::size_t zero_matched = 0;

  std::size_t within(double tol_s) const {
    std::size_t n = 0;
    for (double e : abs_errs_s) n += e <= tol_s + 1e-9 ? 1 : 0;
    return n;
  }
};

// Greedy per-vehicle alignment on (kind, key) with a start tolerance.
RecoveryStats align(const std::vector<Event>& truth, const std::vector<Event>& detected,
                    double start_tol_s) {
  RecoveryStats st;
  st.truth_n = truth.size();
  std::map<std::string, std::vector<const Event*>> tv, dv;
  for (const auto& e : truth) tv[e.vehicle_id].push_back(&e);
  for (const auto& e : detected) dv[e.vehicle_id].push_back(&e);
  for (auto& [v, tev] : tv) {
    auto& dev = dv[v];
    std::size_t i = 0, j = 0;
    while (i < tev.size() && j < dev.size()) {
      const Event* t = tev[i];
      const Event* e = dev[j];
      const std::string tk = t->kind == EventKind::kDwell ? t->stop_id : t->segment.key();
      const std::string dk = e->kind == EventKind::kDwell ? e->stop_id : e->segment.key();
      const double dt = std::abs(static_cast<double>(t->start - e->start)) / 1000.0;
      if (t->kind == e->kind && tk == dk && dt <= start_tol_s) {
        ++st.matched;
        st.abs_errs_s.push_back(std::abs(t->duration_s() - e->duration_s()));
        st.max_abs_err_s = std::max(st.max_abs_err_s, st.abs_errs_s.back());
        if (t->kind == EventKind::kDwell && t->duration_s() == 0.0 &&
            e->duration_s() == 0.0)
          ++st.zero_matched;
        ++i;
        ++j;
      } else if (e->start < t->start - static_cast<TimestampMs>(start_tol_s * 1000)) {
        ++j;
      } else {
        ++i;
      }
    }
  }
  for (const auto& e : truth)
    if (e.kind == EventKind::kDwell && e.duration_s() == 0.0) ++st.truth_zero;
  for (const auto& e : detected)
    if (e.kind == EventKind::kDwell && e.duration_s() == 0.0) ++st.detected_zero;
  return st;
}

SiteSpec brisk_site() {
  SiteSpec spec;
  spec.site_id = "unit";
  spec.n_stops = 5;
  spec.n_vehicles = 1;
  spec.days = 1;
  spec.stop_spacing_m = 300.0;
  spec.sampling_period_s = 3.0;
  spec.cruise_speed_kmh = 6.0;
  spec.accel_ms2 = 2.0;
  spec.p_zero = 0.3;
  spec.seed = 904;
  return spec;
}

std::vector<GpsFix> flatten(const SiteData& site) {
  std::vector<GpsFix> fixes;
  for (const auto& [v, trace] : site.traces) fixes.insert(fixes.end(), trace.begin(), trace.end());
  return fixes;
}

}  // namespace

TEST_CASE("noise-free speed-channel preprocessing recovers every event within one period") {
  SiteSpec spec = brisk_site();
  const SiteData site = generate_site(spec);
  PreprocessConfig cfg;
  const EventStream out =
      preprocess_traces(flatten(site), site.route, site.stops, site.weather, cfg);

  const RecoveryStats st = align(site.truth.events, out.events, 2.0 * spec.sampling_period_s);
  CHECK(st.truth_n > 100);
  CHECK(st.matched == st.truth_n);
  CHECK(out.events.size() == st.truth_n);
  CHECK(st.max_abs_err_s <= spec.sampling_period_s + 1e-9);

  // Zero-dwell soundness: exact zeros on both sides, one for one.
  CHECK(st.truth_zero > 10);
  CHECK(st.detected_zero == st.truth_zero);
  CHECK(st.zero_matched == st.truth_zero);
}

TEST_CASE("noisy gps-only preprocessing recovers events within two periods") {
  SiteSpec spec = brisk_site();
  spec.gps_noise_sigma_m = 0.5;
  spec.speed_channel = false;
  const SiteData site = generate_site(spec);
  PreprocessConfig cfg;
  cfg.detection_mode = DetectionMode::kGpsOnly;
  cfg.jitter_threshold_m = 2.0;  // noise sigma below one third of this
  const EventStream out =
      preprocess_traces(flatten(site), site.route, site.stops, site.weather, cfg);

  // Positioning-noise tails occasionally push one boundary a fix further
  // out, so the two-period bound is held at the 99th percentile rather
  // than the maximum.
  const RecoveryStats st = align(site.truth.events, out.events, 3.0 * spec.sampling_period_s);
  CHECK(st.matched == st.truth_n);
  CHECK(st.within(2.0 * spec.sampling_period_s) * 100 >= st.truth_n * 99);
  CHECK(st.max_abs_err_s <= 4.0 * spec.sampling_period_s);
}

TEST_CASE("detected streams alternate and tile time within each service block") {
  SiteSpec spec = brisk_site();
  spec.days = 2;
  spec.n_vehicles = 2;
  const SiteData site = generate_site(spec);
  PreprocessConfig cfg;
  const EventStream out =
      preprocess_traces(flatten(site), site.route, site.stops, site.weather, cfg);
  REQUIRE(!out.events.empty());

  RouteCycle cycle(site.route);
  std::map<std::string, std::vector<const Event*>> per_vehicle;
  for (const auto& e : out.events) per_vehicle[e.vehicle_id].push_back(&e);
  CHECK(per_vehicle.size() == 2);

  for (const auto& [v, events] : per_vehicle) {
    for (std::size_t k = 0; k + 1 < events.size(); ++k) {
      const Event& a = *events[k];
      const Event& b = *events[k + 1];
      CHECK(a.start <= b.start);
      if (a.kind == EventKind::kRun) {
        // Runs never touch: a dwell (possibly zero) sits between them.
        CHECK(b.kind == EventKind::kDwell);
        CHECK(a.segment.to_stop == b.stop_id);
        CHECK(a.end == b.start);
      } else if (b.kind == EventKind::kRun) {
        CHECK(b.segment.from_stop == a.stop_id);
        REQUIRE(cycle.successor(a.stop_id).has_value());
        CHECK(*cycle.successor(a.stop_id) == b.segment.to_stop);
        CHECK(a.end == b.start);
      } else {
        // Dwell after dwell only across a service gap.
        CHECK(static_cast<double>(b.start - a.end) / 1000.0 > cfg.max_gap_s);
      }
    }
  }
}
