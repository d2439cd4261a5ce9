#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "atp/core/geo.hpp"
#include "atp/core/time.hpp"
#include "atp/synth/synth.hpp"

using namespace atp;

namespace {

SiteSpec tiny_site() {
  SiteSpec spec;
  spec.site_id = "tiny";
  spec.n_stops = 4;
  spec.n_vehicles = 2;
  spec.days = 2;
  spec.service_hours = 4;
  spec.sampling_period_s = 2.0;
  spec.cruise_speed_kmh = 15.0;
  spec.p_zero = 0.2;
  spec.seed = 77;
  return spec;
}

}  // namespace

TEST_CASE("presets pin the three site families") {
  const SiteSpec a = preset("linkoping_like");
  CHECK(a.n_stops == 15);
  CHECK(a.n_vehicles == 3);
  CHECK(a.days == 7);
  CHECK(a.stop_spacing_m == 300.0);
  CHECK(a.cruise_speed_kmh == 18.0);
  CHECK(a.sampling_period_s == 1.0);
  CHECK(a.p_zero == 0.3);
  REQUIRE(a.dwell_modes.size() == 2);
  CHECK(a.dwell_modes[0].mean_s == 25.0);
  CHECK(a.dwell_modes[1].mean_s == 35.0);
  CHECK(a.zero_pattern == ZeroPattern::kStopHourGrid);
  CHECK(a.stop_linked_modes);
  CHECK(a.speed_channel);

  const SiteSpec b = preset("lesmureaux_like");
  CHECK(b.n_stops == 7);
  CHECK(b.n_vehicles == 2);
  CHECK(b.stop_spacing_m == 200.0);
  CHECK(b.cruise_speed_kmh == 6.0);
  CHECK(b.sampling_period_s == 3.0);
  CHECK(b.p_zero == 0.25);
  REQUIRE(b.dwell_modes.size() == 1);
  CHECK(b.dwell_modes[0].mean_s == 25.0);
  CHECK(!b.speed_channel);

  const SiteSpec c = preset("tampere_like");
  CHECK(c.n_stops == 7);
  CHECK(c.n_vehicles == 2);
  CHECK(c.cruise_speed_kmh == 20.0);
  CHECK(c.sampling_period_s == 1.0);
  CHECK(c.p_zero == 0.6);
  CHECK(c.zero_pattern == ZeroPattern::kBernoulli);
  CHECK(c.speed_channel);

  CHECK_THROWS_AS((void)preset("oulu_like"), std::invalid_argument);
}

TEST_CASE("a generated site has coherent structure") {
  const SiteSpec spec = tiny_site();
  const SiteData site = generate_site(spec);

  REQUIRE(site.stops.size() == 4);
  std::set<std::string> ids;
  for (const auto& s : site.stops) ids.insert(s.stop_id);
  CHECK(ids.size() == 4);

  // The route visits every stop once and closes the loop.
  REQUIRE(site.route.stops.size() == 5);
  CHECK(site.route.stops.front() == site.route.stops.back());
  CHECK(site.route.is_loop());

  // Consecutive stops sit one chord apart.
  for (std::size_t i = 0; i + 1 < site.stops.size(); ++i) {
    const double d = haversine_m(site.stops[i].lat, site.stops[i].lon, site.stops[i + 1].lat,
                                 site.stops[i + 1].lon);
    CHECK(d == doctest::Approx(spec.stop_spacing_m).epsilon(1e-3));
  }

  REQUIRE(site.traces.size() == 2);
  for (const auto& [vehicle, fixes] : site.traces) {
    REQUIRE(!fixes.empty());
    for (std::size_t i = 1; i < fixes.size(); ++i) CHECK(fixes[i].t > fixes[i - 1].t);
    for (const auto& f : fixes) {
      CHECK(f.vehicle_id == vehicle);
      REQUIRE(f.speed_kmh.has_value());
      CHECK(*f.speed_kmh >= 0.0);
    }
  }

  // Truth events tile per vehicle: dwell, run, dwell, run, ... with matching
  // endpoints, and they alternate in kind.
  std::map<std::string, std::vector<Event>> by_vehicle;
  for (const auto& e : site.truth.events) by_vehicle[e.vehicle_id].push_back(e);
  REQUIRE(by_vehicle.size() == 2);
  for (const auto& [vehicle, events] : by_vehicle) {
    for (std::size_t i = 1; i < events.size(); ++i) {
      CHECK(events[i].start >= events[i - 1].end);
      if (events[i].start == events[i - 1].end)
        CHECK(events[i].kind != events[i - 1].kind);
    }
  }

  // Weather covers every service hour of every event.
  std::set<TimestampMs> hours;
  for (const auto& w : site.weather) hours.insert(w.hour);
  for (const auto& e : site.truth.events) CHECK(hours.count(floor_to_hour(e.start)) == 1);
}

TEST_CASE("generation is deterministic in the seed") {
  const SiteSpec spec = tiny_site();
  const SiteData a = generate_site(spec);
  const SiteData b = generate_site(spec);

  REQUIRE(a.truth.events.size() == b.truth.events.size());
  for (std::size_t i = 0; i < a.truth.events.size(); ++i) {
    CHECK(a.truth.events[i].start == b.truth.events[i].start);
    CHECK(a.truth.events[i].end == b.truth.events[i].end);
  }
  for (const auto& [vehicle, fixes] : a.traces) {
    const auto& other = b.traces.at(vehicle);
    REQUIRE(fixes.size() == other.size());
    for (std::size_t i = 0; i < fixes.size(); ++i) {
      CHECK(fixes[i].lat == other[i].lat);
      CHECK(fixes[i].lon == other[i].lon);
      CHECK(fixes[i].t == other[i].t);
    }
  }

  SiteSpec reseeded = spec;
  reseeded.seed = 78;
  const SiteData c = generate_site(reseeded);
  bool differs = a.truth.events.size() != c.truth.events.size();
  for (std::size_t i = 0; !differs && i < a.truth.events.size(); ++i)
    differs = a.truth.events[i].start != c.truth.events[i].start ||
              a.truth.events[i].end != c.truth.events[i].end;
  CHECK(differs);
}

TEST_CASE("a vehicle that cannot brake within a chord is rejected") {
  SiteSpec spec = tiny_site();
  spec.stop_spacing_m = 100.0;
  spec.cruise_speed_kmh = 40.0;
  spec.accel_ms2 = 0.5;
  CHECK_THROWS_AS((void)generate_site(spec), std::invalid_argument);
}

TEST_CASE("dwell draws follow the truncated mixture and the zero rate") {
  SiteSpec spec = tiny_site();
  spec.p_zero = 0.3;
  spec.zero_pattern = ZeroPattern::kBernoulli;
  spec.dwell_modes = {DwellMode{20.0, 2.0, 0.5}, DwellMode{42.0, 2.0, 0.5}};

  const auto skip_hours = build_skip_hours(spec);
  std::mt19937_64 rng(spec.seed);
  int zeros = 0;
  std::vector<double> low, high;
  const int n = 20000;
  for (int i = 0; i < n; ++i) {
    const double d = sample_dwell_s(spec, i % spec.n_stops, i % spec.service_hours, rng,
                                    skip_hours);
    if (d == 0.0) {
      ++zeros;
      continue;
    }
    CHECK(d >= 1.0);  // nonzero dwells are truncated upward to one second
    (d < 31.0 ? low : high).push_back(d);
  }
  const double zero_rate = static_cast<double>(zeros) / n;
  CHECK(zero_rate == doctest::Approx(0.3).epsilon(0.07));

  const auto mean_of = [](const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
  };
  REQUIRE(low.size() > 1000);
  REQUIRE(high.size() > 1000);
  CHECK(std::abs(mean_of(low) - 20.0) < 0.5);
  CHECK(std::abs(mean_of(high) - 42.0) < 0.5);
  // Balanced weights put comparable mass on both modes.
  const double share = static_cast<double>(low.size()) / static_cast<double>(low.size() + high.size());
  CHECK(share > 0.4);
  CHECK(share < 0.6);
}

TEST_CASE("stop-linked modes pin each stop to one mixture component") {
  SiteSpec spec = tiny_site();
  spec.p_zero = 0.0;
  spec.stop_linked_modes = true;
  spec.dwell_modes = {DwellMode{15.0, 1.0, 1.0}, DwellMode{40.0, 1.0, 1.0}};

  const auto skip_hours = build_skip_hours(spec);
  std::mt19937_64 rng(9);
  for (int stop = 0; stop < spec.n_stops; ++stop) {
    double sum = 0.0;
    const int n = 4000;
    for (int i = 0; i < n; ++i) sum += sample_dwell_s(spec, stop, 0, rng, skip_hours);
    const double expect = stop % 2 == 0 ? 15.0 : 40.0;
    CHECK(std::abs(sum / n - expect) < 0.5);
  }
}

TEST_CASE("the skip grid zeroes fixed stop-hour cells at the target rate") {
  SiteSpec spec = tiny_site();
  spec.p_zero = 0.25;
  spec.service_hours = 8;
  spec.zero_pattern = ZeroPattern::kStopHourGrid;

  const auto skip_hours = build_skip_hours(spec);
  REQUIRE(skip_hours.size() == static_cast<std::size_t>(spec.n_stops));
  for (const auto& hours : skip_hours) {
    CHECK(hours.size() == 2);  // round(0.25 * 8)
    for (int h : hours) {
      CHECK(h >= 0);
      CHECK(h < spec.service_hours);
    }
  }

  std::mt19937_64 rng(3);
  for (int stop = 0; stop < spec.n_stops; ++stop) {
    for (int hour = 0; hour < spec.service_hours; ++hour) {
      const bool skipped = std::find(skip_hours[stop].begin(), skip_hours[stop].end(), hour) !=
                           skip_hours[stop].end();
      for (int rep = 0; rep < 20; ++rep) {
        const double d = sample_dwell_s(spec, stop, hour, rng, skip_hours);
        if (skipped)
          CHECK(d == 0.0);
        else
          CHECK(d > 0.0);
      }
    }
  }

  // Under bernoulli the table is empty per stop.
  spec.zero_pattern = ZeroPattern::kBernoulli;
  for (const auto& hours : build_skip_hours(spec)) CHECK(hours.empty());
}

TEST_CASE("noise-free traces obey the sampled kinematics") {
  SiteSpec spec = tiny_site();
  spec.days = 1;
  spec.n_vehicles = 1;
  spec.gps_noise_sigma_m = 0.0;
  spec.run_speed_noise = 0.0;
  const SiteData site = generate_site(spec);

  const auto& fixes = site.traces.begin()->second;
  REQUIRE(fixes.size() > 100);
  double worst = 0.0;
  for (std::size_t i = 0; i + 1 < fixes.size(); ++i) {
    const double dt = static_cast<double>(fixes[i + 1].t - fixes[i].t) / 1000.0;
    if (dt > spec.sampling_period_s + 1e-9) continue;  // day boundary
    const double dist = haversine_m(fixes[i].lat, fixes[i].lon, fixes[i + 1].lat,
                                    fixes[i + 1].lon);
    const double travel = 0.5 * (*fixes[i].speed_kmh + *fixes[i + 1].speed_kmh) / 3.6 * dt;
    worst = std::max(worst, std::abs(dist - travel));
  }
  // Trapezoidal speed integration matches the chord geometry closely at
  // this period; corners of the speed profile account for the tolerance.
  CHECK(worst < spec.cruise_speed_kmh / 3.6 * spec.sampling_period_s * 0.5);
}

TEST_CASE("every service day starts and ends with a dwell on the grid") {
  const SiteSpec spec = tiny_site();
  const SiteData site = generate_site(spec);
  const std::int64_t period_ms =
      static_cast<std::int64_t>(spec.sampling_period_s * 1000.0);

  std::map<std::string, std::map<TimestampMs, std::vector<const Event*>>> by_vehicle_day;
  for (const auto& e : site.truth.events)
    by_vehicle_day[e.vehicle_id][e.start - (e.start % kMsPerDay)].push_back(&e);

  for (const auto& [vehicle, days] : by_vehicle_day) {
    REQUIRE(days.size() == static_cast<std::size_t>(spec.days));
    for (const auto& [day, events] : days) {
      CHECK(events.front()->kind == EventKind::kDwell);
      CHECK(events.front()->duration_s() > 0.0);
      CHECK(events.back()->kind == EventKind::kDwell);
      CHECK(events.back()->duration_s() > 0.0);
      // The day's final dwell end lands on the sampling grid so the last
      // fix of the day observes it.
      const TimestampMs day_start = events.front()->start;
      CHECK((events.back()->end - day_start) % period_ms == 0);
    }
  }
}
