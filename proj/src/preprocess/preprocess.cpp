#include "atp/preprocess/preprocess.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <set>
#include <stdexcept>

#include "atp/core/geo.hpp"

namespace atp {

namespace {

const Stop& stop_by_id(const std::vector<Stop>& stops, const std::string& id) {
  for (const auto& s : stops)
    if (s.stop_id == id) return s;
  throw std::invalid_argument("route references unknown stop '" + id + "'");
}

bool in_exclusion_zone(const GpsFix& fix, const std::vector<ExclusionZone>& zones) {
  for (const auto& z : zones)
    if (haversine_m(fix.lat, fix.lon, z.lat, z.lon) <= z.radius_m) return true;
  return false;
}

double median(std::vector<double> v) {
  if (v.empty()) throw std::invalid_argument("median of empty range");
  const std::size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + mid, v.end());
  double hi = v[mid];
  if (v.size() % 2 == 1) return hi;
  std::nth_element(v.begin(), v.begin() + mid - 1, v.end());
  return (v[mid - 1] + hi) / 2.0;
}

}  // namespace

RouteCycle::RouteCycle(const Route& route) {
  if (route.stops.size() < 2) throw std::invalid_argument("route needs at least two stops");
  stops_ = route.stops;
  if (route.is_loop()) stops_.pop_back();
  for (std::size_t i = 0; i < stops_.size(); ++i) {
    if (!index_.emplace(stops_[i], static_cast<int>(i)).second)
      throw std::invalid_argument("route revisits stop '" + stops_[i] +
                                  "' other than to close the loop");
  }
  for (const auto& seq : route.stop_order_exceptions)
    for (std::size_t i = 0; i + 1 < seq.size(); ++i) overrides_[seq[i]] = seq[i + 1];
}

bool RouteCycle::contains(const std::string& stop_id) const { return index_.count(stop_id) > 0; }

std::optional<std::string> RouteCycle::successor(const std::string& from) const {
  if (auto it = overrides_.find(from); it != overrides_.end()) return it->second;
  auto it = index_.find(from);
  if (it == index_.end()) return std::nullopt;
  return stops_[(it->second + 1) % stops_.size()];
}

std::optional<std::string> RouteCycle::nearest_forward(
    const std::string& from, const std::vector<std::string>& candidates) const {
  if (!contains(from)) return std::nullopt;
  std::set<std::string> want(candidates.begin(), candidates.end());
  std::string cur = from;
  for (std::size_t step = 0; step < stops_.size(); ++step) {
    auto next = successor(cur);
    if (!next) return std::nullopt;
    if (want.count(*next)) return *next;
    cur = *next;
  }
  return std::nullopt;
}

bool is_stationary(const GpsFix& prev, const GpsFix& cur, const PreprocessConfig& config) {
  if (cur.t <= prev.t) throw std::invalid_argument("fixes out of order in stationarity test");
  if (config.detection_mode == DetectionMode::kSpeedAndGps) {
    if (!cur.speed_kmh.has_value())
      throw std::runtime_error("speed_and_gps detection selected but the trace has no speed");
    return *cur.speed_kmh == 0.0;
  }
  return haversine_m(prev.lat, prev.lon, cur.lat, cur.lon) < config.jitter_threshold_m;
}

std::vector<GpsFix> exclude_off_route(const std::vector<GpsFix>& trace, const Route& route,
                                      const std::vector<Stop>& stops,
                                      const PreprocessConfig& config) {
  std::vector<std::pair<const Stop*, const Stop*>> chords;
  for (std::size_t i = 0; i + 1 < route.stops.size(); ++i)
    chords.emplace_back(&stop_by_id(stops, route.stops[i]),
                        &stop_by_id(stops, route.stops[i + 1]));
  std::vector<GpsFix> kept;
  kept.reserve(trace.size());
  for (const auto& fix : trace) {
    if (in_exclusion_zone(fix, config.exclusion_zones)) continue;
    double best = std::numeric_limits<double>::infinity();
    for (const auto& [a, b] : chords)
      best = std::min(best, point_to_chord_m(fix.lat, fix.lon, a->lat, a->lon, b->lat, b->lon));
    if (best <= config.corridor_m) kept.push_back(fix);
  }
  return kept;
}

ResolveOutcome resolve_stop(const GpsFix& fix, const Route& route,
                            const std::vector<Stop>& stops,
                            const std::optional<std::string>& last_visited) {
  RouteCycle cycle(route);
  std::vector<std::string> hits;
  for (const auto& s : stops)
    if (cycle.contains(s.stop_id) && within_stop_radius(fix.lat, fix.lon, s)) hits.push_back(s.stop_id);
  if (hits.empty()) return {};
  if (hits.size() == 1) return {hits[0], false};
  if (last_visited) {
    if (auto pick = cycle.nearest_forward(*last_visited, hits)) return {*pick, false};
  }
  return {std::nullopt, true};
}

std::vector<RateChange> detect_sampling_rate_change(const std::vector<GpsFix>& trace,
                                                    const RateChangeConfig& config) {
  std::vector<RateChange> out;
  const int w = config.window;
  if (static_cast<int>(trace.size()) < w + 1) return out;
  std::vector<double> deltas;
  deltas.reserve(trace.size() - 1);
  for (std::size_t i = 0; i + 1 < trace.size(); ++i)
    deltas.push_back(static_cast<double>(trace[i + 1].t - trace[i].t) / 1000.0);
  auto window_median = [&](std::size_t end_idx) {
    std::vector<double> win(deltas.begin() + (end_idx + 1 - w), deltas.begin() + end_idx + 1);
    return median(std::move(win));
  };
  double base = window_median(static_cast<std::size_t>(w) - 1);
  for (std::size_t j = w; j < deltas.size(); ++j) {
    const double m = window_median(j);
    if (std::abs(m - base) / base > config.tolerance) {
      out.push_back(RateChange{trace[j + 1].t, base, m});
      base = m;
    }
  }
  return out;
}

std::vector<GpsFix> discard_rate_changed(const std::vector<GpsFix>& trace,
                                         const std::vector<RateChange>& changes,
                                         const RateChangeConfig& config) {
  if (changes.empty() || config.policy == "keep_all") return trace;
  // Split at change instants, keep only the fastest-sampled segments.
  std::vector<std::pair<std::size_t, std::size_t>> segments;
  std::size_t begin = 0;
  for (const auto& c : changes) {
    std::size_t end = begin;
    while (end < trace.size() && trace[end].t < c.at) ++end;
    if (end > begin) segments.emplace_back(begin, end);
    begin = end;
  }
  if (begin < trace.size()) segments.emplace_back(begin, trace.size());

  std::vector<double> periods;
  for (const auto& [a, b] : segments) {
    std::vector<double> d;
    for (std::size_t i = a; i + 1 < b; ++i)
      d.push_back(static_cast<double>(trace[i + 1].t - trace[i].t) / 1000.0);
    periods.push_back(d.empty() ? std::numeric_limits<double>::infinity() : median(std::move(d)));
  }

  // The rolling median reports a change only after half a window of new
  // periods, so each boundary sits late; hand tail fixes whose spacing
  // matches the next segment's period over to it.
  const auto delta_s = [&](std::size_t i) {
    return static_cast<double>(trace[i + 1].t - trace[i].t) / 1000.0;
  };
  for (std::size_t s = 0; s + 1 < segments.size(); ++s) {
    for (int moved = 0; moved < config.window; ++moved) {
      const std::size_t b = segments[s].second;
      if (b <= segments[s].first + 1) break;
      const double d = delta_s(b - 2);
      if (std::abs(d - periods[s + 1]) >= std::abs(d - periods[s])) break;
      segments[s].second = b - 1;
      segments[s + 1].first = b - 1;
    }
  }
  const double fastest = *std::min_element(periods.begin(), periods.end());
  std::vector<GpsFix> kept;
  for (std::size_t s = 0; s < segments.size(); ++s)
    if (periods[s] <= fastest * (1.0 + config.tolerance))
      kept.insert(kept.end(), trace.begin() + segments[s].first,
                  trace.begin() + segments[s].second);
  return kept;
}

namespace {

struct DwellInterval {
  std::size_t first_fix = 0;  // index of the first fix inside
  std::size_t end_fix = 0;    // index of the first fix after (== last inside for trailing)
  double lat = 0.0;           // representative position
  double lon = 0.0;
  TimestampMs start = 0;
  TimestampMs end = 0;
};

// Maximal zero-speed runs.
std::vector<DwellInterval> stationary_intervals_speed(const std::vector<GpsFix>& chain) {
  std::vector<DwellInterval> out;
  std::size_t i = 0;
  while (i < chain.size()) {
    if (!chain[i].speed_kmh.has_value())
      throw std::runtime_error("speed_and_gps detection selected but the trace has no speed");
    if (*chain[i].speed_kmh != 0.0) {
      ++i;
      continue;
    }
    std::size_t j = i;
    double lat = 0.0, lon = 0.0;
    while (j < chain.size() && *chain[j].speed_kmh == 0.0) {
      lat += chain[j].lat;
      lon += chain[j].lon;
      ++j;
    }
    DwellInterval d;
    d.first_fix = i;
    d.end_fix = j;
    d.lat = lat / static_cast<double>(j - i);
    d.lon = lon / static_cast<double>(j - i);
    d.start = chain[i].t;
    d.end = (j < chain.size()) ? chain[j].t : chain[j - 1].t;
    out.push_back(d);
    i = j;
  }
  return out;
}

// Stay-point clusters: fixes within the jitter threshold of the running
// centroid, with departure confirmed by two consecutive outside fixes so a
// single noisy fix cannot split a dwell. The dwell ends at the first
// confirmed outside fix.
std::vector<DwellInterval> stationary_intervals_gps(const std::vector<GpsFix>& chain,
                                                    double threshold_m) {
  std::vector<DwellInterval> out;
  std::size_t i = 0;
  while (i < chain.size()) {
    // A fix is stationary when the displacement from its predecessor is
    // below the jitter threshold; the chain's first fix counts when the
    // displacement to its successor is. The braking tail before a stop moves
    // fast enough that its last fix never seeds the cluster.
    const bool seed =
        (i > 0) ? haversine_m(chain[i - 1].lat, chain[i - 1].lon, chain[i].lat,
                              chain[i].lon) < threshold_m
                : (chain.size() > 1 && haversine_m(chain[0].lat, chain[0].lon, chain[1].lat,
                                                   chain[1].lon) < threshold_m);
    if (!seed) {
      ++i;
      continue;
    }
    double lat = chain[i].lat;
    double lon = chain[i].lon;
    std::size_t members = 1;
    std::size_t last_inside = i;
    std::size_t first_outside = chain.size();
    std::size_t j = i + 1;
    int misses = 0;
    while (j < chain.size()) {
      const double d =
          haversine_m(chain[j].lat, chain[j].lon, lat / members, lon / members);
      if (d < threshold_m) {
        lat += chain[j].lat;
        lon += chain[j].lon;
        ++members;
        last_inside = j;
        misses = 0;
      } else {
        if (misses == 0) first_outside = j;
        if (++misses >= 2) break;
      }
      ++j;
    }
    if (misses < 2) first_outside = chain.size();  // trailing cluster
    DwellInterval d;
    d.first_fix = i;
    d.end_fix = std::min(first_outside, chain.size());
    d.lat = lat / members;
    d.lon = lon / members;
    d.start = chain[i].t;
    d.end = (first_outside < chain.size()) ? chain[first_outside].t
                                           : chain[last_inside].t;
    out.push_back(d);
    i = std::max(last_inside + 1, first_outside == chain.size() ? last_inside + 1 : first_outside);
  }
  return out;
}

struct StopDwell {
  std::string stop_id;
  TimestampMs start = 0;
  TimestampMs end = 0;
  std::size_t first_fix = 0;
  std::size_t end_fix = 0;
};

double estimate_period_s(const std::vector<GpsFix>& chain) {
  if (chain.size() < 2) return 1.0;
  std::vector<double> d;
  d.reserve(chain.size() - 1);
  for (std::size_t i = 0; i + 1 < chain.size(); ++i)
    d.push_back(static_cast<double>(chain[i + 1].t - chain[i].t) / 1000.0);
  return median(std::move(d));
}

}  // namespace

EventStream detect_events(const std::vector<GpsFix>& trace, const Route& route,
                          const std::vector<Stop>& stops, const PreprocessConfig& config) {
  EventStream out;
  if (trace.empty()) return out;
  const std::string vehicle = trace.front().vehicle_id;

  std::vector<GpsFix> fixes;
  fixes.reserve(trace.size());
  for (const auto& f : trace) {
    if (f.vehicle_id != vehicle)
      throw std::invalid_argument("detect_events expects a single-vehicle trace");
    if (!in_exclusion_zone(f, config.exclusion_zones)) fixes.push_back(f);
  }
  if (fixes.empty()) return out;

  RouteCycle cycle(route);

  // Split into chains wherever the fix gap exceeds max_gap_s.
  std::vector<std::vector<GpsFix>> chains;
  chains.emplace_back();
  for (const auto& f : fixes) {
    if (!chains.back().empty() &&
        static_cast<double>(f.t - chains.back().back().t) / 1000.0 > config.max_gap_s)
      chains.emplace_back();
    chains.back().push_back(f);
  }

  bool entered_any_radius = false;
  for (const auto& chain : chains) {
    const double period_s = estimate_period_s(chain);

    std::vector<DwellInterval> intervals =
        config.detection_mode == DetectionMode::kSpeedAndGps
            ? stationary_intervals_speed(chain)
            : stationary_intervals_gps(chain, config.jitter_threshold_m);

    // Bind intervals to stops, tracking the visit order for overlap
    // resolution and merging clusters a noise blip split apart.
    std::vector<StopDwell> dwells;
    std::optional<std::string> last_visited;
    for (const auto& iv : intervals) {
      GpsFix probe;
      probe.vehicle_id = vehicle;
      probe.t = iv.start;
      probe.lat = iv.lat;
      probe.lon = iv.lon;
      ResolveOutcome res = resolve_stop(probe, route, stops, last_visited);
      if (res.ambiguous) {
        out.diagnostics.push_back("ambiguous overlapping stop radii at " +
                                  format_iso8601(iv.start) + " for " + vehicle + "; skipped");
        continue;
      }
      if (!res.stop_id) continue;  // stationary outside every stop: stays in the run
      entered_any_radius = true;
      if (!dwells.empty() && dwells.back().stop_id == *res.stop_id &&
          static_cast<double>(iv.start - dwells.back().end) / 1000.0 <= 3.0 * period_s) {
        dwells.back().end = iv.end;
        dwells.back().end_fix = iv.end_fix;
      } else {
        dwells.push_back(StopDwell{*res.stop_id, iv.start, iv.end, iv.first_fix, iv.end_fix});
      }
      last_visited = *res.stop_id;
    }

    // Zero dwells: every crossing of the route-expected next stop's radius
    // between two bound dwells, placed at the closest-approach fix. The walk
    // follows the trace's radius entries in order, so chains of consecutive
    // bypasses, whole bypassed laps included, each yield a zero dwell. An
    // entry into b's own stop that never exits before b starts is b's
    // arrival, not a bypass.
    std::vector<StopDwell> full;
    for (std::size_t k = 0; k < dwells.size(); ++k) {
      full.push_back(dwells[k]);
      if (k + 1 == dwells.size()) break;
      const StopDwell& a = dwells[k];
      const StopDwell& b = dwells[k + 1];
      const std::size_t fence = std::min(b.first_fix, chain.size());
      std::string cur = a.stop_id;
      std::size_t scan = a.end_fix;
      std::size_t missing = 0;
      while (missing < cycle.stops().size()) {
        auto next = cycle.successor(cur);
        if (!next) break;
        const Stop& s = stop_by_id(stops, *next);
        std::size_t enter = scan;
        while (enter < fence &&
               haversine_m(chain[enter].lat, chain[enter].lon, s.lat, s.lon) > s.radius_m)
          ++enter;
        if (enter >= fence) {
          if (*next == b.stop_id) break;
          out.diagnostics.push_back("no trace coverage of expected stop '" + *next +
                                    "' between " + a.stop_id + " and " + b.stop_id + " for " +
                                    vehicle);
          cur = *next;
          ++missing;
          continue;
        }
        double best_d = std::numeric_limits<double>::infinity();
        std::size_t best_i = enter;
        std::size_t exit = enter;
        while (exit < fence) {
          const double d = haversine_m(chain[exit].lat, chain[exit].lon, s.lat, s.lon);
          if (d > s.radius_m) break;
          if (d < best_d) {
            best_d = d;
            best_i = exit;
          }
          ++exit;
        }
        if (*next == b.stop_id && exit >= fence) break;
        entered_any_radius = true;
        // Distance to a passed stop falls and rises linearly in time, so the
        // pass moment is where the approach and departure lines cross. Two
        // fixes per arm pin each line even when the arm speeds differ; the
        // closest fix alone is the fallback.
        TimestampMs pass = chain[best_i].t;
        if (best_i >= 2 && best_i + 2 < chain.size()) {
          const auto dist = [&](std::size_t idx) {
            return haversine_m(chain[idx].lat, chain[idx].lon, s.lat, s.lon);
          };
          const auto sec = [&](std::size_t idx) {
            return static_cast<double>(chain[idx].t - chain[best_i].t) / 1000.0;
          };
          const double tl0 = sec(best_i - 2), tl1 = sec(best_i - 1);
          const double tr0 = sec(best_i + 1), tr1 = sec(best_i + 2);
          const double dl0 = dist(best_i - 2), dl1 = dist(best_i - 1);
          const double dr0 = dist(best_i + 1), dr1 = dist(best_i + 2);
          if (tl1 > tl0 && tr1 > tr0) {
            const double ml = (dl1 - dl0) / (tl1 - tl0);
            const double mr = (dr1 - dr0) / (tr1 - tr0);
            if (ml < 0.0 && mr > 0.0) {
              const double y = (dl0 - dr0 + mr * tr0 - ml * tl0) / (mr - ml);
              if (y >= tl1 && y <= tr0)
                pass = chain[best_i].t + static_cast<TimestampMs>(std::llround(y * 1000.0));
            }
          }
        }
        full.push_back(StopDwell{*next, pass, pass, best_i, best_i});
        cur = *next;
        scan = exit;
        missing = 0;
      }
    }

    // Emit alternating dwell/run events; runs only between route-consecutive
    // dwells.
    for (std::size_t k = 0; k < full.size(); ++k) {
      const StopDwell& d = full[k];
      out.events.push_back(Event::dwell(vehicle, d.stop_id, d.start, d.end));
      if (k + 1 == full.size()) continue;
      const StopDwell& n = full[k + 1];
      auto succ = cycle.successor(d.stop_id);
      if (succ && *succ == n.stop_id && n.start > d.end) {
        out.events.push_back(
            Event::run(vehicle, Segment{d.stop_id, n.stop_id}, d.end, n.start));
      } else {
        out.diagnostics.push_back("non-consecutive dwell pair " + d.stop_id + " -> " +
                                  n.stop_id + " for " + vehicle + "; run dropped");
      }
    }
  }

  if (out.events.empty() && !entered_any_radius)
    out.diagnostics.push_back("trace for " + vehicle + " never enters any stop radius");
  return out;
}

EventStream join_weather(const EventStream& events, const std::vector<WeatherRecord>& weather,
                         const PreprocessConfig& config) {
  std::map<TimestampMs, WeatherRecord> by_hour;
  for (const auto& w : weather) {
    if (!by_hour.emplace(w.hour, w).second)
      throw std::invalid_argument("duplicate weather hour " + format_iso8601(w.hour));
  }
  EventStream out = events;
  out.weather.assign(out.events.size(), std::nullopt);
  const auto max_gap = static_cast<std::int64_t>(config.max_weather_gap_h);
  for (std::size_t i = 0; i < out.events.size(); ++i) {
    const TimestampMs hour = floor_to_hour(out.events[i].start);
    for (std::int64_t back = 0; back <= max_gap; ++back) {
      auto it = by_hour.find(hour - back * kMsPerHour);
      if (it != by_hour.end()) {
        out.weather[i] = it->second;
        break;
      }
    }
    if (!out.weather[i])
      out.diagnostics.push_back("no weather within " + std::to_string(max_gap) + " h of " +
                                format_iso8601(out.events[i].start) + "; event excluded from features");
  }
  return out;
}

EventStream preprocess_traces(const std::vector<GpsFix>& fixes, const Route& route,
                              const std::vector<Stop>& stops,
                              const std::vector<WeatherRecord>& weather,
                              const PreprocessConfig& config) {
  std::map<std::string, std::vector<GpsFix>> by_vehicle;
  for (const auto& f : fixes) by_vehicle[f.vehicle_id].push_back(f);

  EventStream merged;
  for (auto& [vehicle, trace] : by_vehicle) {
    std::stable_sort(trace.begin(), trace.end(),
                     [](const GpsFix& a, const GpsFix& b) { return a.t < b.t; });
    std::vector<GpsFix> routed = exclude_off_route(trace, route, stops, config);
    const auto changes = detect_sampling_rate_change(routed, config.rate_change);
    if (!changes.empty())
      merged.diagnostics.push_back("sampling-rate change for " + vehicle + " at " +
                                   format_iso8601(changes.front().at) + "; policy " +
                                   config.rate_change.policy);
    routed = discard_rate_changed(routed, changes, config.rate_change);
    EventStream one = detect_events(routed, route, stops, config);
    merged.events.insert(merged.events.end(), one.events.begin(), one.events.end());
    merged.diagnostics.insert(merged.diagnostics.end(), one.diagnostics.begin(),
                              one.diagnostics.end());
  }
  std::stable_sort(merged.events.begin(), merged.events.end(), [](const Event& a, const Event& b) {
    if (a.start != b.start) return a.start < b.start;
    return a.vehicle_id < b.vehicle_id;
  });
  return join_weather(merged, weather, config);
}

}  // namespace atp
