#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "atp/core/geo.hpp"
#include "atp/core/types.hpp"

namespace atp {

enum class DetectionMode { kSpeedAndGps, kGpsOnly };

struct ExclusionZone {
  double lat = 0.0;
  double lon = 0.0;
  double radius_m = 0.0;
};

struct RateChangeConfig {
  double tolerance = 0.5;  // relative shift of the rolling median period
  int window = 9;          // fixes per rolling-median window, odd
  // "discard_lower_rate" drops the slow-sampled side; "keep_all" only reports.
  std::string policy = "discard_lower_rate";
};

struct PreprocessConfig {
  DetectionMode detection_mode = DetectionMode::kSpeedAndGps;
  double jitter_threshold_m = 2.0;  // gps_only stationarity threshold
  std::vector<ExclusionZone> exclusion_zones;
  double max_weather_gap_h = 3.0;
  double corridor_m = 100.0;  // max distance from the route chords
  double max_gap_s = 600.0;   // fix gap that splits a trace into chains
  RateChangeConfig rate_change;
};

// Time-ordered events with optional per-event weather (parallel array,
// filled by join_weather) and human-readable diagnostics.
struct EventStream {
  std::vector<Event> events;
  std::vector<std::optional<WeatherRecord>> weather;
  std::vector<std::string> diagnostics;

  bool has_weather() const { return weather.size() == events.size(); }
};

struct RateChange {
  TimestampMs at = 0;
  double old_period_s = 0.0;
  double new_period_s = 0.0;
};

struct ResolveOutcome {
  std::optional<std::string> stop_id;
  bool ambiguous = false;
};

// Cyclic successor lookup over a route's stop order, honoring
// stop_order_exceptions.
class RouteCycle {
 public:
  explicit RouteCycle(const Route& route);

  const std::vector<std::string>& stops() const { return stops_; }
  bool contains(const std::string& stop_id) const;
  // First stop among `candidates` reached walking forward from `from`.
  std::optional<std::string> nearest_forward(const std::string& from,
                                             const std::vector<std::string>& candidates) const;
  // Immediate successor of `from` (exceptions first, then route order).
  std::optional<std::string> successor(const std::string& from) const;

 private:
  std::vector<std::string> stops_;  // loop duplicate removed
  std::map<std::string, int> index_;
  std::map<std::string, std::string> overrides_;
};

bool is_stationary(const GpsFix& prev, const GpsFix& cur, const PreprocessConfig& config);

std::vector<GpsFix> exclude_off_route(const std::vector<GpsFix>& trace, const Route& route,
                                      const std::vector<Stop>& stops,
                                      const PreprocessConfig& config);

ResolveOutcome resolve_stop(const GpsFix& fix, const Route& route,
                            const std::vector<Stop>& stops,
                            const std::optional<std::string>& last_visited);

std::vector<RateChange> detect_sampling_rate_change(const std::vector<GpsFix>& trace,
                                                    const RateChangeConfig& config);

// Drops the slower-sampled portions around detected rate changes.
std::vector<GpsFix> discard_rate_changed(const std::vector<GpsFix>& trace,
                                         const std::vector<RateChange>& changes,
                                         const RateChangeConfig& config);

// Single-vehicle trace to alternating dwell/run events. The trace should
// already be route-filtered; fixes inside exclusion zones are ignored here
// as a safety net.
EventStream detect_events(const std::vector<GpsFix>& trace, const Route& route,
                          const std::vector<Stop>& stops, const PreprocessConfig& config);

EventStream join_weather(const EventStream& events, const std::vector<WeatherRecord>& weather,
                         const PreprocessConfig& config);

// Full pipeline over a multi-vehicle fix collection: per vehicle
// route-filter, rate-change discard, event detection; merged output ordered
// by (start, vehicle).
EventStream preprocess_traces(const std::vector<GpsFix>& fixes, const Route& route,
                              const std::vector<Stop>& stops,
                              const std::vector<WeatherRecord>& weather,
                              const PreprocessConfig& config);

}  // namespace atp
