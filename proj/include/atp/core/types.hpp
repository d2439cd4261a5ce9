#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "atp/core/time.hpp"

namespace atp {

// A single GPS observation from one vehicle's receiver.
struct GpsFix {
  std::string vehicle_id;
  TimestampMs t = 0;
  double lat = 0.0;
  double lon = 0.0;
  std::optional<double> speed_kmh;  // absent for receivers without a speed channel
};

struct Stop {
  std::string stop_id;
  std::string name;
  double lat = 0.0;
  double lon = 0.0;
  double radius_m = 0.0;
};

// Ordered stop visit sequence. A route whose first and last stop ids match is
// a closed loop; the duplicate terminal entry is how loops are written down.
// stop_order_exceptions lists forced visit sequences for zones where stop
// radii overlap; each sequence pins the successor of its earlier entries.
struct Route {
  std::string route_id;
  std::vector<std::string> stops;
  std::vector<std::vector<std::string>> stop_order_exceptions;

  bool is_loop() const { return stops.size() >= 2 && stops.front() == stops.back(); }
};

struct Segment {
  std::string from_stop;
  std::string to_stop;

  std::string key() const { return from_stop + "->" + to_stop; }
  bool operator==(const Segment& o) const {
    return from_stop == o.from_stop && to_stop == o.to_stop;
  }
};

enum class EventKind { kDwell, kRun };

// One detected dwell or run. Dwells bind to a stop; runs bind to a segment.
struct Event {
  EventKind kind = EventKind::kDwell;
  std::string vehicle_id;
  std::string stop_id;      // dwell only
  Segment segment;          // run only
  TimestampMs start = 0;
  TimestampMs end = 0;

  double duration_s() const { return static_cast<double>(end - start) / 1000.0; }

  static Event dwell(std::string vehicle, std::string stop, TimestampMs start,
                     TimestampMs end) {
    if (end < start) throw std::invalid_argument("dwell event ends before it starts");
    if (vehicle.empty() || stop.empty())
      throw std::invalid_argument("dwell event needs a vehicle and a stop");
    Event e;
    e.kind = EventKind::kDwell;
    e.vehicle_id = std::move(vehicle);
    e.stop_id = std::move(stop);
    e.start = start;
    e.end = end;
    return e;
  }

  static Event run(std::string vehicle, Segment segment, TimestampMs start, TimestampMs end) {
    if (end < start) throw std::invalid_argument("run event ends before it starts");
    if (vehicle.empty() || segment.from_stop.empty() || segment.to_stop.empty())
      throw std::invalid_argument("run event needs a vehicle and a segment");
    Event e;
    e.kind = EventKind::kRun;
    e.vehicle_id = std::move(vehicle);
    e.segment = std::move(segment);
    e.start = start;
    e.end = end;
    return e;
  }
};

struct WeatherRecord {
  TimestampMs hour = 0;  // truncated to the hour
  double temp_c = 0.0;
  double precip_mm = 0.0;
  double wind_ms = 0.0;
};

}  // namespace atp
