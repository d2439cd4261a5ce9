#include "atp/synth/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <stdexcept>

#include "atp/core/geo.hpp"
#include "atp/core/rng.hpp"

namespace atp {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kMinSpeedMs = 0.3;

double kmh_to_ms(double kmh) { return kmh / 3.6; }

struct EnPoint {
  double east = 0.0;
  double north = 0.0;
};

struct Phase {
  double dur = 0.0;
  double v0 = 0.0;
  double a = 0.0;
};

// Accelerate, cruise, decelerate along one chord. Entry and exit speeds are
// capped at the cruise speed, so the profile is a trapezoid or a triangle.
struct SegPlan {
  Phase accel;
  Phase cruise;
  Phase decel;

  double total() const { return accel.dur + cruise.dur + decel.dur; }

  double distance_at(double dt) const {
    double s = 0.0;
    for (const Phase& p : {accel, cruise, decel}) {
      const double d = std::clamp(dt, 0.0, p.dur);
      s += p.v0 * d + 0.5 * p.a * d * d;
      dt -= p.dur;
      if (dt <= 0.0) break;
    }
    return s;
  }

  double speed_at(double dt) const {
    for (const Phase& p : {accel, cruise, decel}) {
      if (dt <= p.dur) return p.v0 + p.a * std::max(0.0, dt);
      dt -= p.dur;
    }
    return decel.v0 + decel.a * decel.dur;
  }
};

SegPlan plan_segment(double length, double v_entry, double v_exit, double v_cruise,
                     double accel) {
  v_entry = std::min(v_entry, v_cruise);
  v_exit = std::min(v_exit, v_cruise);
  if (std::abs(v_entry * v_entry - v_exit * v_exit) > 2.0 * accel * length + 1e-9)
    throw std::invalid_argument(
        "stop spacing is shorter than the braking distance at the requested speeds");
  const double d_acc = (v_cruise * v_cruise - v_entry * v_entry) / (2.0 * accel);
  const double d_dec = (v_cruise * v_cruise - v_exit * v_exit) / (2.0 * accel);
  SegPlan plan;
  if (d_acc + d_dec <= length) {
    plan.accel = {(v_cruise - v_entry) / accel, v_entry, accel};
    plan.cruise = {(length - d_acc - d_dec) / v_cruise, v_cruise, 0.0};
    plan.decel = {(v_cruise - v_exit) / accel, v_cruise, -accel};
  } else {
    const double vp =
        std::sqrt((2.0 * accel * length + v_entry * v_entry + v_exit * v_exit) / 2.0);
    plan.accel = {(vp - v_entry) / accel, v_entry, accel};
    plan.cruise = {0.0, vp, 0.0};
    plan.decel = {(vp - v_exit) / accel, vp, -accel};
  }
  return plan;
}

// One span of the vehicle-local timeline: either parked at a stop or
// traversing one chord under a SegPlan.
struct Piece {
  double t0 = 0.0;
  double t1 = 0.0;
  bool moving = false;
  EnPoint from;
  EnPoint to;
  double length = 0.0;
  SegPlan plan;
};

EnPoint position_at(const Piece& piece, double t) {
  if (!piece.moving) return piece.from;
  const double s = std::min(piece.plan.distance_at(t - piece.t0), piece.length);
  const double f = s / piece.length;
  return {piece.from.east + f * (piece.to.east - piece.from.east),
          piece.from.north + f * (piece.to.north - piece.from.north)};
}

double speed_at(const Piece& piece, double t) {
  if (!piece.moving) return 0.0;
  return std::max(0.0, piece.plan.speed_at(t - piece.t0));
}

double nonzero_dwell(const SiteSpec& spec, int stop_index, std::mt19937_64& rng) {
  std::size_t mode = 0;
  if (spec.stop_linked_modes) {
    mode = static_cast<std::size_t>(stop_index) % spec.dwell_modes.size();
  } else if (spec.dwell_modes.size() > 1) {
    double total = 0.0;
    for (const auto& m : spec.dwell_modes) total += m.weight;
    std::uniform_real_distribution<double> u(0.0, total);
    double pick = u(rng);
    while (mode + 1 < spec.dwell_modes.size() && pick > spec.dwell_modes[mode].weight) {
      pick -= spec.dwell_modes[mode].weight;
      ++mode;
    }
  }
  const DwellMode& m = spec.dwell_modes[mode];
  std::normal_distribution<double> draw(m.mean_s, m.std_s);
  for (int attempt = 0; attempt < 100; ++attempt) {
    const double d = draw(rng);
    if (d >= 1.0) return d;
  }
  return 1.0;
}

void validate(const SiteSpec& spec) {
  if (spec.site_id.empty()) throw std::invalid_argument("site_id must not be empty");
  if (spec.n_stops < 2) throw std::invalid_argument("a site needs at least two stops");
  if (spec.n_vehicles < 1) throw std::invalid_argument("a site needs at least one vehicle");
  if (spec.days < 1) throw std::invalid_argument("days must be >= 1");
  if (spec.service_hours < 1) throw std::invalid_argument("service_hours must be >= 1");
  if (spec.service_start_hour < 0 || spec.service_start_hour + spec.service_hours > 24)
    throw std::invalid_argument("service window must fit inside one day");
  if (spec.sampling_period_s <= 0.0) throw std::invalid_argument("sampling period must be > 0");
  if (spec.stop_spacing_m <= 0.0) throw std::invalid_argument("stop spacing must be > 0");
  if (spec.stop_radius_m <= 0.0) throw std::invalid_argument("stop radius must be > 0");
  if (spec.cruise_speed_kmh <= 0.0) throw std::invalid_argument("cruise speed must be > 0");
  if (spec.accel_ms2 <= 0.0) throw std::invalid_argument("acceleration must be > 0");
  if (spec.p_zero < 0.0 || spec.p_zero > 1.0)
    throw std::invalid_argument("p_zero must be in [0, 1]");
  if (spec.dwell_modes.empty()) throw std::invalid_argument("at least one dwell mode required");
  for (const auto& m : spec.dwell_modes) {
    if (m.mean_s < 1.0) throw std::invalid_argument("dwell mode means must be >= 1 s");
    if (m.std_s < 0.0) throw std::invalid_argument("dwell mode stds must be >= 0");
    if (m.weight <= 0.0) throw std::invalid_argument("dwell mode weights must be > 0");
  }
  if (spec.per_vehicle_speed_offset_kmh < 0.0 ||
      spec.per_vehicle_speed_offset_kmh >= spec.cruise_speed_kmh)
    throw std::invalid_argument("per-vehicle speed offset must be in [0, cruise)");
  if (spec.run_tod_drift < 0.0 || spec.run_tod_drift >= 1.0)
    throw std::invalid_argument("run_tod_drift must be in [0, 1)");
  if (spec.run_speed_noise < 0.0 || spec.run_speed_noise > 0.3)
    throw std::invalid_argument("run_speed_noise must be in [0, 0.3]");
  if (spec.gps_noise_sigma_m < 0.0) throw std::invalid_argument("gps noise must be >= 0");

  const double v_nominal =
      kmh_to_ms(spec.cruise_speed_kmh + spec.per_vehicle_speed_offset_kmh) *
      (1.0 + spec.run_tod_drift);
  if (v_nominal * v_nominal > 2.0 * spec.accel_ms2 * spec.stop_spacing_m)
    throw std::invalid_argument(
        "stop spacing is shorter than the braking distance at the requested speeds");
}

}  // namespace

std::vector<std::vector<int>> build_skip_hours(const SiteSpec& spec) {
  std::vector<std::vector<int>> out(static_cast<std::size_t>(spec.n_stops));
  if (spec.zero_pattern != ZeroPattern::kStopHourGrid) return out;
  const int k = std::clamp(static_cast<int>(std::lround(spec.p_zero * spec.service_hours)), 0,
                           spec.service_hours);
  for (int s = 0; s < spec.n_stops; ++s) {
    std::mt19937_64 rng(derive_seed(spec.seed, 400 + static_cast<std::uint64_t>(s)));
    std::vector<int> hours(static_cast<std::size_t>(spec.service_hours));
    std::iota(hours.begin(), hours.end(), 0);
    for (int i = 0; i < k; ++i) {
      std::uniform_int_distribution<std::size_t> pick(static_cast<std::size_t>(i),
                                                      hours.size() - 1);
      std::swap(hours[static_cast<std::size_t>(i)], hours[pick(rng)]);
    }
    hours.resize(static_cast<std::size_t>(k));
    std::sort(hours.begin(), hours.end());
    out[static_cast<std::size_t>(s)] = std::move(hours);
  }
  return out;
}

double sample_dwell_s(const SiteSpec& spec, int stop_index, int hour_of_service,
                      std::mt19937_64& rng, const std::vector<std::vector<int>>& skip_hours) {
  if (stop_index < 0 || stop_index >= spec.n_stops)
    throw std::invalid_argument("stop index outside the site");
  if (spec.zero_pattern == ZeroPattern::kStopHourGrid) {
    const auto& hours = skip_hours.at(static_cast<std::size_t>(stop_index));
    if (std::binary_search(hours.begin(), hours.end(), hour_of_service)) return 0.0;
  } else if (spec.p_zero > 0.0) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    if (u(rng) < spec.p_zero) return 0.0;
  }
  return nonzero_dwell(spec, stop_index, rng);
}

SiteData generate_site(const SiteSpec& spec) {
  validate(spec);

  SiteData site;
  const double circle_r = spec.stop_spacing_m / (2.0 * std::sin(kPi / spec.n_stops));
  std::vector<EnPoint> stop_en(static_cast<std::size_t>(spec.n_stops));
  for (int i = 0; i < spec.n_stops; ++i) {
    const double angle = 2.0 * kPi * i / spec.n_stops;
    stop_en[static_cast<std::size_t>(i)] = {circle_r * std::sin(angle),
                                            circle_r * std::cos(angle)};
    char id[8];
    std::snprintf(id, sizeof id, "S%02d", i + 1);
    Stop stop;
    stop.stop_id = id;
    stop.name = "Stop " + std::to_string(i + 1);
    offset_by_meters(spec.center_lat, spec.center_lon, stop_en[static_cast<std::size_t>(i)].east,
                     stop_en[static_cast<std::size_t>(i)].north, stop.lat, stop.lon);
    stop.radius_m = spec.stop_radius_m;
    site.stops.push_back(std::move(stop));
  }
  site.route.route_id = spec.site_id + "-loop";
  for (const auto& s : site.stops) site.route.stops.push_back(s.stop_id);
  site.route.stops.push_back(site.stops.front().stop_id);

  const TimestampMs day0 = parse_iso_date(spec.start_date);
  const std::vector<std::vector<int>> skip_hours = build_skip_hours(spec);

  // Weather: a daily temperature sinusoid peaking mid-afternoon, sporadic
  // precipitation, and breezy noise around the base wind.
  std::mt19937_64 weather_rng(derive_seed(spec.seed, 300));
  std::normal_distribution<double> temp_noise(0.0, 0.3);
  std::normal_distribution<double> precip_amount(0.0, 2.0);
  std::normal_distribution<double> wind_noise(0.0, 1.5);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  for (int d = 0; d < spec.days; ++d) {
    for (int h = 0; h < 24; ++h) {
      WeatherRecord w;
      w.hour = day0 + d * kMsPerDay + h * kMsPerHour;
      w.temp_c = spec.temp_base_c +
                 spec.temp_amp_c * std::sin(2.0 * kPi * (h - 9) / 24.0) + temp_noise(weather_rng);
      w.precip_mm = u01(weather_rng) < spec.precip_prob ? std::abs(precip_amount(weather_rng))
                                                        : 0.0;
      w.wind_ms = std::max(0.0, spec.wind_base_ms + wind_noise(weather_rng));
      site.weather.push_back(w);
    }
  }

  const double service_s = spec.service_hours * 3600.0;
  const double length = spec.stop_spacing_m;
  const double v_ceiling = 0.999 * std::sqrt(2.0 * spec.accel_ms2 * length);
  double mode_total = 0.0;
  double mode_mean = 0.0;
  for (const auto& m : spec.dwell_modes) {
    mode_total += m.weight;
    mode_mean += m.weight * m.mean_s;
  }
  mode_mean /= mode_total;

  for (int v = 0; v < spec.n_vehicles; ++v) {
    const std::string vid = "V" + std::to_string(v + 1);
    std::mt19937_64 ev_rng(derive_seed(spec.seed, 100 + static_cast<std::uint64_t>(v)));
    std::mt19937_64 fix_rng(derive_seed(spec.seed, 200 + static_cast<std::uint64_t>(v)));
    std::normal_distribution<double> speed_noise(0.0, spec.run_speed_noise);
    std::normal_distribution<double> gps_noise(0.0, spec.gps_noise_sigma_m);

    const double offset_kmh =
        spec.n_vehicles == 1
            ? 0.0
            : -spec.per_vehicle_speed_offset_kmh +
                  2.0 * spec.per_vehicle_speed_offset_kmh * v / (spec.n_vehicles - 1);
    const double v_base = kmh_to_ms(spec.cruise_speed_kmh + offset_kmh);
    const double nominal_lap =
        spec.n_stops * (length / v_base + (1.0 - spec.p_zero) * mode_mean);
    const double stagger = std::floor(nominal_lap * v / spec.n_vehicles);

    std::vector<GpsFix>& fixes = site.traces[vid];
    for (int day = 0; day < spec.days; ++day) {
      const TimestampMs vstart_ms = day0 + day * kMsPerDay +
                                    spec.service_start_hour * kMsPerHour +
                                    static_cast<TimestampMs>(std::llround(stagger * 1000.0));
      const double window_s = service_s - stagger;
      const auto abs_ms = [&](double sec) {
        return vstart_ms + static_cast<TimestampMs>(std::llround(sec * 1000.0));
      };
      const auto service_hour_at = [&](double sec) {
        const int h = static_cast<int>(std::floor((sec + stagger) / 3600.0));
        return std::clamp(h, 0, spec.service_hours - 1);
      };

      std::vector<Piece> pieces;
      double t = 0.0;
      int stop = 0;
      double prev_exit = 0.0;

      // The day opens and closes with a completed nonzero dwell so every
      // chain starts and ends parked.
      const double first_dwell = nonzero_dwell(spec, 0, ev_rng);
      site.truth.events.push_back(
          Event::dwell(vid, site.stops[0].stop_id, abs_ms(0.0), abs_ms(first_dwell)));
      pieces.push_back(Piece{0.0, first_dwell, false, stop_en[0], stop_en[0], 0.0, {}});
      t = first_dwell;

      while (true) {
        const int next = (stop + 1) % spec.n_stops;
        const double u =
            std::clamp(2.0 * (t + stagger) / service_s - 1.0, -1.0, 1.0);
        double factor = 1.0 + spec.run_tod_drift * u;
        if (spec.run_speed_noise > 0.0) factor *= 1.0 + speed_noise(ev_rng);
        const double v_seg = std::clamp(v_base * factor, kMinSpeedMs, v_ceiling);

        const bool last =
            t + length / v_seg + v_seg / spec.accel_ms2 >= window_s;
        double dwell_next =
            last ? nonzero_dwell(spec, next, ev_rng)
                 : sample_dwell_s(spec, next, service_hour_at(t), ev_rng, skip_hours);

        const double v_entry = std::min(prev_exit, v_seg);
        const double v_exit = dwell_next > 0.0 ? 0.0 : v_seg;
        const SegPlan plan = plan_segment(length, v_entry, v_exit, v_seg, spec.accel_ms2);
        const double t_arr = t + plan.total();
        // The day's closing dwell ends on the sampling grid, so the parked
        // interval is fully covered by fixes and its end is observable.
        if (last) {
          const double p = spec.sampling_period_s;
          dwell_next = std::ceil((t_arr + dwell_next) / p - 1e-9) * p - t_arr;
        }

        site.truth.events.push_back(Event::run(
            vid, Segment{site.stops[static_cast<std::size_t>(stop)].stop_id,
                         site.stops[static_cast<std::size_t>(next)].stop_id},
            abs_ms(t), abs_ms(t_arr)));
        pieces.push_back(Piece{t, t_arr, true, stop_en[static_cast<std::size_t>(stop)],
                               stop_en[static_cast<std::size_t>(next)], length, plan});
        site.truth.events.push_back(
            Event::dwell(vid, site.stops[static_cast<std::size_t>(next)].stop_id, abs_ms(t_arr),
                         abs_ms(t_arr + dwell_next)));
        if (dwell_next > 0.0)
          pieces.push_back(Piece{t_arr, t_arr + dwell_next, false,
                                 stop_en[static_cast<std::size_t>(next)],
                                 stop_en[static_cast<std::size_t>(next)], 0.0, {}});

        t = t_arr + dwell_next;
        prev_exit = v_exit;
        stop = next;
        if (last) break;
      }

      std::size_t piece_idx = 0;
      for (long i = 0;; ++i) {
        const double ts = i * spec.sampling_period_s;
        if (ts > t + 1e-9) break;
        while (piece_idx + 1 < pieces.size() && ts > pieces[piece_idx].t1 + 1e-9) ++piece_idx;
        EnPoint p = position_at(pieces[piece_idx], ts);
        if (spec.gps_noise_sigma_m > 0.0) {
          p.east += gps_noise(fix_rng);
          p.north += gps_noise(fix_rng);
        }
        GpsFix fix;
        fix.vehicle_id = vid;
        fix.t = abs_ms(ts);
        offset_by_meters(spec.center_lat, spec.center_lon, p.east, p.north, fix.lat, fix.lon);
        if (spec.speed_channel) fix.speed_kmh = speed_at(pieces[piece_idx], ts) * 3.6;
        fixes.push_back(std::move(fix));
      }
    }
  }
  return site;
}

SiteSpec preset(const std::string& name) {
  SiteSpec spec;
  spec.site_id = name;
  if (name == "linkoping_like") {
    spec.n_stops = 15;
    spec.n_vehicles = 3;
    spec.days = 7;
    spec.stop_spacing_m = 300.0;
    spec.cruise_speed_kmh = 18.0;
    spec.sampling_period_s = 1.0;
    spec.p_zero = 0.3;
    spec.dwell_modes = {DwellMode{25.0, 3.0, 0.5}, DwellMode{35.0, 3.0, 0.5}};
    spec.zero_pattern = ZeroPattern::kStopHourGrid;
    spec.stop_linked_modes = true;
    spec.run_speed_noise = 0.03;
    spec.gps_noise_sigma_m = 0.5;
    spec.speed_channel = true;
    return spec;
  }
  if (name == "lesmureaux_like") {
    spec.n_stops = 7;
    spec.n_vehicles = 2;
    spec.days = 7;
    spec.stop_spacing_m = 200.0;
    spec.cruise_speed_kmh = 6.0;
    spec.accel_ms2 = 0.6;
    spec.sampling_period_s = 3.0;
    spec.p_zero = 0.25;
    spec.dwell_modes = {DwellMode{25.0, 2.0, 1.0}};
    spec.zero_pattern = ZeroPattern::kStopHourGrid;
    spec.run_speed_noise = 0.02;
    spec.gps_noise_sigma_m = 0.5;
    spec.speed_channel = false;
    spec.center_lat = 48.99;
    spec.center_lon = 1.91;
    return spec;
  }
  if (name == "tampere_like") {
    spec.n_stops = 7;
    spec.n_vehicles = 2;
    spec.days = 7;
    spec.stop_spacing_m = 300.0;
    spec.cruise_speed_kmh = 20.0;
    spec.sampling_period_s = 1.0;
    spec.p_zero = 0.6;
    spec.dwell_modes = {DwellMode{25.0, 4.0, 1.0}};
    spec.zero_pattern = ZeroPattern::kBernoulli;
    spec.run_speed_noise = 0.03;
    spec.gps_noise_sigma_m = 0.5;
    spec.speed_channel = true;
    spec.center_lat = 61.50;
    spec.center_lon = 23.77;
    return spec;
  }
  throw std::invalid_argument("unknown preset '" + name + "'");
}

}  // namespace atp
