#pragma once

#include <cstdint>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "atp/core/types.hpp"

namespace atp {

struct DwellMode {
  double mean_s = 25.0;
  double std_s = 3.0;
  double weight = 1.0;
};

// How zero dwells (stop skips) are placed:
//  - bernoulli: independent coin with probability p_zero per stop visit.
//  - stop_hour_grid: each stop deterministically skips in a fixed subset of
//    service hours, round(p_zero * service_hours) of them, chosen from the
//    seed. Marginal skip rate stays near p_zero, but the pattern is
//    predictable from stop and time of day.
enum class ZeroPattern { kBernoulli, kStopHourGrid };

struct SiteSpec {
  std::string site_id = "site";
  int n_stops = 7;
  double stop_spacing_m = 300.0;   // chord length between consecutive stops
  double stop_radius_m = 15.0;
  double center_lat = 58.41;
  double center_lon = 15.62;
  int n_vehicles = 2;
  int days = 7;
  std::string start_date = "2023-01-09";  // a Monday
  int service_start_hour = 8;
  int service_hours = 10;
  double sampling_period_s = 1.0;
  double cruise_speed_kmh = 18.0;
  double accel_ms2 = 1.0;
  double p_zero = 0.0;
  std::vector<DwellMode> dwell_modes = {DwellMode{}};
  ZeroPattern zero_pattern = ZeroPattern::kBernoulli;
  // Tie the dwell mode to the stop (stop i uses mode i mod #modes) instead
  // of sampling the mode by weight.
  bool stop_linked_modes = false;
  // Spread of constant per-vehicle cruise-speed offsets; vehicles get
  // offsets evenly spaced in [-x, +x] km/h.
  double per_vehicle_speed_offset_kmh = 0.0;
  // Fleet-wide cruise-speed drift across the service day: speed is scaled
  // by (1 + drift * u) with u running -1 -> +1 over the service window.
  double run_tod_drift = 0.0;
  // Per-run multiplicative speed noise (standard deviation).
  double run_speed_noise = 0.0;
  double gps_noise_sigma_m = 0.0;
  bool speed_channel = true;
  // Weather process
  double temp_base_c = 8.0;
  double temp_amp_c = 6.0;
  double precip_prob = 0.15;
  double wind_base_ms = 3.0;
  std::uint64_t seed = 1;
};

struct GroundTruth {
  std::vector<Event> events;  // ordered by (vehicle, start)
};

struct SiteData {
  std::vector<Stop> stops;
  Route route;
  std::map<std::string, std::vector<GpsFix>> traces;  // vehicle -> fixes
  GroundTruth truth;
  std::vector<WeatherRecord> weather;
};

// Stops on a circle joined by straight chords; vehicles loop with
// trapezoidal speed profiles and dwell according to the zero pattern and
// truncated Gaussian mixture; positions are sampled every sampling_period
// with isotropic Gaussian noise. Deterministic given spec.seed.
SiteData generate_site(const SiteSpec& spec);

// linkoping_like | lesmureaux_like | tampere_like; throws on other names.
SiteSpec preset(const std::string& name);

// Single dwell-duration draw given the visit's stop index and service hour;
// exposed so distribution tests can drive it directly.
double sample_dwell_s(const SiteSpec& spec, int stop_index, int hour_of_service,
                      std::mt19937_64& rng, const std::vector<std::vector<int>>& skip_hours);

// The per-stop skip-hour table used by the stop_hour_grid pattern (empty
// inner lists under bernoulli).
std::vector<std::vector<int>> build_skip_hours(const SiteSpec& spec);

}  // namespace atp
