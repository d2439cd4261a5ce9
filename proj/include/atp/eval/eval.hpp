#pragma once

#include <string>
#include <utility>
#include <vector>

#include "atp/features/features.hpp"
#include "atp/journey/journey.hpp"
#include "atp/models/model.hpp"
#include "atp/preprocess/preprocess.hpp"

namespace atp {

// Both throw std::invalid_argument on empty or mismatched inputs.
double rmse(const std::vector<double>& y, const std::vector<double>& yhat);
double mae(const std::vector<double>& y, const std::vector<double>& yhat);

struct MetricsReport {
  std::string model;
  std::string target;
  double rmse = 0.0;
  double mae = 0.0;
  std::size_t n = 0;
  std::uint64_t seed = 0;
};

MetricsReport evaluate_model(const Model& model, const Dataset& data);

// Test set = events with start >= (max start - test_days); train the rest.
// Throws when either side would be empty.
std::pair<EventStream, EventStream> split_by_date(const EventStream& stream, double test_days);
std::pair<Dataset, Dataset> split_dataset_by_date(const Dataset& data, double test_days);

struct ScopeMetrics {
  std::string model;
  LagScope scope = LagScope::kPerVehicle;
  double rmse = 0.0;
  double mae = 0.0;
  std::size_t n = 0;
  std::string note;
};

// Trains each named model kind under both lag scopes on the same date
// split and evaluates on the held-out side. With a single vehicle the
// scopes coincide; results are still emitted, with a note.
std::vector<ScopeMetrics> lag_scope_experiment(const EventStream& stream,
                                               const std::vector<std::string>& model_kinds,
                                               TargetKind target, double test_days,
                                               std::uint64_t seed);

// One complete pass over the route's stop sequence by one vehicle:
// dwell at stops[0], run, dwell at stops[1], ... , dwell at stops.back().
struct Journey {
  std::string vehicle_id;
  TimestampMs departure = 0;       // end of the origin dwell
  std::vector<double> run_s;       // actual run durations, stops.size()-1 of them
  std::vector<double> dwell_s;     // actual intermediate dwells, stops.size()-2
  double temp_c = 0.0;
  double precip_mm = 0.0;
  double wind_ms = 0.0;
};

std::vector<Journey> extract_journeys(const EventStream& stream, const Route& route);
std::vector<Journey> sample_journeys(const std::vector<Journey>& journeys, std::size_t n,
                                     std::uint64_t seed);

struct ErrorProfile {
  // Index m holds statistics of the signed error of T_{0,m+1} across
  // journeys, i.e. position 0 is one stop ahead of the origin.
  std::vector<double> mean_err_s;
  std::vector<double> max_pos_s;
  std::vector<double> max_neg_s;
  std::vector<double> mean_abs_s;
};

// Signed accumulated error per stops-ahead index over the given journeys,
// with lag state frozen at each journey's departure (queried from the
// provided indexes, which may span the full event history).
ErrorProfile accumulated_error_profile(const std::vector<Journey>& journeys,
                                       const Model& dwell_model, const Model& run_model,
                                       const Route& route, const LagIndex& dwell_lags,
                                       const LagIndex& run_lags);

// Mean over journeys of the summed per-event absolute errors, split into
// the dwell and run contributions.
std::pair<double, double> decompose_accumulated_error(const std::vector<Journey>& journeys,
                                                      const Model& dwell_model,
                                                      const Model& run_model, const Route& route,
                                                      const LagIndex& dwell_lags,
                                                      const LagIndex& run_lags);

}  // namespace atp
