#pragma once

#include <string>
#include <vector>

#include "atp/features/features.hpp"
#include "atp/models/model.hpp"

namespace atp {

// T_{i,j}: all run times from i to j plus the dwell times strictly between
// them. run_preds covers segments i..j-1 in order; dwell_preds covers stops
// i+1..j-1 and must be exactly one element shorter.
double aggregate_travel_time(const std::vector<double>& run_preds,
                             const std::vector<double>& dwell_preds);

// Lag state and weather frozen at the departure instant; journeys never see
// observations made after departure.
struct FrozenContext {
  std::string vehicle_id;
  TimestampMs departure = 0;
  double temp_c = 0.0;
  double precip_mm = 0.0;
  double wind_ms = 0.0;
  const LagIndex* dwell_lags = nullptr;
  const LagIndex* run_lags = nullptr;
};

struct JourneyPrediction {
  int origin_index = 0;
  std::vector<double> cumulative_s;  // T_{i,m} for m = i..j, so [0] = 0
  std::vector<double> run_preds_s;   // segments i..j-1
  std::vector<double> dwell_preds_s; // stops i+1..j-1
  double run_total_s = 0.0;
  double dwell_total_s = 0.0;
};

// Per-stop predictions along route.stops[i..j] using the frozen context.
// Indices address route.stops positions; throws when i >= j or out of range.
JourneyPrediction predict_journey(const Model& dwell_model, const Model& run_model,
                                  const FrozenContext& ctx, const Route& route, int i, int j);

}  // namespace atp
