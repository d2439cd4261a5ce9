#include "atp/journey/journey.hpp"

#include <stdexcept>

namespace atp {

double aggregate_travel_time(const std::vector<double>& run_preds,
                             const std::vector<double>& dwell_preds) {
  if (run_preds.empty()) throw std::invalid_argument("a journey needs at least one segment");
  if (dwell_preds.size() + 1 != run_preds.size())
    throw std::invalid_argument("expected exactly one fewer intermediate dwell than runs");
  double total = 0.0;
  for (double r : run_preds) total += r;
  for (double d : dwell_preds) total += d;
  return total;
}

JourneyPrediction predict_journey(const Model& dwell_model, const Model& run_model,
                                  const FrozenContext& ctx, const Route& route, int i, int j) {
  const int n = static_cast<int>(route.stops.size());
  if (i < 0 || j >= n || i >= j)
    throw std::invalid_argument("journey needs stop indexes with 0 <= i < j < route length");
  if (ctx.dwell_lags == nullptr || ctx.run_lags == nullptr)
    throw std::invalid_argument("frozen context is missing its lag indexes");

  RowContext base;
  base.vehicle_id = ctx.vehicle_id;
  base.t = ctx.departure;
  base.temp_c = ctx.temp_c;
  base.precip_mm = ctx.precip_mm;
  base.wind_ms = ctx.wind_ms;

  RowContext run_ctx = base;
  run_ctx.lags_for = [lags = ctx.run_lags, vid = ctx.vehicle_id,
                      t = ctx.departure](const std::string& key) {
    return lags->query(vid, key, t);
  };
  RowContext dwell_ctx = base;
  dwell_ctx.lags_for = [lags = ctx.dwell_lags, vid = ctx.vehicle_id,
                        t = ctx.departure](const std::string& key) {
    return lags->query(vid, key, t);
  };

  std::vector<std::string> run_keys;
  std::vector<std::string> dwell_keys;
  for (int m = i; m < j; ++m)
    run_keys.push_back(Segment{route.stops[static_cast<std::size_t>(m)],
                               route.stops[static_cast<std::size_t>(m + 1)]}
                           .key());
  for (int m = i + 1; m < j; ++m) dwell_keys.push_back(route.stops[static_cast<std::size_t>(m)]);

  JourneyPrediction out;
  out.origin_index = i;
  out.run_preds_s = run_model.predict_context(run_ctx, run_keys);
  if (!dwell_keys.empty()) out.dwell_preds_s = dwell_model.predict_context(dwell_ctx, dwell_keys);

  out.cumulative_s.resize(run_keys.size() + 1, 0.0);
  for (std::size_t m = 1; m < out.cumulative_s.size(); ++m) {
    out.cumulative_s[m] = out.cumulative_s[m - 1] + out.run_preds_s[m - 1];
    if (m >= 2) out.cumulative_s[m] += out.dwell_preds_s[m - 2];
  }
  for (double r : out.run_preds_s) out.run_total_s += r;
  for (double d : out.dwell_preds_s) out.dwell_total_s += d;
  return out;
}

}  // namespace atp
