#include "atp/eval/eval.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <random>
#include <stdexcept>

#include "atp/core/rng.hpp"

namespace atp {

namespace {

void check_pair(const std::vector<double>& y, const std::vector<double>& yhat) {
  if (y.empty()) throw std::invalid_argument("metrics over zero observations are undefined");
  if (y.size() != yhat.size())
    throw std::invalid_argument("label and prediction counts differ");
}

}  // namespace

double rmse(const std::vector<double>& y, const std::vector<double>& yhat) {
  check_pair(y, yhat);
  double sse = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) sse += (yhat[i] - y[i]) * (yhat[i] - y[i]);
  return std::sqrt(sse / static_cast<double>(y.size()));
}

double mae(const std::vector<double>& y, const std::vector<double>& yhat) {
  check_pair(y, yhat);
  double sae = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) sae += std::abs(yhat[i] - y[i]);
  return sae / static_cast<double>(y.size());
}

MetricsReport evaluate_model(const Model& model, const Dataset& data) {
  if (data.rows.empty()) throw std::invalid_argument("cannot evaluate on an empty dataset");
  const std::vector<double> yhat = model.predict(data);
  std::vector<double> y;
  y.reserve(data.rows.size());
  for (const auto& row : data.rows) y.push_back(row.y);
  MetricsReport r;
  r.model = model.kind();
  r.target = to_string(data.target);
  r.rmse = rmse(y, yhat);
  r.mae = mae(y, yhat);
  r.n = y.size();
  r.seed = model.seed();
  return r;
}

std::pair<EventStream, EventStream> split_by_date(const EventStream& stream, double test_days) {
  if (stream.events.empty()) throw std::invalid_argument("cannot split an empty event stream");
  if (test_days <= 0.0) throw std::invalid_argument("test window must be positive");
  TimestampMs max_start = stream.events.front().start;
  for (const auto& e : stream.events) max_start = std::max(max_start, e.start);
  const TimestampMs cut =
      max_start - static_cast<TimestampMs>(std::llround(test_days * kMsPerDay));

  EventStream train;
  EventStream test;
  const bool weather = stream.has_weather();
  for (std::size_t i = 0; i < stream.events.size(); ++i) {
    EventStream& side = stream.events[i].start >= cut ? test : train;
    side.events.push_back(stream.events[i]);
    if (weather) side.weather.push_back(stream.weather[i]);
  }
  if (train.events.empty() || test.events.empty())
    throw std::invalid_argument("date split leaves an empty train or test side");
  return {std::move(train), std::move(test)};
}

std::pair<Dataset, Dataset> split_dataset_by_date(const Dataset& data, double test_days) {
  if (data.rows.empty()) throw std::invalid_argument("cannot split an empty dataset");
  if (test_days <= 0.0) throw std::invalid_argument("test window must be positive");
  TimestampMs max_start = data.rows.front().t;
  for (const auto& row : data.rows) max_start = std::max(max_start, row.t);
  const TimestampMs cut =
      max_start - static_cast<TimestampMs>(std::llround(test_days * kMsPerDay));

  Dataset train = data;
  Dataset test = data;
  train.rows.clear();
  test.rows.clear();
  for (const auto& row : data.rows) (row.t >= cut ? test : train).rows.push_back(row);
  if (train.rows.empty() || test.rows.empty())
    throw std::invalid_argument("date split leaves an empty train or test side");
  return {std::move(train), std::move(test)};
}

std::vector<ScopeMetrics> lag_scope_experiment(const EventStream& stream,
                                               const std::vector<std::string>& model_kinds,
                                               TargetKind target, double test_days,
                                               std::uint64_t seed) {
  const std::vector<std::string> vehicles = vehicle_vocab_of(stream);
  const std::vector<std::string> keys = key_vocab_of(stream, target);
  const bool single = vehicles.size() < 2;

  std::vector<ScopeMetrics> out;
  for (LagScope scope : {LagScope::kPerVehicle, LagScope::kFleet}) {
    const Dataset full = assemble_dataset(stream, target, scope, vehicles, keys);
    const auto [train, test] = split_dataset_by_date(full, test_days);
    for (const auto& kind : model_kinds) {
      if (kind == "gcn" || kind == "rf-gcn")
        throw std::invalid_argument("graph models are not part of the lag-scope experiment");
      const std::unique_ptr<Model> model =
          train_model(kind, train, nlohmann::json::object(), std::nullopt, seed);
      const MetricsReport m = evaluate_model(*model, test);
      ScopeMetrics s;
      s.model = kind;
      s.scope = scope;
      s.rmse = m.rmse;
      s.mae = m.mae;
      s.n = m.n;
      if (single) s.note = "single vehicle: scopes coincide";
      out.push_back(std::move(s));
    }
  }
  return out;
}

std::vector<Journey> extract_journeys(const EventStream& stream, const Route& route) {
  const std::vector<std::string>& stops = route.stops;
  if (stops.size() < 2) throw std::invalid_argument("route needs at least two stops");
  const std::size_t last = stops.size() - 1;

  std::vector<std::string> vehicle_order;
  std::map<std::string, std::vector<std::size_t>> per_vehicle;
  for (std::size_t i = 0; i < stream.events.size(); ++i) {
    const std::string& v = stream.events[i].vehicle_id;
    if (per_vehicle.find(v) == per_vehicle.end()) vehicle_order.push_back(v);
    per_vehicle[v].push_back(i);
  }

  std::vector<Journey> out;
  for (const auto& v : vehicle_order) {
    Journey cur;
    bool active = false;
    bool expect_run = false;
    bool weather_ok = true;
    std::size_t m = 0;  // most recently confirmed stop position
    for (std::size_t idx : per_vehicle[v]) {
      const Event& e = stream.events[idx];
      if (e.kind == EventKind::kDwell) {
        if (active && !expect_run && e.stop_id == stops[m]) {
          cur.dwell_s.push_back(e.duration_s());
          expect_run = true;
          continue;
        }
        active = false;
        if (e.stop_id == stops[0]) {
          cur = Journey{};
          cur.vehicle_id = v;
          cur.departure = e.end;
          active = true;
          expect_run = true;
          weather_ok = true;
          m = 0;
        }
      } else {
        if (active && expect_run && e.segment.from_stop == stops[m] &&
            e.segment.to_stop == stops[m + 1]) {
          // Departure-hour weather rides on the first run, which starts at
          // the instant the origin dwell ends.
          if (m == 0 && stream.has_weather()) {
            if (stream.weather[idx]) {
              cur.temp_c = stream.weather[idx]->temp_c;
              cur.precip_mm = stream.weather[idx]->precip_mm;
              cur.wind_ms = stream.weather[idx]->wind_ms;
            } else {
              weather_ok = false;
            }
          }
          cur.run_s.push_back(e.duration_s());
          ++m;
          if (m == last) {
            if (weather_ok) out.push_back(cur);
            active = false;
          } else {
            expect_run = false;
          }
        } else {
          active = false;
        }
      }
    }
  }
  return out;
}

std::vector<Journey> sample_journeys(const std::vector<Journey>& journeys, std::size_t n,
                                     std::uint64_t seed) {
  if (n == 0) throw std::invalid_argument("cannot sample zero journeys");
  if (n >= journeys.size()) return journeys;
  std::vector<std::size_t> idx(journeys.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::mt19937_64 rng(derive_seed(seed, 0));
  for (std::size_t i = 0; i < n; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, idx.size() - 1);
    std::swap(idx[i], idx[pick(rng)]);
  }
  idx.resize(n);
  std::sort(idx.begin(), idx.end());
  std::vector<Journey> out;
  out.reserve(n);
  for (std::size_t i : idx) out.push_back(journeys[i]);
  return out;
}

namespace {

JourneyPrediction predict_whole_route(const Journey& jny, const Model& dwell_model,
                                      const Model& run_model, const Route& route,
                                      const LagIndex& dwell_lags, const LagIndex& run_lags) {
  FrozenContext ctx;
  ctx.vehicle_id = jny.vehicle_id;
  ctx.departure = jny.departure;
  ctx.temp_c = jny.temp_c;
  ctx.precip_mm = jny.precip_mm;
  ctx.wind_ms = jny.wind_ms;
  ctx.dwell_lags = &dwell_lags;
  ctx.run_lags = &run_lags;
  return predict_journey(dwell_model, run_model, ctx, route, 0,
                         static_cast<int>(route.stops.size()) - 1);
}

void check_coverage(const Journey& jny, std::size_t ahead) {
  if (jny.run_s.size() != ahead || jny.dwell_s.size() + 1 != ahead)
    throw std::invalid_argument("journey durations do not cover the route");
}

}  // namespace

ErrorProfile accumulated_error_profile(const std::vector<Journey>& journeys,
                                       const Model& dwell_model, const Model& run_model,
                                       const Route& route, const LagIndex& dwell_lags,
                                       const LagIndex& run_lags) {
  if (journeys.empty()) throw std::invalid_argument("no journeys to profile");
  const std::size_t ahead = route.stops.size() - 1;

  std::vector<double> sum(ahead, 0.0);
  std::vector<double> sum_abs(ahead, 0.0);
  std::vector<double> mx(ahead, -std::numeric_limits<double>::infinity());
  std::vector<double> mn(ahead, std::numeric_limits<double>::infinity());
  for (const auto& jny : journeys) {
    check_coverage(jny, ahead);
    const JourneyPrediction pred =
        predict_whole_route(jny, dwell_model, run_model, route, dwell_lags, run_lags);
    double actual = 0.0;
    for (std::size_t m = 1; m <= ahead; ++m) {
      actual += jny.run_s[m - 1];
      if (m >= 2) actual += jny.dwell_s[m - 2];
      const double e = pred.cumulative_s[m] - actual;
      sum[m - 1] += e;
      sum_abs[m - 1] += std::abs(e);
      mx[m - 1] = std::max(mx[m - 1], e);
      mn[m - 1] = std::min(mn[m - 1], e);
    }
  }

  ErrorProfile p;
  const double n = static_cast<double>(journeys.size());
  for (std::size_t m = 0; m < ahead; ++m) {
    p.mean_err_s.push_back(sum[m] / n);
    p.max_pos_s.push_back(mx[m]);
    p.max_neg_s.push_back(mn[m]);
    p.mean_abs_s.push_back(sum_abs[m] / n);
  }
  return p;
}

std::pair<double, double> decompose_accumulated_error(const std::vector<Journey>& journeys,
                                                      const Model& dwell_model,
                                                      const Model& run_model, const Route& route,
                                                      const LagIndex& dwell_lags,
                                                      const LagIndex& run_lags) {
  if (journeys.empty()) throw std::invalid_argument("no journeys to decompose");
  const std::size_t ahead = route.stops.size() - 1;

  double dwell_abs = 0.0;
  double run_abs = 0.0;
  for (const auto& jny : journeys) {
    check_coverage(jny, ahead);
    const JourneyPrediction pred =
        predict_whole_route(jny, dwell_model, run_model, route, dwell_lags, run_lags);
    for (std::size_t k = 0; k < jny.run_s.size(); ++k)
      run_abs += std::abs(pred.run_preds_s[k] - jny.run_s[k]);
    for (std::size_t k = 0; k < jny.dwell_s.size(); ++k)
      dwell_abs += std::abs(pred.dwell_preds_s[k] - jny.dwell_s[k]);
  }
  const double n = static_cast<double>(journeys.size());
  return {dwell_abs / n, run_abs / n};
}

}  // namespace atp
