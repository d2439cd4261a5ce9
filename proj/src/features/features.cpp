#include "atp/features/features.hpp"

#include <algorithm>
#include <stdexcept>

namespace atp {

std::string to_string(LagScope scope) {
  return scope == LagScope::kPerVehicle ? "per-vehicle" : "fleet";
}

std::string to_string(TargetKind target) {
  return target == TargetKind::kDwell ? "dwell" : "run";
}

LagScope lag_scope_from_string(const std::string& s) {
  if (s == "per_vehicle" || s == "per-vehicle") return LagScope::kPerVehicle;
  if (s == "fleet") return LagScope::kFleet;
  throw std::invalid_argument("unknown lag scope '" + s + "'");
}

TargetKind target_kind_from_string(const std::string& s) {
  if (s == "dwell") return TargetKind::kDwell;
  if (s == "run") return TargetKind::kRun;
  throw std::invalid_argument("unknown target '" + s + "'");
}

namespace {

// Scoped history key: per-vehicle histories are segregated by vehicle so a
// lookup can never see another vehicle's observations.
std::string scoped(LagScope scope, const std::string& vehicle_id, const std::string& key) {
  return scope == LagScope::kPerVehicle ? vehicle_id + "\x1f" + key : key;
}

std::string scoped_global(LagScope scope, const std::string& vehicle_id) {
  return scope == LagScope::kPerVehicle ? vehicle_id : std::string();
}

}  // namespace

LagIndex::LagIndex(std::vector<Observation> observations, LagScope scope) : scope_(scope) {
  std::stable_sort(observations.begin(), observations.end(),
                   [](const Observation& a, const Observation& b) { return a.t < b.t; });
  for (const auto& o : observations) {
    Series& s = by_key_[scoped(scope_, o.vehicle_id, o.key)];
    s.t.push_back(o.t);
    s.y.push_back(o.y);
    Series& g = by_global_[scoped_global(scope_, o.vehicle_id)];
    g.t.push_back(o.t);
    g.y.push_back(o.y);
  }
  for (auto* table : {&by_key_, &by_global_}) {
    for (auto& [k, s] : *table) {
      s.prefix.resize(s.y.size());
      double acc = 0.0;
      for (std::size_t i = 0; i < s.y.size(); ++i) {
        acc += s.y[i];
        s.prefix[i] = acc;
      }
    }
  }
}

const LagIndex::Series* LagIndex::find(const std::string& scope_key) const {
  auto it = by_key_.find(scope_key);
  return it == by_key_.end() ? nullptr : &it->second;
}

Lags LagIndex::query(const std::string& vehicle_id, const std::string& key,
                     TimestampMs t) const {
  Lags out;
  const Series* s = find(scoped(scope_, vehicle_id, key));
  std::size_t n = 0;
  if (s != nullptr) {
    // Observations strictly before t; a tie at t is still the future.
    n = static_cast<std::size_t>(std::lower_bound(s->t.begin(), s->t.end(), t) -
                                 s->t.begin());
    if (n >= 1) out.l1 = s->y[n - 1];
    if (n >= 2) {
      out.l2 = s->y[n - 2];
      return out;
    }
  }
  // Imputation: causal key mean, else causal scope-wide mean, else zero.
  double mean = 0.0;
  bool found = false;
  if (s != nullptr && n >= 1) {
    mean = s->prefix[n - 1] / static_cast<double>(n);
    found = true;
  }
  if (!found) {
    auto git = by_global_.find(scoped_global(scope_, vehicle_id));
    if (git != by_global_.end()) {
      const Series& g = git->second;
      const auto gn = static_cast<std::size_t>(
          std::lower_bound(g.t.begin(), g.t.end(), t) - g.t.begin());
      if (gn >= 1) mean = g.prefix[gn - 1] / static_cast<double>(gn);
    }
  }
  if (n == 0) {
    out.l1 = mean;
    out.l1_imputed = true;
  }
  out.l2 = mean;
  out.l2_imputed = true;
  return out;
}

std::vector<Observation> observations_of(const EventStream& stream, TargetKind target) {
  std::vector<Observation> out;
  for (const auto& e : stream.events) {
    if ((target == TargetKind::kDwell) != (e.kind == EventKind::kDwell)) continue;
    Observation o;
    o.vehicle_id = e.vehicle_id;
    o.key = e.kind == EventKind::kDwell ? e.stop_id : e.segment.key();
    o.t = e.start;
    o.y = e.duration_s();
    out.push_back(std::move(o));
  }
  return out;
}

std::vector<std::string> Dataset::feature_names() const {
  std::vector<std::string> names = {"tod_sin", "tod_cos", "dow_sin", "dow_cos",
                                    "temp_c",  "precip_mm", "wind_ms"};
  for (const auto& v : vehicle_vocab) names.push_back("v:" + v);
  for (const auto& k : key_vocab) names.push_back("k:" + k);
  names.push_back("l1");
  names.push_back("l2");
  names.push_back("l1_imputed");
  names.push_back("l2_imputed");
  return names;
}

int Dataset::vehicle_index(const std::string& id) const {
  auto it = std::find(vehicle_vocab.begin(), vehicle_vocab.end(), id);
  return it == vehicle_vocab.end() ? -1 : static_cast<int>(it - vehicle_vocab.begin());
}

int Dataset::key_index(const std::string& key) const {
  auto it = std::find(key_vocab.begin(), key_vocab.end(), key);
  return it == key_vocab.end() ? -1 : static_cast<int>(it - key_vocab.begin());
}

Eigen::VectorXd Dataset::design_row(const FeatureRow& row) const {
  const int vi = vehicle_index(row.vehicle_id);
  if (vi < 0)
    throw std::invalid_argument("vehicle '" + row.vehicle_id + "' outside the vocabulary");
  const int ki = key_index(row.key);
  if (ki < 0) throw std::invalid_argument("key '" + row.key + "' outside the vocabulary");
  Eigen::VectorXd x = Eigen::VectorXd::Zero(static_cast<long>(dim()));
  x[0] = row.tau.tod_sin;
  x[1] = row.tau.tod_cos;
  x[2] = row.tau.dow_sin;
  x[3] = row.tau.dow_cos;
  x[4] = row.temp_c;
  x[5] = row.precip_mm;
  x[6] = row.wind_ms;
  x[7 + vi] = 1.0;
  x[7 + static_cast<long>(vehicle_vocab.size()) + ki] = 1.0;
  const long base = 7 + static_cast<long>(vehicle_vocab.size() + key_vocab.size());
  x[base] = row.lags.l1;
  x[base + 1] = row.lags.l2;
  x[base + 2] = row.lags.l1_imputed ? 1.0 : 0.0;
  x[base + 3] = row.lags.l2_imputed ? 1.0 : 0.0;
  return x;
}

Eigen::MatrixXd Dataset::design_matrix() const {
  Eigen::MatrixXd x(static_cast<long>(rows.size()), static_cast<long>(dim()));
  for (std::size_t i = 0; i < rows.size(); ++i) x.row(static_cast<long>(i)) = design_row(rows[i]);
  return x;
}

Eigen::VectorXd Dataset::targets() const {
  Eigen::VectorXd y(static_cast<long>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) y[static_cast<long>(i)] = rows[i].y;
  return y;
}

std::vector<std::string> vehicle_vocab_of(const EventStream& stream) {
  std::vector<std::string> out;
  for (const auto& e : stream.events)
    if (std::find(out.begin(), out.end(), e.vehicle_id) == out.end())
      out.push_back(e.vehicle_id);
  return out;
}

std::vector<std::string> key_vocab_of(const EventStream& stream, TargetKind target) {
  std::vector<std::string> out;
  for (const auto& e : stream.events) {
    if ((target == TargetKind::kDwell) != (e.kind == EventKind::kDwell)) continue;
    const std::string key = e.kind == EventKind::kDwell ? e.stop_id : e.segment.key();
    if (std::find(out.begin(), out.end(), key) == out.end()) out.push_back(key);
  }
  return out;
}

Dataset assemble_dataset(const EventStream& stream, TargetKind target, LagScope scope,
                         const std::vector<std::string>& vehicle_vocab,
                         const std::vector<std::string>& key_vocab) {
  Dataset data;
  data.target = target;
  data.scope = scope;
  data.vehicle_vocab = vehicle_vocab;
  data.key_vocab = key_vocab;

  LagIndex index(observations_of(stream, target), scope);

  for (std::size_t i = 0; i < stream.events.size(); ++i) {
    const Event& e = stream.events[i];
    if ((target == TargetKind::kDwell) != (e.kind == EventKind::kDwell)) continue;
    if (stream.has_weather() && !stream.weather[i]) continue;  // weather-missing
    FeatureRow row;
    row.vehicle_id = e.vehicle_id;
    row.key = e.kind == EventKind::kDwell ? e.stop_id : e.segment.key();
    row.t = e.start;
    row.tau = encode_time(e.start);
    if (stream.has_weather()) {
      row.temp_c = stream.weather[i]->temp_c;
      row.precip_mm = stream.weather[i]->precip_mm;
      row.wind_ms = stream.weather[i]->wind_ms;
    }
    row.lags = index.query(row.vehicle_id, row.key, row.t);
    row.y = e.duration_s();
    if (data.vehicle_index(row.vehicle_id) < 0)
      throw std::invalid_argument("vehicle '" + row.vehicle_id + "' outside the vocabulary");
    if (data.key_index(row.key) < 0)
      throw std::invalid_argument("key '" + row.key + "' outside the vocabulary");
    data.rows.push_back(std::move(row));
  }
  return data;
}

}  // namespace atp
