#pragma once

#include <Eigen/Dense>
#include <map>
#include <string>
#include <vector>

#include "atp/core/time.hpp"
#include "atp/preprocess/preprocess.hpp"

namespace atp {

enum class LagScope { kPerVehicle, kFleet };
enum class TargetKind { kDwell, kRun };

std::string to_string(LagScope scope);
std::string to_string(TargetKind target);
LagScope lag_scope_from_string(const std::string& s);
TargetKind target_kind_from_string(const std::string& s);

// One realized target value: a dwell duration on a stop key or a running
// duration on a segment key.
struct Observation {
  std::string vehicle_id;
  std::string key;
  TimestampMs t = 0;  // event start
  double y = 0.0;     // seconds
};

struct Lags {
  double l1 = 0.0;
  double l2 = 0.0;
  bool l1_imputed = false;
  bool l2_imputed = false;
};

// Causal lag lookup over a set of observations. All queries honor strict
// past-only semantics: an observation at exactly time t is never visible to
// a query at t.
class LagIndex {
 public:
  LagIndex(std::vector<Observation> observations, LagScope scope);

  // The two most recent observations on `key` strictly before t, drawn from
  // `vehicle_id`'s history (per-vehicle scope) or any vehicle's (fleet
  // scope). Missing lags are imputed with the causal mean of the key within
  // the same scope, then the causal scope-wide mean, then 0.
  Lags query(const std::string& vehicle_id, const std::string& key, TimestampMs t) const;

  LagScope scope() const { return scope_; }

 private:
  struct Series {
    std::vector<TimestampMs> t;
    std::vector<double> y;
    std::vector<double> prefix;  // prefix sums of y for causal means
  };
  const Series* find(const std::string& scope_key) const;

  LagScope scope_;
  std::map<std::string, Series> by_key_;     // scoped key -> ordered history
  std::map<std::string, Series> by_global_;  // scope-wide history (all keys)
};

// Extracts the observations of one target kind from an event stream
// (weather-missing events included; their targets are still history).
std::vector<Observation> observations_of(const EventStream& stream, TargetKind target);

struct FeatureRow {
  std::string vehicle_id;
  std::string key;
  TimestampMs t = 0;
  TimeEncoding tau;
  double temp_c = 0.0;
  double precip_mm = 0.0;
  double wind_ms = 0.0;
  Lags lags;
  double y = 0.0;
};

// A supervised dataset plus the vocabularies that fix its design-matrix
// layout: [tau(4), weather(3), vehicle one-hot, key one-hot, l1, l2,
// l1_imputed, l2_imputed].
struct Dataset {
  TargetKind target = TargetKind::kDwell;
  LagScope scope = LagScope::kPerVehicle;
  std::vector<std::string> vehicle_vocab;
  std::vector<std::string> key_vocab;
  std::vector<FeatureRow> rows;

  std::size_t dim() const { return 4 + 3 + vehicle_vocab.size() + key_vocab.size() + 2 + 2; }
  std::vector<std::string> feature_names() const;
  // Throws std::invalid_argument when the row's vehicle or key is not in
  // the vocabulary.
  Eigen::VectorXd design_row(const FeatureRow& row) const;
  Eigen::MatrixXd design_matrix() const;
  Eigen::VectorXd targets() const;
  int vehicle_index(const std::string& id) const;
  int key_index(const std::string& key) const;
};

// One row per event of the selected kind; weather-missing events are
// excluded from rows but still contribute lag history.
Dataset assemble_dataset(const EventStream& stream, TargetKind target, LagScope scope,
                         const std::vector<std::string>& vehicle_vocab,
                         const std::vector<std::string>& key_vocab);

// Vocabularies observed in a stream, in first-appearance order.
std::vector<std::string> vehicle_vocab_of(const EventStream& stream);
std::vector<std::string> key_vocab_of(const EventStream& stream, TargetKind target);

}  // namespace atp
