#pragma once

#include <Eigen/Dense>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "atp/features/features.hpp"
#include "atp/graph/graph.hpp"
#include "atp/models/engines.hpp"

namespace atp {

// Column-wise standardization fitted on training data. Constant columns
// keep scale 1 so they pass through unchanged.
struct Scaler {
  Eigen::VectorXd mean;
  Eigen::VectorXd stdev;

  bool empty() const { return mean.size() == 0; }
  Eigen::VectorXd apply(const Eigen::VectorXd& x) const;
  Eigen::MatrixXd apply(const Eigen::MatrixXd& x) const;
  static Scaler fit(const Eigen::MatrixXd& x);
};

// Everything a model needs to synthesize a feature row outside a dataset:
// used by journey prediction, where lags are frozen at departure.
struct RowContext {
  std::string vehicle_id;
  TimestampMs t = 0;
  double temp_c = 0.0;
  double precip_mm = 0.0;
  double wind_ms = 0.0;
  std::function<Lags(const std::string& key)> lags_for;
};

enum class ForestTask { kRegression, kBinaryClassification };

class Model;
std::unique_ptr<Model> train_lag(const Dataset& data);
std::unique_ptr<Model> train_mean(const Dataset& data);
// Ridge-penalized least squares via normal equations; the intercept is not
// penalized. ridge = 0 is accepted but a singular system then raises an
// error suggesting ridge > 0.
std::unique_ptr<Model> train_linreg(const Dataset& data, double ridge);
std::unique_ptr<Model> train_random_forest(const Dataset& data, const ForestParams& params,
                                           std::uint64_t seed,
                                           ForestTask task = ForestTask::kRegression);
std::unique_ptr<Model> train_gbt(const Dataset& data, const GbtParams& params,
                                 std::uint64_t seed);
std::unique_ptr<Model> train_mlp(const Dataset& data, const MlpParams& params,
                                 std::uint64_t seed);
std::unique_ptr<Model> train_gcn(const Dataset& data, const GraphSpec& graph,
                                 const GcnParams& params, std::uint64_t seed);
std::unique_ptr<Model> train_rf_gcn(const Dataset& data, const GraphSpec& graph,
                                    const ForestParams& rf_params, const GcnParams& gcn_params,
                                    std::uint64_t seed);

// Common train/predict contract. Predictions are seconds; dwell outputs are
// floored at 0, running outputs at 1 (classifiers are exempt). Training is
// deterministic given dataset order, hyperparameters, and seed, and so is
// prediction given parameters.
class Model {
 public:
  virtual ~Model() = default;

  const std::string& kind() const { return kind_; }
  TargetKind target() const { return target_; }
  LagScope scope() const { return scope_; }
  std::uint64_t seed() const { return seed_; }
  const std::vector<std::string>& vehicle_vocab() const { return vehicle_vocab_; }
  const std::vector<std::string>& key_vocab() const { return key_vocab_; }
  bool is_classifier() const { return is_classifier_; }

  std::vector<double> predict(const Dataset& data) const;
  double predict_row(const FeatureRow& row) const;
  // One prediction per key, all sharing the context's vehicle, time, and
  // weather; the context's lags_for supplies each key's lag features.
  std::vector<double> predict_context(const RowContext& ctx,
                                      const std::vector<std::string>& keys) const;

  void save(const std::string& path) const;
  static std::unique_ptr<Model> load(const std::string& path);

  nlohmann::json to_json() const;
  static std::unique_ptr<Model> from_json(const nlohmann::json& j);

 protected:
  virtual double predict_row_raw(const FeatureRow& row) const = 0;
  virtual std::vector<double> predict_rows_raw(const Dataset& data) const;
  virtual std::vector<double> predict_context_raw(const RowContext& ctx,
                                                  const std::vector<std::string>& keys) const;
  virtual nlohmann::json hyperparams_json() const = 0;
  virtual void hyperparams_from_json(const nlohmann::json& j) = 0;
  virtual nlohmann::json params_json() const = 0;
  virtual void params_from_json(const nlohmann::json& j) = 0;

  // Design vector in this model's vocabulary; throws std::invalid_argument
  // on ids outside it.
  Eigen::VectorXd design(const FeatureRow& row) const;
  FeatureRow context_row(const RowContext& ctx, const std::string& key) const;
  double apply_floor(double v) const;
  void init_meta(std::string kind, const Dataset& data, std::uint64_t seed);

  std::string kind_;
  TargetKind target_ = TargetKind::kDwell;
  LagScope scope_ = LagScope::kPerVehicle;
  std::uint64_t seed_ = 0;
  std::vector<std::string> vehicle_vocab_;
  std::vector<std::string> key_vocab_;
  Scaler scaler_;
  bool is_classifier_ = false;

  friend class RfGcnModel;
  friend std::unique_ptr<Model> train_lag(const Dataset&);
  friend std::unique_ptr<Model> train_mean(const Dataset&);
  friend std::unique_ptr<Model> train_linreg(const Dataset&, double);
  friend std::unique_ptr<Model> train_random_forest(const Dataset&, const ForestParams&,
                                                    std::uint64_t, ForestTask);
  friend std::unique_ptr<Model> train_gbt(const Dataset&, const GbtParams&, std::uint64_t);
  friend std::unique_ptr<Model> train_mlp(const Dataset&, const MlpParams&, std::uint64_t);
  friend std::unique_ptr<Model> train_gcn(const Dataset&, const GraphSpec&, const GcnParams&,
                                          std::uint64_t);
  friend std::unique_ptr<Model> train_rf_gcn(const Dataset&, const GraphSpec&,
                                             const ForestParams&, const GcnParams&,
                                             std::uint64_t);
};

// CLI entry: kind is one of lag|mean|linreg|rf|gbt|mlp|gcn|rf-gcn; params
// holds kind-specific hyperparameter overrides; graph required for the
// graph kinds.
std::unique_ptr<Model> train_model(const std::string& kind, const Dataset& data,
                                   const nlohmann::json& params,
                                   const std::optional<GraphSpec>& graph, std::uint64_t seed);

}  // namespace atp
