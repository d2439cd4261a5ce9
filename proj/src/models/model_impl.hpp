#pragma once

#include <map>

#include "atp/models/model.hpp"

// Concrete model classes, shared between the per-kind training sources and
// the persistence registry. Not part of the public surface.

namespace atp {

nlohmann::json scaler_to_json(const Scaler& s);
Scaler scaler_from_json(const nlohmann::json& j);
nlohmann::json forest_to_json(const Forest& f);
Forest forest_from_json(const nlohmann::json& j);
nlohmann::json tree_to_json(const DecisionTree& t);
DecisionTree tree_from_json(const nlohmann::json& j);
nlohmann::json matrix_to_json(const Eigen::MatrixXd& m);
Eigen::MatrixXd matrix_from_json(const nlohmann::json& j);
nlohmann::json vector_to_json(const Eigen::VectorXd& v);
Eigen::VectorXd vector_from_json(const nlohmann::json& j);

// Ridge-penalized least squares with an unpenalized intercept, solved by
// normal equations. Returns [intercept, coefficients...]. Throws when the
// system is singular and ridge is zero.
Eigen::VectorXd solve_ridge(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, double ridge);

class LagModel final : public Model {
 public:
  LagModel() { kind_ = "lag"; }

 protected:
  double predict_row_raw(const FeatureRow& row) const override { return row.lags.l1; }
  nlohmann::json hyperparams_json() const override { return nlohmann::json::object(); }
  void hyperparams_from_json(const nlohmann::json&) override {}
  nlohmann::json params_json() const override { return nlohmann::json::object(); }
  void params_from_json(const nlohmann::json&) override {}
};

class MeanModel final : public Model {
 public:
  MeanModel() { kind_ = "mean"; }
  std::map<std::string, double> key_means;
  double global_mean = 0.0;

 protected:
  double predict_row_raw(const FeatureRow& row) const override;
  nlohmann::json hyperparams_json() const override { return nlohmann::json::object(); }
  void hyperparams_from_json(const nlohmann::json&) override {}
  nlohmann::json params_json() const override;
  void params_from_json(const nlohmann::json& j) override;
};

class LinregModel final : public Model {
 public:
  LinregModel() { kind_ = "linreg"; }
  double intercept = 0.0;
  Eigen::VectorXd beta;
  double ridge = 0.0;

 protected:
  double predict_row_raw(const FeatureRow& row) const override;
  nlohmann::json hyperparams_json() const override { return {{"ridge", ridge}}; }
  void hyperparams_from_json(const nlohmann::json& j) override {
    ridge = j.at("ridge").get<double>();
  }
  nlohmann::json params_json() const override;
  void params_from_json(const nlohmann::json& j) override;
};

class RfModel final : public Model {
 public:
  RfModel() { kind_ = "rf"; }
  Forest forest;
  ForestParams params;

 protected:
  double predict_row_raw(const FeatureRow& row) const override;
  nlohmann::json hyperparams_json() const override;
  void hyperparams_from_json(const nlohmann::json& j) override;
  nlohmann::json params_json() const override { return forest_to_json(forest); }
  void params_from_json(const nlohmann::json& j) override { forest = forest_from_json(j); }
};

class GbtModel final : public Model {
 public:
  GbtModel() { kind_ = "gbt"; }
  GbtEnsemble ensemble;
  GbtParams params;

 protected:
  double predict_row_raw(const FeatureRow& row) const override;
  nlohmann::json hyperparams_json() const override;
  void hyperparams_from_json(const nlohmann::json& j) override;
  nlohmann::json params_json() const override;
  void params_from_json(const nlohmann::json& j) override;
};

class MlpModel final : public Model {
 public:
  MlpModel() { kind_ = "mlp"; }
  MlpNet net;
  MlpParams params;

 protected:
  double predict_row_raw(const FeatureRow& row) const override;
  nlohmann::json hyperparams_json() const override;
  void hyperparams_from_json(const nlohmann::json& j) override;
  nlohmann::json params_json() const override;
  void params_from_json(const nlohmann::json& j) override;
};

class GcnModel final : public Model {
 public:
  GcnModel() { kind_ = "gcn"; }
  GcnNet net;
  GcnParams params;
  GraphSpec graph;

  std::vector<double> forward_context(const RowContext& ctx) const;  // one value per node

 protected:
  double predict_row_raw(const FeatureRow&) const override;
  std::vector<double> predict_rows_raw(const Dataset& data) const override;
  std::vector<double> predict_context_raw(const RowContext& ctx,
                                          const std::vector<std::string>& keys) const override;
  nlohmann::json hyperparams_json() const override;
  void hyperparams_from_json(const nlohmann::json& j) override;
  nlohmann::json params_json() const override;
  void params_from_json(const nlohmann::json& j) override;

  friend class RfGcnModel;
  friend std::unique_ptr<Model> train_gcn(const Dataset&, const GraphSpec&, const GcnParams&,
                                          std::uint64_t);
  friend std::unique_ptr<Model> train_rf_gcn(const Dataset&, const GraphSpec&,
                                             const ForestParams&, const GcnParams&,
                                             std::uint64_t);
};

class RfGcnModel final : public Model {
 public:
  RfGcnModel() { kind_ = "rf-gcn"; }
  Forest classifier;  // class 1 = zero dwell
  ForestParams rf_params;
  GcnModel gcn;

 protected:
  double predict_row_raw(const FeatureRow&) const override;
  std::vector<double> predict_rows_raw(const Dataset& data) const override;
  std::vector<double> predict_context_raw(const RowContext& ctx,
                                          const std::vector<std::string>& keys) const override;
  nlohmann::json hyperparams_json() const override;
  void hyperparams_from_json(const nlohmann::json& j) override;
  nlohmann::json params_json() const override;
  void params_from_json(const nlohmann::json& j) override;
};

}  // namespace atp
