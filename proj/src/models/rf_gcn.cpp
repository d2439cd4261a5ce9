#include <stdexcept>
#include <utility>

#include "atp/core/rng.hpp"
#include "model_impl.hpp"

namespace atp {

double RfGcnModel::predict_row_raw(const FeatureRow&) const {
  throw std::logic_error(
      "graph models predict whole datasets or contexts; a single row has no neighborhood");
}

std::vector<double> RfGcnModel::predict_rows_raw(const Dataset& data) const {
  std::vector<double> out = gcn.predict_rows_raw(data);
  for (std::size_t i = 0; i < data.rows.size(); ++i)
    if (classifier.predict(design(data.rows[i])) == 1.0) out[i] = 0.0;
  return out;
}

std::vector<double> RfGcnModel::predict_context_raw(const RowContext& ctx,
                                                    const std::vector<std::string>& keys) const {
  std::vector<double> out = gcn.predict_context_raw(ctx, keys);
  for (std::size_t i = 0; i < keys.size(); ++i)
    if (classifier.predict(design(context_row(ctx, keys[i]))) == 1.0) out[i] = 0.0;
  return out;
}

nlohmann::json RfGcnModel::hyperparams_json() const {
  return {{"rf",
           {{"n_trees", rf_params.n_trees},
            {"max_depth", rf_params.max_depth},
            {"min_leaf", rf_params.min_leaf},
            {"max_features", rf_params.max_features},
            {"bootstrap", rf_params.bootstrap}}},
          {"gcn",
           {{"hidden", gcn.params.hidden},
            {"epochs", gcn.params.epochs},
            {"step", gcn.params.step}}}};
}

void RfGcnModel::hyperparams_from_json(const nlohmann::json& j) {
  const nlohmann::json& rf = j.at("rf");
  rf_params.n_trees = rf.at("n_trees").get<int>();
  rf_params.max_depth = rf.at("max_depth").get<int>();
  rf_params.min_leaf = rf.at("min_leaf").get<int>();
  rf_params.max_features = rf.at("max_features").get<int>();
  rf_params.bootstrap = rf.at("bootstrap").get<bool>();
}

nlohmann::json RfGcnModel::params_json() const {
  // The regressor travels as a complete model document so its own scaler
  // and vocabularies survive the round trip.
  return {{"classifier", forest_to_json(classifier)}, {"regressor", gcn.to_json()}};
}

void RfGcnModel::params_from_json(const nlohmann::json& j) {
  classifier = forest_from_json(j.at("classifier"));
  std::unique_ptr<Model> reg = Model::from_json(j.at("regressor"));
  auto* g = dynamic_cast<GcnModel*>(reg.get());
  if (g == nullptr) throw std::runtime_error("hybrid payload regressor is not a gcn model");
  gcn = std::move(*g);
}

std::unique_ptr<Model> train_rf_gcn(const Dataset& data, const GraphSpec& graph,
                                    const ForestParams& rf_params, const GcnParams& gcn_params,
                                    std::uint64_t seed) {
  if (data.rows.empty()) throw std::invalid_argument("cannot train on an empty dataset");
  auto m = std::make_unique<RfGcnModel>();
  m->init_meta("rf-gcn", data, seed);
  m->rf_params = rf_params;

  Eigen::VectorXd labels(static_cast<long>(data.rows.size()));
  for (std::size_t i = 0; i < data.rows.size(); ++i)
    labels[static_cast<long>(i)] = data.rows[i].y == 0.0 ? 1.0 : 0.0;
  m->classifier = fit_forest(data.design_matrix(), labels, rf_params, true, derive_seed(seed, 1));

  Dataset nonzero;
  nonzero.target = data.target;
  nonzero.scope = data.scope;
  nonzero.vehicle_vocab = data.vehicle_vocab;
  nonzero.key_vocab = data.key_vocab;
  for (const auto& row : data.rows)
    if (row.y != 0.0) nonzero.rows.push_back(row);
  if (nonzero.rows.empty())
    throw std::invalid_argument("every training target is zero; nothing to fit the regressor on");

  std::unique_ptr<Model> reg = train_gcn(nonzero, graph, gcn_params, derive_seed(seed, 2));
  m->gcn = std::move(static_cast<GcnModel&>(*reg));
  return m;
}

}  // namespace atp
