#include "atp/models/model.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>

#include "model_impl.hpp"

namespace atp {

Eigen::VectorXd Scaler::apply(const Eigen::VectorXd& x) const {
  if (empty()) return x;
  if (x.size() != mean.size())
    throw std::invalid_argument("scaler dimension mismatch");
  return (x - mean).cwiseQuotient(stdev);
}

Eigen::MatrixXd Scaler::apply(const Eigen::MatrixXd& x) const {
  if (empty()) return x;
  if (x.cols() != mean.size())
    throw std::invalid_argument("scaler dimension mismatch");
  return (x.rowwise() - mean.transpose()).array().rowwise() /
         stdev.transpose().array();
}

Scaler Scaler::fit(const Eigen::MatrixXd& x) {
  Scaler s;
  const double n = static_cast<double>(x.rows());
  if (n == 0) throw std::invalid_argument("cannot fit a scaler on an empty matrix");
  s.mean = x.colwise().mean();
  Eigen::MatrixXd centered = x.rowwise() - s.mean.transpose();
  s.stdev = (centered.array().square().colwise().sum() / n).sqrt();
  for (long i = 0; i < s.stdev.size(); ++i)
    if (s.stdev[i] == 0.0) s.stdev[i] = 1.0;
  return s;
}

// ---------------------------------------------------------------------------
// Serialization helpers

nlohmann::json vector_to_json(const Eigen::VectorXd& v) {
  nlohmann::json j = nlohmann::json::array();
  for (long i = 0; i < v.size(); ++i) j.push_back(v[i]);
  return j;
}

Eigen::VectorXd vector_from_json(const nlohmann::json& j) {
  Eigen::VectorXd v(static_cast<long>(j.size()));
  for (long i = 0; i < v.size(); ++i) v[i] = j[static_cast<std::size_t>(i)].get<double>();
  return v;
}

nlohmann::json matrix_to_json(const Eigen::MatrixXd& m) {
  nlohmann::json j;
  j["rows"] = m.rows();
  j["cols"] = m.cols();
  nlohmann::json data = nlohmann::json::array();
  for (long r = 0; r < m.rows(); ++r)
    for (long c = 0; c < m.cols(); ++c) data.push_back(m(r, c));
  j["data"] = std::move(data);
  return j;
}

Eigen::MatrixXd matrix_from_json(const nlohmann::json& j) {
  const long rows = j.at("rows").get<long>();
  const long cols = j.at("cols").get<long>();
  const auto& data = j.at("data");
  if (static_cast<long>(data.size()) != rows * cols)
    throw std::runtime_error("matrix payload size mismatch");
  Eigen::MatrixXd m(rows, cols);
  std::size_t i = 0;
  for (long r = 0; r < rows; ++r)
    for (long c = 0; c < cols; ++c) m(r, c) = data[i++].get<double>();
  return m;
}

nlohmann::json scaler_to_json(const Scaler& s) {
  return {{"mean", vector_to_json(s.mean)}, {"std", vector_to_json(s.stdev)}};
}

Scaler scaler_from_json(const nlohmann::json& j) {
  Scaler s;
  s.mean = vector_from_json(j.at("mean"));
  s.stdev = vector_from_json(j.at("std"));
  return s;
}

nlohmann::json tree_to_json(const DecisionTree& t) {
  nlohmann::json nodes = nlohmann::json::array();
  for (const auto& n : t.nodes)
    nodes.push_back({n.feature, n.threshold, n.left, n.right, n.value});
  return {{"nodes", std::move(nodes)}};
}

DecisionTree tree_from_json(const nlohmann::json& j) {
  DecisionTree t;
  for (const auto& n : j.at("nodes")) {
    TreeNode node;
    node.feature = n[0].get<int>();
    node.threshold = n[1].get<double>();
    node.left = n[2].get<int>();
    node.right = n[3].get<int>();
    node.value = n[4].get<double>();
    t.nodes.push_back(node);
  }
  return t;
}

nlohmann::json forest_to_json(const Forest& f) {
  nlohmann::json trees = nlohmann::json::array();
  for (const auto& t : f.trees) trees.push_back(tree_to_json(t));
  return {{"classification", f.classification}, {"trees", std::move(trees)}};
}

Forest forest_from_json(const nlohmann::json& j) {
  Forest f;
  f.classification = j.at("classification").get<bool>();
  for (const auto& t : j.at("trees")) f.trees.push_back(tree_from_json(t));
  return f;
}

// ---------------------------------------------------------------------------
// Model base

void Model::init_meta(std::string kind, const Dataset& data, std::uint64_t seed) {
  kind_ = std::move(kind);
  target_ = data.target;
  scope_ = data.scope;
  seed_ = seed;
  vehicle_vocab_ = data.vehicle_vocab;
  key_vocab_ = data.key_vocab;
}

double Model::apply_floor(double v) const {
  if (is_classifier_) return v;
  return target_ == TargetKind::kDwell ? std::max(0.0, v) : std::max(1.0, v);
}

Eigen::VectorXd Model::design(const FeatureRow& row) const {
  Dataset schema;
  schema.target = target_;
  schema.scope = scope_;
  schema.vehicle_vocab = vehicle_vocab_;
  schema.key_vocab = key_vocab_;
  return schema.design_row(row);
}

FeatureRow Model::context_row(const RowContext& ctx, const std::string& key) const {
  FeatureRow row;
  row.vehicle_id = ctx.vehicle_id;
  row.key = key;
  row.t = ctx.t;
  row.tau = encode_time(ctx.t);
  row.temp_c = ctx.temp_c;
  row.precip_mm = ctx.precip_mm;
  row.wind_ms = ctx.wind_ms;
  if (!ctx.lags_for) throw std::invalid_argument("context has no lag source");
  row.lags = ctx.lags_for(key);
  return row;
}

std::vector<double> Model::predict_rows_raw(const Dataset& data) const {
  std::vector<double> out;
  out.reserve(data.rows.size());
  for (const auto& row : data.rows) out.push_back(predict_row_raw(row));
  return out;
}

std::vector<double> Model::predict_context_raw(const RowContext& ctx,
                                               const std::vector<std::string>& keys) const {
  std::vector<double> out;
  out.reserve(keys.size());
  for (const auto& key : keys) out.push_back(predict_row_raw(context_row(ctx, key)));
  return out;
}

std::vector<double> Model::predict(const Dataset& data) const {
  std::vector<double> out = predict_rows_raw(data);
  for (double& v : out) v = apply_floor(v);
  return out;
}

double Model::predict_row(const FeatureRow& row) const {
  return apply_floor(predict_row_raw(row));
}

std::vector<double> Model::predict_context(const RowContext& ctx,
                                           const std::vector<std::string>& keys) const {
  std::vector<double> out = predict_context_raw(ctx, keys);
  for (double& v : out) v = apply_floor(v);
  return out;
}

nlohmann::json Model::to_json() const {
  nlohmann::json j;
  j["schema_version"] = 1;
  j["kind"] = kind_;
  j["target"] = to_string(target_);
  j["scope"] = to_string(scope_);
  j["seed"] = seed_;
  j["vehicle_vocab"] = vehicle_vocab_;
  j["key_vocab"] = key_vocab_;
  j["scaler"] = scaler_to_json(scaler_);
  j["is_classifier"] = is_classifier_;
  j["hyperparams"] = hyperparams_json();
  j["params"] = params_json();
  return j;
}

namespace {

std::unique_ptr<Model> make_by_kind(const std::string& kind) {
  if (kind == "lag") return std::make_unique<LagModel>();
  if (kind == "mean") return std::make_unique<MeanModel>();
  if (kind == "linreg") return std::make_unique<LinregModel>();
  if (kind == "rf") return std::make_unique<RfModel>();
  if (kind == "gbt") return std::make_unique<GbtModel>();
  if (kind == "mlp") return std::make_unique<MlpModel>();
  if (kind == "gcn") return std::make_unique<GcnModel>();
  if (kind == "rf-gcn") return std::make_unique<RfGcnModel>();
  throw std::invalid_argument("unknown model kind '" + kind + "'");
}

}  // namespace

std::unique_ptr<Model> Model::from_json(const nlohmann::json& j) {
  const int version = j.at("schema_version").get<int>();
  if (version != 1)
    throw std::runtime_error("model schema version " + std::to_string(version) +
                             " is not supported by this build (expected 1)");
  std::unique_ptr<Model> m = make_by_kind(j.at("kind").get<std::string>());
  m->target_ = target_kind_from_string(j.at("target").get<std::string>());
  m->scope_ = lag_scope_from_string(j.at("scope").get<std::string>());
  m->seed_ = j.at("seed").get<std::uint64_t>();
  m->vehicle_vocab_ = j.at("vehicle_vocab").get<std::vector<std::string>>();
  m->key_vocab_ = j.at("key_vocab").get<std::vector<std::string>>();
  m->scaler_ = scaler_from_json(j.at("scaler"));
  m->is_classifier_ = j.at("is_classifier").get<bool>();
  m->hyperparams_from_json(j.at("hyperparams"));
  m->params_from_json(j.at("params"));
  return m;
}

void Model::save(const std::string& path) const {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open '" + path + "' for writing");
  f << to_json().dump(1) << "\n";
  if (!f.good()) throw std::runtime_error("failed writing model to '" + path + "'");
}

std::unique_ptr<Model> Model::load(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open model file '" + path + "'");
  nlohmann::json j;
  try {
    f >> j;
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error("malformed model file '" + path + "': " + e.what());
  }
  return from_json(j);
}

// ---------------------------------------------------------------------------
// CLI dispatcher

namespace {

template <typename T>
T get_or(const nlohmann::json& j, const std::string& name, T fallback) {
  if (j.contains(name)) return j.at(name).get<T>();
  return fallback;
}

ForestParams forest_params_from(const nlohmann::json& j) {
  ForestParams p;
  p.n_trees = get_or(j, "n_trees", p.n_trees);
  p.max_depth = get_or(j, "max_depth", p.max_depth);
  p.min_leaf = get_or(j, "min_leaf", p.min_leaf);
  p.max_features = get_or(j, "max_features", p.max_features);
  p.bootstrap = get_or(j, "bootstrap", p.bootstrap);
  return p;
}

GcnParams gcn_params_from(const nlohmann::json& j) {
  GcnParams p;
  p.hidden = get_or(j, "hidden", p.hidden);
  p.epochs = get_or(j, "epochs", p.epochs);
  p.step = get_or(j, "step", p.step);
  return p;
}

}  // namespace

std::unique_ptr<Model> train_model(const std::string& kind, const Dataset& data,
                                   const nlohmann::json& params,
                                   const std::optional<GraphSpec>& graph, std::uint64_t seed) {
  if (kind == "lag") return train_lag(data);
  if (kind == "mean") return train_mean(data);
  if (kind == "linreg") return train_linreg(data, get_or(params, "ridge", 1e-6));
  if (kind == "rf") return train_random_forest(data, forest_params_from(params), seed);
  if (kind == "gbt") {
    GbtParams p;
    p.n_rounds = get_or(params, "n_rounds", p.n_rounds);
    p.learning_rate = get_or(params, "learning_rate", p.learning_rate);
    p.max_depth = get_or(params, "max_depth", p.max_depth);
    p.min_leaf = get_or(params, "min_leaf", p.min_leaf);
    p.l2_leaf = get_or(params, "l2_leaf", p.l2_leaf);
    return train_gbt(data, p, seed);
  }
  if (kind == "mlp") {
    MlpParams p;
    p.hidden = get_or(params, "hidden", p.hidden);
    p.epochs = get_or(params, "epochs", p.epochs);
    p.batch = get_or(params, "batch", p.batch);
    p.step = get_or(params, "step", p.step);
    return train_mlp(data, p, seed);
  }
  if (kind == "gcn" || kind == "rf-gcn") {
    if (!graph)
      throw std::invalid_argument("model '" + kind + "' needs a graph; pass --routes");
    if (kind == "gcn") return train_gcn(data, *graph, gcn_params_from(params), seed);
    ForestParams rf = forest_params_from(params.contains("rf") ? params.at("rf")
                                                               : nlohmann::json::object());
    GcnParams gp = gcn_params_from(params.contains("gcn") ? params.at("gcn")
                                                          : nlohmann::json::object());
    return train_rf_gcn(data, *graph, rf, gp, seed);
  }
  throw std::invalid_argument("unknown model kind '" + kind + "'");
}

}  // namespace atp
