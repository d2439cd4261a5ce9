#include <numeric>
#include <stdexcept>
#include <utility>

#include "atp/core/rng.hpp"
#include "model_impl.hpp"

namespace atp {

double GbtEnsemble::predict(const Eigen::Ref<const Eigen::VectorXd>& x) const {
  double out = base;
  for (const auto& tree : trees) out += learning_rate * tree.predict(x);
  return out;
}

GbtEnsemble fit_gbt(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const GbtParams& params,
                    std::uint64_t seed) {
  if (x.rows() == 0) throw std::invalid_argument("cannot fit boosting on an empty matrix");
  if (x.rows() != y.size()) throw std::invalid_argument("feature/target row count mismatch");
  if (params.learning_rate <= 0.0) throw std::invalid_argument("learning_rate must be > 0");
  if (params.n_rounds < 0) throw std::invalid_argument("n_rounds must be >= 0");

  GbtEnsemble ens;
  ens.base = y.mean();
  ens.learning_rate = params.learning_rate;
  ens.trees.reserve(static_cast<std::size_t>(params.n_rounds));
  ens.train_mse.reserve(static_cast<std::size_t>(params.n_rounds));

  const long n = x.rows();
  Eigen::VectorXd pred = Eigen::VectorXd::Constant(n, ens.base);
  std::vector<int> all(static_cast<std::size_t>(n));
  std::iota(all.begin(), all.end(), 0);

  TreeGrowParams grow;
  grow.max_depth = params.max_depth;
  grow.min_leaf = params.min_leaf;
  grow.max_features = 0;
  grow.l2_leaf = params.l2_leaf;
  grow.classification = false;

  for (int round = 0; round < params.n_rounds; ++round) {
    const Eigen::VectorXd residual = y - pred;
    std::mt19937_64 rng(derive_seed(seed, static_cast<std::uint64_t>(round)));
    DecisionTree tree = grow_tree(x, residual, all, grow, rng);
    for (long i = 0; i < n; ++i)
      pred[i] += params.learning_rate * tree.predict(x.row(i).transpose());
    ens.trees.push_back(std::move(tree));
    ens.train_mse.push_back((y - pred).squaredNorm() / static_cast<double>(n));
  }
  return ens;
}

// ---------------------------------------------------------------------------

double GbtModel::predict_row_raw(const FeatureRow& row) const {
  return ensemble.predict(design(row));
}

nlohmann::json GbtModel::hyperparams_json() const {
  return {{"n_rounds", params.n_rounds},
          {"learning_rate", params.learning_rate},
          {"max_depth", params.max_depth},
          {"min_leaf", params.min_leaf},
          {"l2_leaf", params.l2_leaf}};
}

void GbtModel::hyperparams_from_json(const nlohmann::json& j) {
  params.n_rounds = j.at("n_rounds").get<int>();
  params.learning_rate = j.at("learning_rate").get<double>();
  params.max_depth = j.at("max_depth").get<int>();
  params.min_leaf = j.at("min_leaf").get<int>();
  params.l2_leaf = j.at("l2_leaf").get<double>();
}

nlohmann::json GbtModel::params_json() const {
  nlohmann::json trees = nlohmann::json::array();
  for (const auto& t : ensemble.trees) trees.push_back(tree_to_json(t));
  return {{"base", ensemble.base},
          {"learning_rate", ensemble.learning_rate},
          {"trees", std::move(trees)},
          {"train_mse", ensemble.train_mse}};
}

void GbtModel::params_from_json(const nlohmann::json& j) {
  ensemble.base = j.at("base").get<double>();
  ensemble.learning_rate = j.at("learning_rate").get<double>();
  ensemble.trees.clear();
  for (const auto& t : j.at("trees")) ensemble.trees.push_back(tree_from_json(t));
  ensemble.train_mse = j.at("train_mse").get<std::vector<double>>();
}

std::unique_ptr<Model> train_gbt(const Dataset& data, const GbtParams& params,
                                 std::uint64_t seed) {
  if (data.rows.empty()) throw std::invalid_argument("cannot train on an empty dataset");
  auto m = std::make_unique<GbtModel>();
  m->init_meta("gbt", data, seed);
  m->params = params;
  m->ensemble = fit_gbt(data.design_matrix(), data.targets(), params, seed);
  return m;
}

}  // namespace atp
