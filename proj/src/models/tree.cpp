#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "atp/core/rng.hpp"
#include "model_impl.hpp"

namespace atp {

double DecisionTree::predict(const Eigen::Ref<const Eigen::VectorXd>& x) const {
  if (nodes.empty()) throw std::logic_error("prediction on an empty tree");
  int i = 0;
  while (nodes[i].feature >= 0)
    i = x[nodes[i].feature] <= nodes[i].threshold ? nodes[i].left : nodes[i].right;
  return nodes[i].value;
}

namespace {

struct Builder {
  const Eigen::MatrixXd& x;
  const Eigen::VectorXd& y;
  const TreeGrowParams& params;
  std::mt19937_64& rng;
  std::vector<TreeNode> nodes;

  double leaf_value(const std::vector<int>& idx) const {
    if (params.classification) {
      std::size_t ones = 0;
      for (int i : idx) ones += y[i] == 1.0 ? 1 : 0;
      // Ties vote for class 1.
      return 2 * ones >= idx.size() ? 1.0 : 0.0;
    }
    double sum = 0.0;
    for (int i : idx) sum += y[i];
    return sum / (static_cast<double>(idx.size()) + params.l2_leaf);
  }

  // Candidate features for one split: all of them in index order, or a
  // seeded subset without replacement.
  std::vector<int> candidate_features() {
    const int d = static_cast<int>(x.cols());
    std::vector<int> all(d);
    std::iota(all.begin(), all.end(), 0);
    if (params.max_features <= 0 || params.max_features >= d) return all;
    for (int i = 0; i < params.max_features; ++i) {
      std::uniform_int_distribution<int> pick(i, d - 1);
      std::swap(all[i], all[pick(rng)]);
    }
    all.resize(params.max_features);
    return all;
  }

  struct Split {
    int feature = -1;
    double threshold = 0.0;
    double score = 0.0;
    bool valid = false;
  };

  Split best_split(const std::vector<int>& idx) {
    Split best;
    const auto n = idx.size();
    std::vector<std::pair<double, double>> vals(n);  // (feature value, target)
    for (const int f : candidate_features()) {
      for (std::size_t i = 0; i < n; ++i) vals[i] = {x(idx[i], f), y[idx[i]]};
      std::sort(vals.begin(), vals.end());
      if (vals.front().first == vals.back().first) continue;
      double left_sum = 0.0, left_ones = 0.0;
      double total_sum = 0.0, total_ones = 0.0;
      for (const auto& [v, t] : vals) {
        total_sum += t;
        total_ones += t == 1.0 ? 1.0 : 0.0;
      }
      for (std::size_t i = 0; i + 1 < n; ++i) {
        left_sum += vals[i].second;
        left_ones += vals[i].second == 1.0 ? 1.0 : 0.0;
        if (vals[i].first == vals[i + 1].first) continue;
        const auto nl = static_cast<double>(i + 1);
        const auto nr = static_cast<double>(n - i - 1);
        if (nl < params.min_leaf || nr < params.min_leaf) continue;
        double score;
        if (params.classification) {
          // Negated weighted Gini impurity, so larger is better.
          const double pl = left_ones / nl;
          const double pr = (total_ones - left_ones) / nr;
          score = -(nl * 2.0 * pl * (1.0 - pl) + nr * 2.0 * pr * (1.0 - pr));
        } else {
          // Equivalent to squared-error reduction up to a constant.
          const double right_sum = total_sum - left_sum;
          score = left_sum * left_sum / nl + right_sum * right_sum / nr;
        }
        if (!best.valid || score > best.score) {
          best.valid = true;
          best.score = score;
          best.feature = f;
          best.threshold = (vals[i].first + vals[i + 1].first) / 2.0;
        }
      }
    }
    return best;
  }

  int build(const std::vector<int>& idx, int depth) {
    const int node_id = static_cast<int>(nodes.size());
    nodes.emplace_back();
    bool constant = true;
    for (std::size_t i = 1; i < idx.size() && constant; ++i)
      constant = y[idx[i]] == y[idx[0]];
    if (depth >= params.max_depth || idx.size() < 2 * static_cast<std::size_t>(params.min_leaf) ||
        constant) {
      nodes[node_id].value = leaf_value(idx);
      return node_id;
    }
    const Split split = best_split(idx);
    if (!split.valid) {
      nodes[node_id].value = leaf_value(idx);
      return node_id;
    }
    std::vector<int> left, right;
    for (int i : idx)
      (x(i, split.feature) <= split.threshold ? left : right).push_back(i);
    nodes[node_id].feature = split.feature;
    nodes[node_id].threshold = split.threshold;
    nodes[node_id].left = build(left, depth + 1);
    nodes[node_id].right = build(right, depth + 1);
    return node_id;
  }
};

}  // namespace

DecisionTree grow_tree(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                       const std::vector<int>& samples, const TreeGrowParams& params,
                       std::mt19937_64& rng) {
  if (samples.empty()) throw std::invalid_argument("cannot grow a tree on zero samples");
  if (params.max_features > x.cols())
    throw std::invalid_argument("max_features exceeds the feature count");
  Builder b{x, y, params, rng, {}};
  b.build(samples, 0);
  DecisionTree t;
  t.nodes = std::move(b.nodes);
  return t;
}

double Forest::predict(const Eigen::Ref<const Eigen::VectorXd>& x) const {
  if (trees.empty()) throw std::logic_error("prediction on an empty forest");
  if (classification) {
    std::size_t ones = 0;
    for (const auto& t : trees) ones += t.predict(x) >= 0.5 ? 1 : 0;
    return 2 * ones >= trees.size() ? 1.0 : 0.0;
  }
  double sum = 0.0;
  for (const auto& t : trees) sum += t.predict(x);
  return sum / static_cast<double>(trees.size());
}

Forest fit_forest(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                  const ForestParams& params, bool classification, std::uint64_t seed) {
  if (x.rows() == 0) throw std::invalid_argument("cannot train on an empty dataset");
  if (params.n_trees <= 0) throw std::invalid_argument("n_trees must be positive");
  if (params.max_features > x.cols())
    throw std::invalid_argument("max_features exceeds the feature count");
  if (classification) {
    for (long i = 0; i < y.size(); ++i)
      if (y[i] != 0.0 && y[i] != 1.0)
        throw std::invalid_argument("classification targets must be 0 or 1");
  }
  TreeGrowParams grow;
  grow.max_depth = params.max_depth;
  grow.min_leaf = params.min_leaf;
  grow.max_features = params.max_features > 0
                          ? params.max_features
                          : static_cast<int>(std::lround(std::sqrt(static_cast<double>(x.cols()))));
  grow.classification = classification;

  Forest f;
  f.classification = classification;
  const int n = static_cast<int>(x.rows());
  for (int t = 0; t < params.n_trees; ++t) {
    std::mt19937_64 rng(derive_seed(seed, static_cast<std::uint64_t>(t)));
    std::vector<int> samples(n);
    if (params.bootstrap) {
      std::uniform_int_distribution<int> pick(0, n - 1);
      for (int& s : samples) s = pick(rng);
    } else {
      std::iota(samples.begin(), samples.end(), 0);
    }
    f.trees.push_back(grow_tree(x, y, samples, grow, rng));
  }
  return f;
}

// ---------------------------------------------------------------------------

double RfModel::predict_row_raw(const FeatureRow& row) const {
  return forest.predict(design(row));
}

nlohmann::json RfModel::hyperparams_json() const {
  return {{"n_trees", params.n_trees},
          {"max_depth", params.max_depth},
          {"min_leaf", params.min_leaf},
          {"max_features", params.max_features},
          {"bootstrap", params.bootstrap}};
}

void RfModel::hyperparams_from_json(const nlohmann::json& j) {
  params.n_trees = j.at("n_trees").get<int>();
  params.max_depth = j.at("max_depth").get<int>();
  params.min_leaf = j.at("min_leaf").get<int>();
  params.max_features = j.at("max_features").get<int>();
  params.bootstrap = j.at("bootstrap").get<bool>();
}

std::unique_ptr<Model> train_random_forest(const Dataset& data, const ForestParams& params,
                                           std::uint64_t seed, ForestTask task) {
  if (data.rows.empty()) throw std::invalid_argument("cannot train on an empty dataset");
  auto m = std::make_unique<RfModel>();
  m->init_meta("rf", data, seed);
  m->params = params;
  m->is_classifier_ = task == ForestTask::kBinaryClassification;
  m->forest = fit_forest(data.design_matrix(), data.targets(), params, m->is_classifier_, seed);
  return m;
}

}  // namespace atp
