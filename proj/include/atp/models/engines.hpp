#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <random>
#include <vector>

#include "atp/graph/graph.hpp"

namespace atp {

// ---------------------------------------------------------------------------
// Decision trees

struct TreeNode {
  int feature = -1;  // -1 marks a leaf
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  double value = 0.0;  // leaf payload: mean target or class fraction
};

struct DecisionTree {
  std::vector<TreeNode> nodes;

  bool empty() const { return nodes.empty(); }
  double predict(const Eigen::Ref<const Eigen::VectorXd>& x) const;
};

struct TreeGrowParams {
  int max_depth = 6;
  int min_leaf = 1;
  int max_features = 0;  // 0 means all features, deterministic order
  double l2_leaf = 0.0;  // leaf value = sum(y) / (n + l2_leaf)
  bool classification = false;
};

// CART on the sample subset: regression splits maximize squared-error
// reduction, classification splits minimize weighted Gini impurity.
// Thresholds are midpoints between adjacent distinct values; ties keep the
// first candidate in (feature, threshold) iteration order.
DecisionTree grow_tree(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                       const std::vector<int>& samples, const TreeGrowParams& params,
                       std::mt19937_64& rng);

struct ForestParams {
  int n_trees = 200;
  int max_depth = 12;
  int min_leaf = 2;
  int max_features = 0;  // 0 means round(sqrt(d))
  bool bootstrap = true;
};

struct Forest {
  std::vector<DecisionTree> trees;
  bool classification = false;

  // Mean of tree outputs (regression) or majority vote with ties broken
  // toward class 1 (classification).
  double predict(const Eigen::Ref<const Eigen::VectorXd>& x) const;
};

Forest fit_forest(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                  const ForestParams& params, bool classification, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Gradient-boosted trees (first-order, squared error)

struct GbtParams {
  int n_rounds = 300;
  double learning_rate = 0.1;
  int max_depth = 4;
  int min_leaf = 1;
  double l2_leaf = 1.0;
};

struct GbtEnsemble {
  double base = 0.0;  // training-target mean
  double learning_rate = 0.1;
  std::vector<DecisionTree> trees;
  std::vector<double> train_mse;  // per round, after applying the round

  double predict(const Eigen::Ref<const Eigen::VectorXd>& x) const;
};

GbtEnsemble fit_gbt(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const GbtParams& params,
                    std::uint64_t seed);

// ---------------------------------------------------------------------------
// Adam over a flat parameter vector

struct Adam {
  double step = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  Eigen::VectorXd m;
  Eigen::VectorXd v;
  long t = 0;

  void update(Eigen::VectorXd& params, const Eigen::VectorXd& grad);
};

// ---------------------------------------------------------------------------
// Multi-layer perceptron (ReLU hidden layers, linear scalar output)

struct MlpParams {
  std::vector<int> hidden = {64, 64};
  int epochs = 300;
  int batch = 32;
  double step = 1e-3;
};

struct MlpNet {
  std::vector<Eigen::MatrixXd> w;  // layer l: in x out
  std::vector<Eigen::VectorXd> b;

  // He-normal hidden weights, zero output weights, output bias as given.
  static MlpNet init(int input_dim, const std::vector<int>& hidden, double output_bias,
                     std::mt19937_64& rng);

  double predict(const Eigen::Ref<const Eigen::VectorXd>& x) const;
  Eigen::VectorXd flatten() const;
  void unflatten(const Eigen::Ref<const Eigen::VectorXd>& flat);
  long n_params() const;
};

// Mean squared error over the given rows; when grad is non-null it receives
// d(loss)/d(params) in flatten() layout.
double mlp_loss_and_grad(const MlpNet& net, const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                         Eigen::VectorXd* grad);

// Mini-batch Adam; throws std::runtime_error if the loss turns non-finite.
MlpNet fit_mlp(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const MlpParams& params,
               std::uint64_t seed);

// ---------------------------------------------------------------------------
// Two-layer graph convolution (per-node scalar output)

struct GcnParams {
  int hidden = 64;
  int epochs = 500;
  double step = 1e-3;
};

struct GcnNet {
  Eigen::MatrixXd w0;  // d x hidden
  Eigen::VectorXd b0;  // hidden
  Eigen::VectorXd w1;  // hidden
  double b1 = 0.0;

  static GcnNet init(int input_dim, int hidden, double output_bias, std::mt19937_64& rng);

  // H = relu(A_hat X W0 + b0); y = A_hat H w1 + b1.
  Eigen::VectorXd forward(const Eigen::MatrixXd& a_hat, const Eigen::MatrixXd& x) const;
  Eigen::VectorXd flatten() const;
  void unflatten(const Eigen::Ref<const Eigen::VectorXd>& flat);
  long n_params() const;
};

// Mean squared error over masked nodes across all snapshots.
double gcn_loss_and_grad(const GcnNet& net, const Eigen::MatrixXd& a_hat,
                         const std::vector<Snapshot>& snapshots, Eigen::VectorXd* grad);

// Full-batch Adam; throws std::runtime_error if the loss turns non-finite.
GcnNet fit_gcn(const Eigen::MatrixXd& a_hat, const std::vector<Snapshot>& snapshots,
               const GcnParams& params, std::uint64_t seed);

}  // namespace atp
