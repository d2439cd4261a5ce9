#pragma once

#include <Eigen/Dense>
#include <map>
#include <string>
#include <vector>

#include "atp/core/types.hpp"
#include "atp/features/features.hpp"

namespace atp {

struct GraphSpec {
  std::vector<std::string> nodes;  // keys, first-appearance order
  Eigen::MatrixXd adjacency;       // symmetric binary, zero diagonal
  Eigen::MatrixXd normalized;      // D^{-1/2} (A + I) D^{-1/2}
  std::map<std::string, int> node_index;

  int index_of(const std::string& key) const;
};

// Nodes are stops; undirected edges join consecutive stops of any route.
GraphSpec build_stop_graph(const std::vector<Route>& routes);

// Nodes are directed segments; undirected edges join segments consecutive
// on some route (the first ends at the stop the second leaves).
GraphSpec build_segment_graph(const std::vector<Route>& routes);

// Throws std::invalid_argument unless A is square, symmetric, binary, and
// zero on the diagonal.
Eigen::MatrixXd normalize_adjacency(const Eigen::MatrixXd& a);

// Node-feature matrix for one event: row k carries node k's feature vector
// at the event time, mask marks the node whose target is observed.
struct Snapshot {
  Eigen::MatrixXd x;          // |V| x d
  Eigen::VectorXd y;          // |V|; meaningful only where mask is set
  std::vector<bool> mask;     // |V|
  std::size_t row_index = 0;  // originating dataset row
};

// One snapshot per dataset row. Row k of X uses the row's time, weather,
// and vehicle together with node k's latest lags strictly before the event
// time (same lag scope as the dataset).
std::vector<Snapshot> build_snapshots(const Dataset& data, const GraphSpec& graph);

}  // namespace atp
