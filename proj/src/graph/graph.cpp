#include "atp/graph/graph.hpp"

#include <cmath>
#include <stdexcept>

namespace atp {

namespace {

GraphSpec finish(std::vector<std::string> nodes,
                 const std::vector<std::pair<int, int>>& edges) {
  GraphSpec g;
  g.nodes = std::move(nodes);
  const long n = static_cast<long>(g.nodes.size());
  g.adjacency = Eigen::MatrixXd::Zero(n, n);
  for (const auto& [a, b] : edges) {
    g.adjacency(a, b) = 1.0;
    g.adjacency(b, a) = 1.0;
  }
  g.normalized = normalize_adjacency(g.adjacency);
  for (int i = 0; i < n; ++i) g.node_index[g.nodes[i]] = i;
  return g;
}

int intern(std::vector<std::string>& nodes, std::map<std::string, int>& idx,
           const std::string& key) {
  auto it = idx.find(key);
  if (it != idx.end()) return it->second;
  const int i = static_cast<int>(nodes.size());
  nodes.push_back(key);
  idx.emplace(key, i);
  return i;
}

}  // namespace

int GraphSpec::index_of(const std::string& key) const {
  auto it = node_index.find(key);
  if (it == node_index.end())
    throw std::invalid_argument("key '" + key + "' is not a graph node");
  return it->second;
}

GraphSpec build_stop_graph(const std::vector<Route>& routes) {
  std::vector<std::string> nodes;
  std::map<std::string, int> idx;
  std::vector<std::pair<int, int>> edges;
  for (const auto& r : routes) {
    for (std::size_t i = 0; i + 1 < r.stops.size(); ++i) {
      const int a = intern(nodes, idx, r.stops[i]);
      const int b = intern(nodes, idx, r.stops[i + 1]);
      if (a != b) edges.emplace_back(a, b);
    }
  }
  return finish(std::move(nodes), edges);
}

GraphSpec build_segment_graph(const std::vector<Route>& routes) {
  std::vector<std::string> nodes;
  std::map<std::string, int> idx;
  std::vector<std::pair<int, int>> edges;
  for (const auto& r : routes) {
    int prev = -1;
    for (std::size_t i = 0; i + 1 < r.stops.size(); ++i) {
      if (r.stops[i] == r.stops[i + 1]) continue;
      const int cur = intern(nodes, idx, Segment{r.stops[i], r.stops[i + 1]}.key());
      if (prev >= 0 && prev != cur) edges.emplace_back(prev, cur);
      prev = cur;
    }
    // A loop's last segment feeds its first.
    if (r.is_loop() && prev >= 0) {
      const int first = intern(nodes, idx, Segment{r.stops[0], r.stops[1]}.key());
      if (prev != first) edges.emplace_back(prev, first);
    }
  }
  return finish(std::move(nodes), edges);
}

Eigen::MatrixXd normalize_adjacency(const Eigen::MatrixXd& a) {
  const long n = a.rows();
  if (a.cols() != n) throw std::invalid_argument("adjacency matrix must be square");
  for (long i = 0; i < n; ++i) {
    if (a(i, i) != 0.0) throw std::invalid_argument("adjacency diagonal must be zero");
    for (long j = 0; j < n; ++j) {
      if (a(i, j) != 0.0 && a(i, j) != 1.0)
        throw std::invalid_argument("adjacency entries must be 0 or 1");
      if (a(i, j) != a(j, i)) throw std::invalid_argument("adjacency must be symmetric");
    }
  }
  Eigen::MatrixXd with_self = a + Eigen::MatrixXd::Identity(n, n);
  Eigen::VectorXd inv_sqrt_deg(n);
  for (long i = 0; i < n; ++i) inv_sqrt_deg[i] = 1.0 / std::sqrt(with_self.row(i).sum());
  return inv_sqrt_deg.asDiagonal() * with_self * inv_sqrt_deg.asDiagonal();
}

std::vector<Snapshot> build_snapshots(const Dataset& data, const GraphSpec& graph) {
  std::vector<Observation> observations;
  observations.reserve(data.rows.size());
  for (const auto& r : data.rows)
    observations.push_back(Observation{r.vehicle_id, r.key, r.t, r.y});
  LagIndex index(std::move(observations), data.scope);

  std::vector<Snapshot> out;
  out.reserve(data.rows.size());
  const long n = static_cast<long>(graph.nodes.size());
  for (std::size_t ri = 0; ri < data.rows.size(); ++ri) {
    const FeatureRow& row = data.rows[ri];
    const int observed = graph.index_of(row.key);
    Snapshot snap;
    snap.x.resize(n, static_cast<long>(data.dim()));
    snap.y = Eigen::VectorXd::Zero(n);
    snap.mask.assign(static_cast<std::size_t>(n), false);
    snap.row_index = ri;
    for (long k = 0; k < n; ++k) {
      FeatureRow node_row = row;
      node_row.key = graph.nodes[static_cast<std::size_t>(k)];
      // The observed node keeps the row's own lags; the rest get their own
      // key's history at the same instant.
      if (k != observed) node_row.lags = index.query(row.vehicle_id, node_row.key, row.t);
      snap.x.row(k) = data.design_row(node_row);
    }
    snap.y[observed] = row.y;
    snap.mask[static_cast<std::size_t>(observed)] = true;
    out.push_back(std::move(snap));
  }
  return out;
}

}  // namespace atp
