#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <vector>

#include "atp/graph/graph.hpp"

using namespace atp;

namespace {

Route route_of(const std::vector<std::string>& stops, const std::string& id = "R1") {
  Route r;
  r.route_id = id;
  r.stops = stops;
  return r;
}

Eigen::MatrixXd permutation_matrix(const std::vector<int>& perm) {
  const long n = static_cast<long>(perm.size());
  Eigen::MatrixXd p = Eigen::MatrixXd::Zero(n, n);
  for (long i = 0; i < n; ++i) p(perm[i], i) = 1.0;
  return p;
}

}  // namespace

TEST_CASE("stop graph joins consecutive stops across all routes") {
  const GraphSpec g = build_stop_graph({route_of({"A", "B", "C"})});
  REQUIRE(g.nodes == std::vector<std::string>{"A", "B", "C"});
  CHECK(g.adjacency(0, 1) == 1.0);
  CHECK(g.adjacency(1, 2) == 1.0);
  CHECK(g.adjacency(0, 2) == 0.0);
  CHECK(g.adjacency.diagonal().isZero());
  CHECK(g.adjacency == g.adjacency.transpose());
  CHECK(g.index_of("B") == 1);

  const GraphSpec u = build_stop_graph({route_of({"A", "B", "C"}), route_of({"C", "B", "D"}, "R2")});
  REQUIRE(u.nodes == std::vector<std::string>{"A", "B", "C", "D"});
  CHECK(u.adjacency(u.index_of("A"), u.index_of("B")) == 1.0);
  CHECK(u.adjacency(u.index_of("B"), u.index_of("C")) == 1.0);
  CHECK(u.adjacency(u.index_of("B"), u.index_of("D")) == 1.0);
  CHECK(u.adjacency.sum() == 6.0);  // three undirected edges

  // A loop's duplicate terminal closes the ring without a self-edge.
  const GraphSpec ring = build_stop_graph({route_of({"A", "B", "C", "A"})});
  REQUIRE(ring.nodes.size() == 3);
  CHECK(ring.adjacency(ring.index_of("C"), ring.index_of("A")) == 1.0);
  CHECK(ring.adjacency.diagonal().isZero());
}

TEST_CASE("segment graph joins segments that share a stop in route order") {
  const GraphSpec g = build_segment_graph({route_of({"A", "B", "C", "D"})});
  REQUIRE(g.nodes == std::vector<std::string>{"A->B", "B->C", "C->D"});
  CHECK(g.adjacency(0, 1) == 1.0);
  CHECK(g.adjacency(1, 2) == 1.0);
  CHECK(g.adjacency(0, 2) == 0.0);
  CHECK(g.adjacency == g.adjacency.transpose());
}

TEST_CASE("adjacency normalization matches hand-computed operators") {
  Eigen::MatrixXd one = Eigen::MatrixXd::Zero(1, 1);
  const Eigen::MatrixXd n1 = normalize_adjacency(one);
  CHECK(std::abs(n1(0, 0) - 1.0) < 1e-12);

  Eigen::MatrixXd path2(2, 2);
  path2 << 0, 1, 1, 0;
  const Eigen::MatrixXd n2 = normalize_adjacency(path2);
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) CHECK(std::abs(n2(i, j) - 0.5) < 1e-12);

  Eigen::MatrixXd path3(3, 3);
  path3 << 0, 1, 0, 1, 0, 1, 0, 1, 0;
  const Eigen::MatrixXd n3 = normalize_adjacency(path3);
  const double s6 = 1.0 / std::sqrt(6.0);
  CHECK(std::abs(n3(0, 0) - 0.5) < 1e-12);
  CHECK(std::abs(n3(1, 1) - 1.0 / 3.0) < 1e-12);
  CHECK(std::abs(n3(2, 2) - 0.5) < 1e-12);
  CHECK(std::abs(n3(0, 1) - s6) < 1e-12);
  CHECK(std::abs(n3(1, 2) - s6) < 1e-12);
  CHECK(std::abs(n3(0, 2) - 0.0) < 1e-12);
  CHECK((n3 - n3.transpose()).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("adjacency validation rejects malformed inputs") {
  CHECK_THROWS_AS((void)normalize_adjacency(Eigen::MatrixXd::Zero(2, 3)),
                  std::invalid_argument);
  Eigen::MatrixXd asym(2, 2);
  asym << 0, 1, 0, 0;
  CHECK_THROWS_AS((void)normalize_adjacency(asym), std::invalid_argument);
  Eigen::MatrixXd selfloop(2, 2);
  selfloop << 1, 1, 1, 0;
  CHECK_THROWS_AS((void)normalize_adjacency(selfloop), std::invalid_argument);
  Eigen::MatrixXd weighted(2, 2);
  weighted << 0, 0.5, 0.5, 0;
  CHECK_THROWS_AS((void)normalize_adjacency(weighted), std::invalid_argument);
}

TEST_CASE("normalization commutes with node permutations") {
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  for (int rep = 0; rep < 20; ++rep) {
    const int n = 8;
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j)
        if (coin(rng) < 0.4) a(i, j) = a(j, i) = 1.0;

    std::vector<int> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    const Eigen::MatrixXd p = permutation_matrix(perm);

    const Eigen::MatrixXd lhs = normalize_adjacency(p * a * p.transpose());
    const Eigen::MatrixXd rhs = p * normalize_adjacency(a) * p.transpose();
    CHECK((lhs - rhs).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("the normalized operator has spectral radius at most one") {
  std::mt19937_64 rng(37);
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  for (int rep = 0; rep < 10; ++rep) {
    const int n = 12;
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j)
        if (coin(rng) < 0.3) a(i, j) = a(j, i) = 1.0;
    const Eigen::MatrixXd norm = normalize_adjacency(a);

    Eigen::VectorXd v = Eigen::VectorXd::Ones(n).normalized();
    double lambda = 0.0;
    for (int it = 0; it < 200; ++it) {
      Eigen::VectorXd w = norm * v;
      const double nw = w.norm();
      if (nw == 0.0) break;
      v = w / nw;
      lambda = nw;
    }
    CHECK(lambda <= 1.0 + 1e-9);
  }
}

namespace {

Dataset two_key_dataset() {
  Dataset data;
  data.target = TargetKind::kDwell;
  data.scope = LagScope::kFleet;
  data.vehicle_vocab = {"V1"};
  data.key_vocab = {"A", "B"};
  const TimestampMs base = parse_iso8601("2023-01-09T08:00:00Z");
  double y = 10.0;
  for (int i = 0; i < 6; ++i) {
    FeatureRow r;
    r.vehicle_id = "V1";
    r.key = i % 2 == 0 ? "A" : "B";
    r.t = base + i * kMsPerMinute;
    r.tau = encode_time(r.t);
    r.temp_c = 5.0;
    r.lags = Lags{y - 1.0, y - 2.0, false, false};
    r.y = y;
    data.rows.push_back(r);
    y += 3.0;
  }
  return data;
}

}  // namespace

TEST_CASE("snapshots mark exactly the observed node and mirror dataset rows") {
  const Dataset data = two_key_dataset();
  const GraphSpec graph = build_stop_graph({route_of({"A", "B"})});
  const auto snaps = build_snapshots(data, graph);
  REQUIRE(snaps.size() == data.rows.size());

  for (std::size_t i = 0; i < snaps.size(); ++i) {
    const Snapshot& s = snaps[i];
    CHECK(s.row_index == i);
    REQUIRE(s.mask.size() == 2);
    REQUIRE(s.x.rows() == 2);
    CHECK(s.x.cols() == static_cast<long>(data.dim()));
    int marked = 0;
    for (bool m : s.mask) marked += m ? 1 : 0;
    CHECK(marked == 1);
    const int node = graph.index_of(data.rows[i].key);
    CHECK(s.mask[node]);
    CHECK(s.y[node] == doctest::Approx(data.rows[i].y));
    // The observed node's feature row is exactly the dataset design row.
    const Eigen::VectorXd expect = data.design_row(data.rows[i]);
    CHECK((s.x.row(node).transpose() - expect).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("single-node graphs mask their only node in every snapshot") {
  Dataset data = two_key_dataset();
  data.key_vocab = {"A"};
  std::vector<FeatureRow> only_a;
  for (const auto& r : data.rows)
    if (r.key == "A") only_a.push_back(r);
  data.rows = only_a;

  const GraphSpec graph = build_stop_graph({route_of({"A", "A"})});
  REQUIRE(graph.nodes.size() == 1);
  const auto snaps = build_snapshots(data, graph);
  REQUIRE(snaps.size() == data.rows.size());
  for (const auto& s : snaps) {
    REQUIRE(s.mask.size() == 1);
    CHECK(s.mask[0]);
  }
}
