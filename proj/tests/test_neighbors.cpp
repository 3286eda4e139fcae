#include "lpa/neighbors.hpp"

#include "doctest.h"
#include "helpers.hpp"
#include "oracles.hpp"

using namespace lpa;
using lpa::testing::random_matrix;

TEST_CASE("one-point index: self-excluding queries come back empty") {
  Matrix pts(1, 3);
  pts << 1.0, 2.0, 3.0;
  KdIndex index(pts);
  CHECK(index.size() == 1);
  CHECK(index.knn(0, 1).empty());
}

TEST_CASE("collinear points: nearest neighbor and distance by hand") {
  Matrix pts(3, 1);
  pts << 0.0, 1.0, 3.0;
  KdIndex index(pts);
  auto got = index.knn(0, 1);
  REQUIRE(got.size() == 1);
  CHECK(got[0].id == 1);
  CHECK(got[0].distance == 1.0);
}

TEST_CASE("k = n-1 with self-exclusion returns all others, sorted") {
  Rng rng(3);
  Matrix pts = random_matrix(30, 4, rng);
  KdIndex index(pts);
  auto got = index.knn(7, 29);
  REQUIRE(got.size() == 29);
  for (std::size_t i = 0; i + 1 < got.size(); ++i) {
    CHECK(got[i].distance <= got[i + 1].distance);
  }
  std::vector<bool> seen(30, false);
  for (const Neighbor& nb : got) seen[static_cast<std::size_t>(nb.id)] = true;
  CHECK(!seen[7]);
}

TEST_CASE("duplicated points are each other's zero-distance neighbors") {
  Matrix pts(4, 2);
  pts << 5.0, 5.0, 1.0, 2.0, 5.0, 5.0, -3.0, 0.5;
  KdIndex index(pts);
  auto a = index.knn(0, 1);
  auto b = index.knn(2, 1);
  REQUIRE(a.size() == 1);
  CHECK(a[0].id == 2);
  CHECK(a[0].distance == 0.0);
  CHECK(b[0].id == 0);
  CHECK(b[0].distance == 0.0);
}

TEST_CASE("kd-tree equals the linear scan on random data, every query") {
  Rng rng(17);
  Matrix pts = random_matrix(200, 10, rng);
  KdIndex index(pts);
  for (Index q = 0; q < pts.rows(); ++q) {
    auto got = index.knn(q, 5);
    auto want = oracle::brute_knn(pts, pts.row(q), 5, q);
    REQUIRE(got.size() == want.size());
    for (std::size_t i = 0; i < got.size(); ++i) {
      CHECK(got[i].id == want[i].id);
      CHECK(got[i].distance == want[i].distance);  // identical bits, not approx
    }
  }
}

TEST_CASE("wider random instance matches the oracle result set exactly") {
  Rng rng(23);
  Matrix pts = random_matrix(500, 16, rng);
  KdIndex index(pts);
  for (Index q = 0; q < pts.rows(); q += 13) {
    auto got = index.knn(q, 10);
    auto want = oracle::brute_knn(pts, pts.row(q), 10, q);
    REQUIRE(got.size() == 10);
    for (std::size_t i = 0; i < got.size(); ++i) {
      CHECK(got[i].id == want[i].id);
      CHECK(got[i].distance == want[i].distance);
    }
  }
}

TEST_CASE("external query points work without an exclusion") {
  Rng rng(29);
  Matrix pts = random_matrix(100, 6, rng);
  KdIndex index(pts);
  Eigen::RowVectorXd q(6);
  for (Index j = 0; j < 6; ++j) q(j) = rng.gaussian();
  auto got = index.knn_point(q, 8);
  auto want = oracle::brute_knn(pts, q, 8, -1);
  REQUIRE(got.size() == 8);
  for (std::size_t i = 0; i < got.size(); ++i) {
    CHECK(got[i].id == want[i].id);
    CHECK(got[i].distance == want[i].distance);
  }
}

TEST_CASE("tied distances rank by id") {
  // Four corners of a square: both horizontal/vertical neighbors tie.
  Matrix pts(4, 2);
  pts << 0.0, 0.0, 1.0, 0.0, 0.0, 1.0, 1.0, 1.0;
  KdIndex index(pts);
  auto got = index.knn(0, 2);
  REQUIRE(got.size() == 2);
  CHECK(got[0].id == 1);
  CHECK(got[1].id == 2);
  CHECK(got[0].distance == got[1].distance);
}

TEST_CASE("requesting more neighbors than exist is an error") {
  Rng rng(31);
  Matrix pts = random_matrix(5, 2, rng);
  KdIndex index(pts);
  CHECK_THROWS_AS(index.knn(0, 5), ConfigError);   // only 4 candidates after exclusion
  CHECK_THROWS_AS(index.knn_point(pts.row(0), 6), ConfigError);
  CHECK(index.knn_point(pts.row(0), 5).size() == 5);
}

TEST_CASE("graph over collinear points picks the hand-known neighbors") {
  Matrix pts(3, 1);
  pts << 0.0, 1.0, 3.0;
  KdIndex index(pts);
  NeighborGraph g = build_graph(index, 1);
  REQUIRE(g.rows() == 3);
  CHECK(g.neighbor_ids(0, 0) == 1);
  CHECK(g.neighbor_ids(1, 0) == 0);
  CHECK(g.neighbor_ids(2, 0) == 1);
}

TEST_CASE("graph over duplicated rows has zero-distance first neighbors") {
  Matrix pts(4, 2);
  pts << 2.0, 2.0, 2.0, 2.0, 7.0, 7.0, 7.0, 7.0;
  KdIndex index(pts);
  NeighborGraph g = build_graph(index, 1);
  for (Index i = 0; i < 4; ++i) CHECK(g.distances(i, 0) == 0.0);
}

TEST_CASE("graph rows equal per-row oracle calls") {
  Rng rng(37);
  Matrix pts = random_matrix(80, 5, rng);
  KdIndex index(pts);
  NeighborGraph g = build_graph(index, 6);
  for (Index i = 0; i < pts.rows(); ++i) {
    auto want = oracle::brute_knn(pts, pts.row(i), 6, i);
    for (Index j = 0; j < 6; ++j) {
      CHECK(g.neighbor_ids(i, j) == want[static_cast<std::size_t>(j)].id);
      CHECK(g.distances(i, j) == want[static_cast<std::size_t>(j)].distance);
    }
  }
}

TEST_CASE("graph k bounds are enforced") {
  Rng rng(41);
  Matrix pts = random_matrix(10, 3, rng);
  KdIndex index(pts);
  CHECK_THROWS_AS(build_graph(index, 0), ConfigError);
  CHECK_THROWS_AS(build_graph(index, 10), ConfigError);
  CHECK(build_graph(index, 9).rows() == 10);
}
