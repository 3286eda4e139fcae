#include "lpa/lle.hpp"

#include <cmath>

#include "doctest.h"
#include "helpers.hpp"
#include "oracles.hpp"

using namespace lpa;
using lpa::testing::message_of;
using lpa::testing::random_matrix;

namespace {

NeighborGraph graph_of(const Matrix& pts, Index k) {
  KdIndex index(pts);
  return build_graph(index, k);
}

}  // namespace

TEST_CASE("k=1 weight rows are forced to one") {
  Rng rng(2);
  Matrix pts = random_matrix(6, 3, rng);
  LleWeights w = solve_weights_closed(pts, graph_of(pts, 1), 1e-3);
  for (Index i = 0; i < w.rows(); ++i) CHECK(w.w(i, 0) == 1.0);
}

TEST_CASE("midpoint between symmetric neighbors splits evenly") {
  Matrix pts(3, 2);
  pts << 0.0, 0.0, 1.0, 0.0, -1.0, 0.0;  // point 0 is the midpoint of 1 and 2
  LleWeights w = solve_weights_closed(pts, graph_of(pts, 2), 1e-3);
  CHECK(w.w(0, 0) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(w.w(0, 1) == doctest::Approx(0.5).epsilon(1e-12));
  // and the reconstruction there is exact
  Vector recon = w.w(0, 0) * pts.row(1) + w.w(0, 1) * pts.row(2);
  CHECK(recon.norm() == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("closed form matches the dense KKT oracle") {
  Rng rng(7);
  for (int trial = 0; trial < 10; ++trial) {
    Matrix pts = random_matrix(12, 3, rng);
    NeighborGraph g = graph_of(pts, 3);
    LleWeights w = solve_weights_closed(pts, g, 1e-3);
    for (Index i = 0; i < pts.rows(); ++i) {
      std::vector<Index> nbrs;
      for (Index j = 0; j < 3; ++j) nbrs.push_back(g.neighbor_ids(i, j));
      Vector want = oracle::kkt_lle_row(pts, i, nbrs);
      for (Index j = 0; j < 3; ++j) {
        CHECK(std::abs(w.w(i, j) - want(j)) <= 1e-8);
      }
    }
  }
}

TEST_CASE("weight rows sum to one") {
  Rng rng(9);
  Matrix pts = random_matrix(60, 8, rng);
  for (Index k : {2, 5, 7}) {
    LleWeights w = solve_weights_closed(pts, graph_of(pts, k), 1e-3);
    for (Index i = 0; i < w.rows(); ++i) {
      CHECK(std::abs(w.w.row(i).sum() - 1.0) <= 1e-8);
    }
  }
}

TEST_CASE("weights are invariant to uniform scaling and translation") {
  Rng rng(13);
  Matrix pts = random_matrix(40, 6, rng);
  NeighborGraph g = graph_of(pts, 4);
  LleWeights base = solve_weights_closed(pts, g, 1e-3);
  for (double alpha : {0.1, 10.0}) {
    Matrix scaled = alpha * pts;
    LleWeights w = solve_weights_closed(scaled, g, 1e-3);
    CHECK((w.w - base.w).cwiseAbs().maxCoeff() <= 1e-8);
  }
  Matrix shifted = pts;
  Eigen::RowVectorXd t(6);
  for (Index j = 0; j < 6; ++j) t(j) = rng.uniform(-5.0, 5.0);
  shifted.rowwise() += t;
  LleWeights w = solve_weights_closed(shifted, g, 1e-3);
  CHECK((w.w - base.w).cwiseAbs().maxCoeff() <= 1e-8);
}

TEST_CASE("collinear triple reconstructs exactly from the line") {
  Matrix pts(3, 1);
  pts << 0.0, 1.0, 2.0;
  NeighborGraph g = graph_of(pts, 2);
  // k > d makes the Gram singular, so a ridge is mandatory; keep it tiny so
  // it does not disturb the exact solution being asserted.
  LleWeights w = solve_weights_closed(pts, g, 1e-12);
  // Each point lies in the affine hull of the other two (endpoints need a
  // negative coefficient), so the total reconstruction loss vanishes.
  CHECK(lle_loss(pts, g, w) == doctest::Approx(0.0).epsilon(1e-18));
}

TEST_CASE("point inside its neighbors' affine hull contributes zero loss") {
  Matrix pts(4, 2);
  pts << 0.25, 0.75, 1.0, 0.0, 0.0, 1.0, 9.0, 9.0;  // p0 = 0.25·p1 + 0.75·p2
  NeighborGraph g = graph_of(pts, 2);
  // p0's difference vectors are anti-parallel (it sits on the p1–p2 segment),
  // so the Gram is singular; a vanishing ridge keeps the solve exact.
  LleWeights w = solve_weights_closed(pts, g, 1e-12);
  std::vector<Index> only{0};
  CHECK(lle_loss_at(pts, g, w, only) == doctest::Approx(0.0).epsilon(1e-16));
}

TEST_CASE("sum-preserving perturbations never improve the optimum") {
  Rng rng(19);
  Matrix pts = random_matrix(25, 4, rng);
  NeighborGraph g = graph_of(pts, 3);
  LleWeights w = solve_weights_closed(pts, g, 0.0);
  double best = lle_loss(pts, g, w);
  for (int trial = 0; trial < 100; ++trial) {
    LleWeights jittered = w;
    Index row = rng.below(w.rows());
    Vector dir(3);
    for (Index j = 0; j < 3; ++j) dir(j) = rng.gaussian();
    dir.array() -= dir.mean();  // keep the row sum fixed
    jittered.w.row(row) += 0.05 * dir.transpose();
    CHECK(lle_loss(pts, g, jittered) >= best - 1e-12);
  }
}

TEST_CASE("ridge engages only when the system needs it") {
  // k > d forces regularization
  Rng rng(23);
  Matrix pts = random_matrix(10, 2, rng);
  NeighborGraph g = graph_of(pts, 4);
  LleWeights w = solve_weights_closed(pts, g, 1e-3);
  for (Index i = 0; i < w.rows(); ++i) CHECK(std::abs(w.w.row(i).sum() - 1.0) <= 1e-10);

  std::string msg =
      message_of<ConfigError>([&] { solve_weights_closed(pts, g, 0.0); });
  CHECK(msg.find("regularization needed but ridge is 0") != std::string::npos);
}

TEST_CASE("degenerate duplicate neighbors require the ridge") {
  Matrix pts(3, 2);
  pts << 0.0, 0.0, 1.0, 1.0, 1.0, 1.0;  // point 0's two neighbors coincide
  NeighborGraph g = graph_of(pts, 2);
  CHECK_THROWS_AS(solve_weights_closed(pts, g, 0.0), ConfigError);
  LleWeights w = solve_weights_closed(pts, g, 1e-3);
  CHECK(std::abs(w.w.row(0).sum() - 1.0) <= 1e-10);
}

TEST_CASE("loss gradient matches finite differences") {
  Rng rng(29);
  Matrix pts = random_matrix(15, 3, rng);
  NeighborGraph g = graph_of(pts, 4);
  LleWeights w = solve_weights_closed(pts, g, 1e-3);
  // probe away from the optimum so the gradient is nonzero
  for (Index i = 0; i < w.rows(); ++i) {
    for (Index j = 0; j < 4; ++j) w.w(i, j) += 0.1 * rng.gaussian();
  }
  Matrix analytic = lle_loss_grad(pts, g, w);

  Vector flat(w.rows() * 4);
  for (Index i = 0; i < w.rows(); ++i) {
    for (Index j = 0; j < 4; ++j) flat(i * 4 + j) = w.w(i, j);
  }
  auto f = [&](const Vector& x) {
    LleWeights probe = w;
    for (Index i = 0; i < w.rows(); ++i) {
      for (Index j = 0; j < 4; ++j) probe.w(i, j) = x(i * 4 + j);
    }
    return lle_loss(pts, g, probe);
  };
  Vector numeric = oracle::fd_gradient(f, flat);
  Vector analytic_flat(flat.size());
  for (Index i = 0; i < w.rows(); ++i) {
    for (Index j = 0; j < 4; ++j) analytic_flat(i * 4 + j) = analytic(i, j);
  }
  CHECK(oracle::max_grad_err(analytic_flat, numeric) <= 1e-4);
}

TEST_CASE("sgd with zero epochs returns the uniform start") {
  Rng rng(31);
  Matrix pts = random_matrix(12, 3, rng);
  NeighborGraph g = graph_of(pts, 4);
  OptimizerConfig opt;
  opt.epochs = 0;
  LleWeights w = fit_weights_sgd(pts, g, opt);
  for (Index i = 0; i < w.rows(); ++i) {
    for (Index j = 0; j < 4; ++j) CHECK(w.w(i, j) == 0.25);
  }
}

TEST_CASE("sgd converges to the symmetric midpoint split") {
  Matrix pts(3, 2);
  pts << 0.0, 0.0, 1.0, 0.0, -1.0, 0.0;
  OptimizerConfig opt;
  opt.learning_rate = 0.05;
  opt.epochs = 2000;
  LleWeights w = fit_weights_sgd(pts, graph_of(pts, 2), opt);
  CHECK(std::abs(w.w(0, 0) - 0.5) <= 1e-4);
  CHECK(std::abs(w.w(0, 1) - 0.5) <= 1e-4);
}

TEST_CASE("sgd lands within 1% of the closed-form loss") {
  Rng rng(37);
  Matrix pts = random_matrix(20, 5, rng);
  NeighborGraph g = graph_of(pts, 3);
  double closed = lle_loss(pts, g, solve_weights_closed(pts, g, 1e-3));
  OptimizerConfig opt;
  opt.learning_rate = 0.02;
  opt.epochs = 4000;
  double sgd = lle_loss(pts, g, fit_weights_sgd(pts, g, opt));
  CHECK(sgd <= 1.01 * closed + 1e-12);
}

TEST_CASE("weight rows stay sum-to-one through sgd") {
  Rng rng(41);
  Matrix pts = random_matrix(15, 4, rng);
  NeighborGraph g = graph_of(pts, 3);
  OptimizerConfig opt;
  opt.learning_rate = 0.02;
  opt.epochs = 50;
  LleWeights w = fit_weights_sgd(pts, g, opt);
  for (Index i = 0; i < w.rows(); ++i) {
    CHECK(std::abs(w.w.row(i).sum() - 1.0) <= 1e-9);
  }
}

TEST_CASE("divergent sgd reports the step in a DivergenceError") {
  Rng rng(43);
  Matrix pts = random_matrix(10, 3, rng, 100.0);
  NeighborGraph g = graph_of(pts, 3);
  OptimizerConfig opt;
  opt.learning_rate = 1e6;  // guaranteed blow-up
  opt.epochs = 100;
  std::string msg = message_of<DivergenceError>([&] { fit_weights_sgd(pts, g, opt); });
  CHECK(msg.find("diverged") != std::string::npos);
}
