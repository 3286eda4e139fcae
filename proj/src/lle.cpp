#include "lpa/lle.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <cstdio>
#include <fstream>

namespace lpa {

namespace {

constexpr double kMaxCondition = 1e10;

void check_shapes(const Matrix& m, const NeighborGraph& g, const LleWeights& w) {
  if (g.rows() != m.rows()) throw ConfigError("neighbor graph does not match the matrix");
  if (w.rows() != m.rows() || w.w.cols() != g.k) {
    throw ConfigError("weight matrix does not match the neighbor graph");
  }
}

// m_i − Σ_j w_ij m_{n_ij} for one point.
Eigen::RowVectorXd residual(const Matrix& m, const NeighborGraph& g, const LleWeights& w,
                            Index i) {
  Eigen::RowVectorXd rec = Eigen::RowVectorXd::Zero(m.cols());
  for (Index j = 0; j < g.k; ++j) rec += w.w(i, j) * m.row(g.neighbor_ids(i, j));
  return m.row(i) - rec;
}

}  // namespace

LleWeights solve_weights_closed(const Matrix& m, const NeighborGraph& g, double ridge) {
  if (g.rows() != m.rows()) throw ConfigError("neighbor graph does not match the matrix");
  if (ridge < 0.0) throw ConfigError("ridge must be non-negative");
  const Index n = m.rows(), d = m.cols(), k = g.k;

  LleWeights out;
  out.k = k;
  out.w.resize(n, k);
  if (k == 1) {
    // The sum-to-one constraint pins the single coefficient.
    out.w.setOnes();
    return out;
  }

  Matrix diffs(k, d);
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < k; ++j) diffs.row(j) = m.row(i) - m.row(g.neighbor_ids(i, j));
    Matrix c = diffs * diffs.transpose();  // local Gram of difference vectors

    bool need_ridge = k > d;
    if (!need_ridge) {
      Eigen::SelfAdjointEigenSolver<Matrix> es(c, Eigen::EigenvaluesOnly);
      double lo = es.eigenvalues().minCoeff();
      double hi = es.eigenvalues().maxCoeff();
      need_ridge = lo <= 0.0 || hi > kMaxCondition * lo;
    }
    if (need_ridge) {
      if (ridge == 0.0) {
        throw ConfigError("singular system solving weights for point " + std::to_string(i) +
                          ": regularization needed but ridge is 0");
      }
      double tr = c.trace();
      c.diagonal().array() += ridge * (tr > 0.0 ? tr : 1.0);
    }

    Vector z = c.ldlt().solve(Vector::Ones(k));
    double s = z.sum();
    if (!z.allFinite() || std::abs(s) < 1e-12) {
      throw ConfigError("singular system solving weights for point " + std::to_string(i));
    }
    out.w.row(i) = (z / s).transpose();
  }
  return out;
}

double lle_loss(const Matrix& m, const NeighborGraph& g, const LleWeights& w) {
  check_shapes(m, g, w);
  double total = 0.0;
  for (Index i = 0; i < m.rows(); ++i) total += residual(m, g, w, i).squaredNorm();
  return total;
}

double lle_loss_at(const Matrix& m, const NeighborGraph& g, const LleWeights& w,
                   const std::vector<Index>& points) {
  check_shapes(m, g, w);
  double total = 0.0;
  for (Index i : points) {
    if (i < 0 || i >= m.rows()) throw ConfigError("point id out of range in loss evaluation");
    total += residual(m, g, w, i).squaredNorm();
  }
  return total;
}

Matrix lle_loss_grad(const Matrix& m, const NeighborGraph& g, const LleWeights& w) {
  check_shapes(m, g, w);
  Matrix grad(w.rows(), w.w.cols());
  for (Index i = 0; i < m.rows(); ++i) {
    Eigen::RowVectorXd r = residual(m, g, w, i);
    for (Index j = 0; j < g.k; ++j) {
      grad(i, j) = -2.0 * r.dot(m.row(g.neighbor_ids(i, j)));
    }
  }
  return grad;
}

LleWeights fit_weights_sgd(const Matrix& m, const NeighborGraph& g, const OptimizerConfig& opt) {
  opt.validate();
  const Index n = m.rows(), k = g.k;
  LleWeights w;
  w.k = k;
  w.w = Matrix::Constant(n, k, 1.0 / static_cast<double>(k));

  Optimizer optimizer(opt, n * k);
  for (Index step = 0; step < opt.epochs; ++step) {
    Matrix grad = lle_loss_grad(m, g, w);
    Eigen::Map<Vector> params(w.w.data(), n * k);
    Eigen::Map<const Vector> grad_flat(grad.data(), n * k);
    optimizer.step(params, grad_flat);
    // Project every row back onto the Σw = 1 affine subspace.
    Vector excess = (w.w.rowwise().sum().array() - 1.0) / static_cast<double>(k);
    w.w.colwise() -= excess;

    double loss = lle_loss(m, g, w);
    if (!std::isfinite(loss)) {
      throw DivergenceError("weight fitting diverged at step " + std::to_string(step + 1) +
                            ": loss is not finite");
    }
  }
  return w;
}

void save_weights_tsv(const std::string& path, const LleWeights& w) {
  std::ofstream out(path);
  if (!out) throw ParseError(path + ": cannot open file for writing");
  char buf[40];
  for (Index i = 0; i < w.rows(); ++i) {
    for (Index j = 0; j < w.k; ++j) {
      std::snprintf(buf, sizeof buf, "%.17g", w.w(i, j));
      out << i << '\t' << j << '\t' << buf << '\n';
    }
  }
  if (!out) throw ParseError(path + ": write failed");
}

}  // namespace lpa
