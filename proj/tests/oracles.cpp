#include "oracles.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numeric>

namespace lpa::oracle {

std::vector<Neighbor> brute_knn(const Matrix& points, const Eigen::RowVectorXd& query, Index k,
                                Index exclude_id) {
  std::vector<std::pair<double, Index>> all;
  for (Index i = 0; i < points.rows(); ++i) {
    if (i == exclude_id) continue;
    double d2 = 0.0;
    for (Index j = 0; j < points.cols(); ++j) {
      double diff = points(i, j) - query(j);
      d2 += diff * diff;
    }
    all.emplace_back(d2, i);
  }
  std::sort(all.begin(), all.end());
  std::vector<Neighbor> out;
  for (Index r = 0; r < k && r < static_cast<Index>(all.size()); ++r) {
    out.push_back({all[static_cast<std::size_t>(r)].second,
                   std::sqrt(all[static_cast<std::size_t>(r)].first)});
  }
  return out;
}

Vector kkt_lle_row(const Matrix& points, Index i, const std::vector<Index>& neighbor_ids) {
  const Index k = static_cast<Index>(neighbor_ids.size());
  Matrix nbrs(k, points.cols());
  for (Index j = 0; j < k; ++j) nbrs.row(j) = points.row(neighbor_ids[static_cast<std::size_t>(j)]);

  Matrix kkt = Matrix::Zero(k + 1, k + 1);
  kkt.topLeftCorner(k, k) = 2.0 * (nbrs * nbrs.transpose());
  kkt.topRightCorner(k, 1).setOnes();
  kkt.bottomLeftCorner(1, k).setOnes();
  Vector rhs(k + 1);
  rhs.head(k) = 2.0 * (nbrs * points.row(i).transpose());
  rhs(k) = 1.0;
  Vector sol = Eigen::FullPivLU<Matrix>(kkt).solve(rhs);
  return sol.head(k);
}

Vector fd_gradient(const std::function<double(const Vector&)>& f, const Vector& x, double h) {
  Vector g(x.size());
  Vector probe = x;
  for (Index i = 0; i < x.size(); ++i) {
    probe(i) = x(i) + h;
    double up = f(probe);
    probe(i) = x(i) - h;
    double down = f(probe);
    probe(i) = x(i);
    g(i) = (up - down) / (2.0 * h);
  }
  return g;
}

double max_grad_err(const Vector& analytic, const Vector& numeric) {
  double worst = 0.0;
  for (Index i = 0; i < analytic.size(); ++i) {
    double scale = std::max(std::abs(analytic(i)) + std::abs(numeric(i)), 1.0);
    worst = std::max(worst, std::abs(analytic(i) - numeric(i)) / scale);
  }
  return worst;
}

namespace {

double unit_cosine_matrix_entry(const Eigen::RowVectorXd& a, const Eigen::RowVectorXd& b) {
  return a.dot(b) / (a.norm() * b.norm());
}

double mean_of_top(const std::vector<double>& values, Index k) {
  std::vector<double> sorted = values;
  std::sort(sorted.begin(), sorted.end(), std::greater<double>());
  double sum = 0.0;
  for (Index i = 0; i < k; ++i) sum += sorted[static_cast<std::size_t>(i)];
  return sum / static_cast<double>(k);
}

}  // namespace

std::vector<std::vector<Index>> brute_csls_rankings(const Matrix& mapped_src, const Matrix& tgt,
                                                    Index csls_k) {
  const Index ns = mapped_src.rows(), nt = tgt.rows();
  Matrix cos(ns, nt);
  for (Index i = 0; i < ns; ++i) {
    for (Index j = 0; j < nt; ++j) {
      cos(i, j) = unit_cosine_matrix_entry(mapped_src.row(i), tgt.row(j));
    }
  }
  std::vector<double> r_t(static_cast<std::size_t>(ns)), r_s(static_cast<std::size_t>(nt));
  for (Index i = 0; i < ns; ++i) {
    std::vector<double> row(static_cast<std::size_t>(nt));
    for (Index j = 0; j < nt; ++j) row[static_cast<std::size_t>(j)] = cos(i, j);
    r_t[static_cast<std::size_t>(i)] = mean_of_top(row, csls_k);
  }
  for (Index j = 0; j < nt; ++j) {
    std::vector<double> col(static_cast<std::size_t>(ns));
    for (Index i = 0; i < ns; ++i) col[static_cast<std::size_t>(i)] = cos(i, j);
    r_s[static_cast<std::size_t>(j)] = mean_of_top(col, csls_k);
  }

  std::vector<std::vector<Index>> rankings;
  for (Index i = 0; i < ns; ++i) {
    std::vector<std::pair<double, Index>> scored;
    for (Index j = 0; j < nt; ++j) {
      scored.emplace_back(2.0 * cos(i, j) - r_t[static_cast<std::size_t>(i)] -
                              r_s[static_cast<std::size_t>(j)],
                          j);
    }
    std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
      if (a.first != b.first) return a.first > b.first;
      return a.second < b.second;
    });
    std::vector<Index> ids;
    for (const auto& [s, j] : scored) ids.push_back(j);
    rankings.push_back(std::move(ids));
  }
  return rankings;
}

Vector naive_ffn_forward(const FfnParams& p, const Eigen::RowVectorXd& x) {
  std::vector<double> cur(static_cast<std::size_t>(x.size()));
  for (Index j = 0; j < x.size(); ++j) cur[static_cast<std::size_t>(j)] = x(j);

  for (std::size_t l = 0; l < p.layers.size(); ++l) {
    const FfnLayer& layer = p.layers[l];
    std::vector<double> next(static_cast<std::size_t>(layer.weight.rows()));
    for (Index r = 0; r < layer.weight.rows(); ++r) {
      double acc = layer.bias(r);
      for (Index c = 0; c < layer.weight.cols(); ++c) {
        acc += layer.weight(r, c) * cur[static_cast<std::size_t>(c)];
      }
      if (l + 1 < p.layers.size()) {
        if (p.activation == Activation::relu) {
          acc = acc > 0.0 ? acc : 0.0;
        } else {
          acc = acc > 0.0 ? acc : kLeakySlope * acc;
        }
      }
      next[static_cast<std::size_t>(r)] = acc;
    }
    cur = std::move(next);
  }
  Vector out(static_cast<Index>(cur.size()));
  for (std::size_t j = 0; j < cur.size(); ++j) out(static_cast<Index>(j)) = cur[j];
  if (p.output == OutputHead::sigmoid_1) out(0) = 1.0 / (1.0 + std::exp(-out(0)));
  return out;
}

double textbook_pearson(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  double sx = 0.0, sy = 0.0, sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
    sxy += x[i] * y[i];
    sxx += x[i] * x[i];
    syy += y[i] * y[i];
  }
  return (n * sxy - sx * sy) / std::sqrt((n * sxx - sx * sx) * (n * syy - sy * sy));
}

double two_pass_stdev(const std::vector<double>& values) {
  double mean = std::accumulate(values.begin(), values.end(), 0.0) /
                static_cast<double>(values.size());
  double acc = 0.0;
  for (double v : values) acc += (v - mean) * (v - mean);
  return std::sqrt(acc / static_cast<double>(values.size()));
}

Matrix procrustes(const Matrix& src, const Matrix& tgt) {
  Matrix m = tgt.transpose() * src;
  Eigen::JacobiSVD<Matrix> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  return svd.matrixU() * svd.matrixV().transpose();
}

}  // namespace lpa::oracle
