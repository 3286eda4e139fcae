#include "lpa/neighbors.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

namespace lpa {

namespace {

constexpr Index kLeafSize = 16;

// Squared distance with a fixed accumulation order (coordinate 0 first).
// Both the tree and any linear scan that sums the same way agree bitwise.
double sq_dist(const Eigen::RowVectorXd& q, const Matrix& pts, Index row) {
  double s = 0.0;
  for (Index j = 0; j < pts.cols(); ++j) {
    double diff = q(j) - pts(row, j);
    s += diff * diff;
  }
  return s;
}

// Candidate ordering: closer first, ties toward the lower id.
struct Candidate {
  double d2;
  Index id;
  bool operator<(const Candidate& o) const {
    return d2 != o.d2 ? d2 < o.d2 : id < o.id;
  }
};

// Bounded worst-out pool of the k best candidates seen so far.
class CandidatePool {
 public:
  explicit CandidatePool(Index k) : k_(k) { heap_.reserve(static_cast<std::size_t>(k)); }

  bool full() const { return static_cast<Index>(heap_.size()) == k_; }
  double worst_d2() const { return heap_.front().d2; }

  void offer(Candidate c) {
    if (!full()) {
      heap_.push_back(c);
      std::push_heap(heap_.begin(), heap_.end());
      return;
    }
    if (c < heap_.front()) {
      std::pop_heap(heap_.begin(), heap_.end());
      heap_.back() = c;
      std::push_heap(heap_.begin(), heap_.end());
    }
  }

  std::vector<Neighbor> finish() && {
    std::sort(heap_.begin(), heap_.end());
    std::vector<Neighbor> out;
    out.reserve(heap_.size());
    for (const Candidate& c : heap_) out.push_back({c.id, std::sqrt(c.d2)});
    return out;
  }

 private:
  Index k_;
  std::vector<Candidate> heap_;  // max-heap on (d2, id): worst on top
};

}  // namespace

KdIndex::KdIndex(Matrix points) : points_(std::move(points)) {
  if (points_.rows() < 1) throw ConfigError("cannot index an empty matrix");
  order_.resize(static_cast<std::size_t>(points_.rows()));
  for (Index i = 0; i < points_.rows(); ++i) order_[static_cast<std::size_t>(i)] = i;
  nodes_.reserve(static_cast<std::size_t>(2 * points_.rows() / kLeafSize + 2));
  root_ = build(0, points_.rows());
}

Index KdIndex::build(Index begin, Index end) {
  Index node_id = static_cast<Index>(nodes_.size());
  nodes_.push_back({begin, end, -1, 0.0, -1, -1});
  if (end - begin <= kLeafSize) return node_id;

  // Split on the dimension with the largest spread; ties take the lowest dim.
  Index split_dim = 0;
  double best_spread = -1.0;
  for (Index j = 0; j < points_.cols(); ++j) {
    double lo = points_(order_[static_cast<std::size_t>(begin)], j);
    double hi = lo;
    for (Index i = begin + 1; i < end; ++i) {
      double v = points_(order_[static_cast<std::size_t>(i)], j);
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    double spread = hi - lo;
    if (spread > best_spread) {
      best_spread = spread;
      split_dim = j;
    }
  }
  if (best_spread == 0.0) return node_id;  // all points identical: keep as leaf

  Index mid = begin + (end - begin) / 2;
  auto by_coord = [&](Index a, Index b) {
    double va = points_(a, split_dim), vb = points_(b, split_dim);
    return va != vb ? va < vb : a < b;  // total order keeps the build deterministic
  };
  std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end, by_coord);

  nodes_[static_cast<std::size_t>(node_id)].split_dim = split_dim;
  nodes_[static_cast<std::size_t>(node_id)].split_val =
      points_(order_[static_cast<std::size_t>(mid)], split_dim);
  Index left = build(begin, mid);
  Index right = build(mid, end);
  nodes_[static_cast<std::size_t>(node_id)].left = left;
  nodes_[static_cast<std::size_t>(node_id)].right = right;
  return node_id;
}

namespace {

struct SearchCtx {
  const Eigen::RowVectorXd& query;
  const Matrix& points;
  const std::vector<Index>& order;
  Index exclude_id;
  CandidatePool& pool;
};

}  // namespace

std::vector<Neighbor> KdIndex::knn_point(const Eigen::RowVectorXd& query, Index k,
                                         Index exclude_id) const {
  if (query.size() != dim()) throw ConfigError("query dimension mismatch");
  Index available = size() - (exclude_id >= 0 ? 1 : 0);
  if (k <= 0) return {};
  if (k > available) {
    throw ConfigError("k too large: requested " + std::to_string(k) + " neighbors from " +
                      std::to_string(available) + " candidate points");
  }

  CandidatePool pool(k);
  // Depth-first, nearer child first. The cell bound is re-tested when a node
  // is popped — by then the nearer subtree has tightened the pool, so this
  // prunes as well as the recursive formulation.
  struct Visit {
    Index node;
    double min_d2;  // lower bound on d² from the query to any point in the cell
  };
  std::vector<Visit> stack;
  stack.push_back({root_, 0.0});
  while (!stack.empty()) {
    auto [node_id, min_d2] = stack.back();
    stack.pop_back();
    // Strict >: a cell at exactly the worst distance can still hold a
    // lower-id point that wins the tie.
    if (pool.full() && min_d2 > pool.worst_d2()) continue;
    const Node& node = nodes_[static_cast<std::size_t>(node_id)];
    if (node.left < 0) {
      for (Index i = node.begin; i < node.end; ++i) {
        Index id = order_[static_cast<std::size_t>(i)];
        if (id == exclude_id) continue;
        pool.offer({sq_dist(query, points_, id), id});
      }
      continue;
    }
    double diff = query(node.split_dim) - node.split_val;
    Index near = diff < 0.0 ? node.left : node.right;
    Index far = diff < 0.0 ? node.right : node.left;
    stack.push_back({far, std::max(min_d2, diff * diff)});
    stack.push_back({near, min_d2});
  }
  return std::move(pool).finish();
}

std::vector<Neighbor> KdIndex::knn(Index query_id, Index k, bool exclude_self) const {
  if (query_id < 0 || query_id >= size()) throw ConfigError("query id out of range");
  if (exclude_self && size() == 1) return {};  // degenerate: nothing but the point itself
  Eigen::RowVectorXd q = points_.row(query_id);
  return knn_point(q, k, exclude_self ? query_id : -1);
}

KdIndex build_index(const EmbeddingMatrix& m) { return KdIndex(m.data); }

std::vector<Neighbor> knn(const KdIndex& index, Index query_id, Index k, bool exclude_self) {
  return index.knn(query_id, k, exclude_self);
}

NeighborGraph build_graph(const KdIndex& index, Index k) {
  Index n = index.size();
  if (k < 1 || k > n - 1) {
    throw ConfigError("k too large: need 1 <= k <= n-1, got k=" + std::to_string(k) +
                      " with n=" + std::to_string(n));
  }
  NeighborGraph g;
  g.k = k;
  g.neighbor_ids.resize(n, k);
  g.distances.resize(n, k);
  for (Index i = 0; i < n; ++i) {
    auto nb = index.knn(i, k, /*exclude_self=*/true);
    for (Index j = 0; j < k; ++j) {
      g.neighbor_ids(i, j) = nb[static_cast<std::size_t>(j)].id;
      g.distances(i, j) = nb[static_cast<std::size_t>(j)].distance;
    }
  }
  return g;
}

void save_graph_tsv(const std::string& path, const NeighborGraph& g) {
  std::ofstream out(path);
  if (!out) throw ParseError(path + ": cannot open file for writing");
  char buf[40];
  for (Index i = 0; i < g.rows(); ++i) {
    for (Index j = 0; j < g.k; ++j) {
      std::snprintf(buf, sizeof buf, "%.17g", g.distances(i, j));
      out << i << '\t' << g.neighbor_ids(i, j) << '\t' << buf << '\n';
    }
  }
  if (!out) throw ParseError(path + ": write failed");
}

}  // namespace lpa
