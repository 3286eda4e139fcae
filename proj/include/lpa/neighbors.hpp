#pragma once

// Exact k-nearest-neighbor search under the Euclidean metric, backed by a
// KD-tree. Results are bit-identical to a linear scan: distances accumulate
// coordinate-by-coordinate in index order and ties break toward the lower
// point id, so the tree is a pure speedup, never a different answer.

#include <string>
#include <vector>

#include "lpa/embeddings.hpp"
#include "lpa/types.hpp"

namespace lpa {

struct Neighbor {
  Index id = -1;
  double distance = 0.0;  // Euclidean, not squared
};

// Materialized k-NN graph. Row i lists the k nearest points to point i,
// self excluded, nearest first.
struct NeighborGraph {
  Index k = 0;
  IndexMatrix neighbor_ids;  // n×k
  Matrix distances;          // n×k, non-decreasing along each row

  Index rows() const { return neighbor_ids.rows(); }
};

class KdIndex {
 public:
  // Takes ownership of the point matrix; rows are point ids.
  explicit KdIndex(Matrix points);

  Index size() const { return points_.rows(); }
  Index dim() const { return points_.cols(); }
  const Matrix& points() const { return points_; }

  // k nearest to an arbitrary query vector, optionally excluding one id.
  std::vector<Neighbor> knn_point(const Eigen::RowVectorXd& query, Index k,
                                  Index exclude_id = -1) const;

  // k nearest to an indexed point. With exclude_self, a 1-point index
  // yields an empty list for any k; otherwise k must leave enough points.
  std::vector<Neighbor> knn(Index query_id, Index k, bool exclude_self = true) const;

 private:
  struct Node {
    Index begin = 0, end = 0;     // range into order_
    Index split_dim = -1;
    double split_val = 0.0;
    Index left = -1, right = -1;  // -1 marks a leaf
  };

  Index build(Index begin, Index end);

  Matrix points_;
  std::vector<Index> order_;  // point ids, partitioned during build
  std::vector<Node> nodes_;
  Index root_ = -1;
};

KdIndex build_index(const EmbeddingMatrix& m);

std::vector<Neighbor> knn(const KdIndex& index, Index query_id, Index k, bool exclude_self);

NeighborGraph build_graph(const KdIndex& index, Index k);

// TSV dump "id<TAB>neighbor_id<TAB>distance", one edge per line.
void save_graph_tsv(const std::string& path, const NeighborGraph& g);

}  // namespace lpa
