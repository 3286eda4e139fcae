#pragma once

// Independent reference implementations the tests compare the library
// against. Everything here favors the obvious formulation over speed and
// deliberately avoids sharing code paths with src/: linear scans, dense KKT
// systems, textbook formulas, scalar loops.

#include <functional>
#include <vector>

#include "lpa/neighbors.hpp"
#include "lpa/tasker.hpp"
#include "lpa/types.hpp"

namespace lpa::oracle {

// Exact k-NN by linear scan, ordered by (squared distance, id). Distances
// accumulate coordinates in index order, matching the library so equality
// checks can demand identical bits.
std::vector<Neighbor> brute_knn(const Matrix& points, const Eigen::RowVectorXd& query, Index k,
                                Index exclude_id);

// LLE weight row from the KKT system of the equality-constrained least
// squares: [2G 1; 1ᵀ 0][w; λ] = [2b; 1] with G the neighbor Gram matrix.
Vector kkt_lle_row(const Matrix& points, Index i, const std::vector<Index>& neighbor_ids);

// Central finite differences of an arbitrary scalar function.
Vector fd_gradient(const std::function<double(const Vector&)>& f, const Vector& x,
                   double h = 1e-5);

// Largest per-component error between an analytic and a numeric gradient,
// relative for large entries and absolute near zero:
// |a−n| / max(|a|+|n|, 1).
double max_grad_err(const Vector& analytic, const Vector& numeric);

// Full CSLS ranking by dense cosine matrices: every query's target ids,
// best first, ties to the lower id.
std::vector<std::vector<Index>> brute_csls_rankings(const Matrix& mapped_src, const Matrix& tgt,
                                                    Index csls_k);

// FFN forward pass re-implemented with scalar loops.
Vector naive_ffn_forward(const FfnParams& p, const Eigen::RowVectorXd& x);

// Pearson correlation by the single-pass textbook formula
// (nΣxy − ΣxΣy) / √((nΣx² − (Σx)²)(nΣy² − (Σy)²)).
double textbook_pearson(const std::vector<double>& x, const std::vector<double>& y);

// Population standard deviation by an explicit two-pass computation.
double two_pass_stdev(const std::vector<double>& values);

// Orthogonal Procrustes solution of min ‖src·Wᵀ − tgt‖_F over orthogonal W,
// via SVD of tgtᵀ·src.
Matrix procrustes(const Matrix& src, const Matrix& tgt);

}  // namespace lpa::oracle
