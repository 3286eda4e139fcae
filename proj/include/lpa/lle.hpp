#pragma once

// Locally-linear reconstruction weights: each point is expressed as an
// affine combination of its k nearest neighbors (coefficients sum to 1).
// The closed-form path solves the local Gram system per point; the SGD path
// exists for parity with gradient-based training and converges to the same
// weights on well-conditioned instances.

#include <string>
#include <vector>

#include "lpa/neighbors.hpp"
#include "lpa/optimizer.hpp"
#include "lpa/types.hpp"

namespace lpa {

struct LleWeights {
  Index k = 0;
  Matrix w;  // n×k; row i holds the coefficients for point i's neighbors, in graph order

  Index rows() const { return w.rows(); }
};

// Per-point constrained least squares: minimize ‖m_i − Σ_j w_ij m_j‖² with
// Σ_j w_ij = 1, via the difference-vector Gram system C z = 1 followed by
// normalization. C gains ridge·tr(C) on the diagonal only when the system
// needs it (k > d, or condition number above 1e10); with ridge = 0 such a
// system is an error.
LleWeights solve_weights_closed(const Matrix& m, const NeighborGraph& g, double ridge);

// Σ_i ‖m_i − Σ_j w_ij m_{n_ij}‖², exactly as defined.
double lle_loss(const Matrix& m, const NeighborGraph& g, const LleWeights& w);

// Same sum restricted to the given point ids (lexicon-limited evaluation).
double lle_loss_at(const Matrix& m, const NeighborGraph& g, const LleWeights& w,
                   const std::vector<Index>& points);

// dL/dw_ij = −2 (m_i − Σ_l w_il m_{n_il}) · m_{n_ij}, shaped like w.
Matrix lle_loss_grad(const Matrix& m, const NeighborGraph& g, const LleWeights& w);

// Full-gradient descent from the uniform 1/k start; rows are projected back
// onto the sum-to-one subspace after every step. Zero epochs returns the
// initialization untouched. Non-finite loss raises DivergenceError with the
// offending step number.
LleWeights fit_weights_sgd(const Matrix& m, const NeighborGraph& g, const OptimizerConfig& opt);

// TSV dump "point_id<TAB>neighbor_rank<TAB>weight"; %.17g so a round-trip
// preserves the exact doubles.
void save_weights_tsv(const std::string& path, const LleWeights& w);

}  // namespace lpa
