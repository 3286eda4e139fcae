#pragma once

// The linear alignment map between two embedding spaces, its loss terms
// (reconstruction MSE, locality preserving loss, orthogonality penalty),
// and the two-phase trainer: phase 1 fits the locally-linear weights over
// the source space and freezes them, phase 2 fits the map by mini-batch
// gradient descent on the combined objective.

#include <string>
#include <vector>

#include "lpa/embeddings.hpp"
#include "lpa/lle.hpp"
#include "lpa/neighbors.hpp"
#include "lpa/optimizer.hpp"
#include "lpa/types.hpp"

namespace lpa {

struct LinearMap {
  Matrix weight;  // d×d, row convention: f(x) = x·weightᵀ

  Index dim() const { return weight.rows(); }
  static LinearMap identity(Index d);
};

// Row-convention application to a batch of row vectors.
Matrix apply_map(const LinearMap& f, const Matrix& x);

// A scalar loss together with its exact gradient w.r.t. the map weight.
struct LossValue {
  double value = 0.0;
  Matrix grad;  // d×d
};

// Σ_{i∈lex} ‖f(src_i) − tgt_i‖²
LossValue mse_loss(const LinearMap& f, const Matrix& src, const Matrix& tgt, const Lexicon& lex);

// Σ_{i∈lex} ‖tgt_i − Σ_j w_ij f(src_{n_ij})‖² with the weights held fixed.
// Neighbors may lie outside the lexicon; that is the point of the loss.
LossValue lpl_loss(const LinearMap& f, const Matrix& src, const Matrix& tgt, const Lexicon& lex,
                   const NeighborGraph& g, const LleWeights& w);

// ‖W·Wᵀ − I‖²_F and its gradient 4(W·Wᵀ − I)W.
LossValue ortho_penalty(const LinearMap& f);

enum class WeightsSolver { closed_form, sgd };

WeightsSolver parse_weights_solver(const std::string& name);
const char* weights_solver_name(WeightsSolver s);

struct AlignConfig {
  double beta = 0.7;          // LPL contribution
  double lambda_ortho = 1.0;  // orthogonality penalty weight
  Index k = 10;               // neighborhood size
  double lle_ridge = 1e-3;
  WeightsSolver weights_solver = WeightsSolver::closed_form;
  OptimizerConfig optimizer;          // phase 2 (map); sgd, lr 1e-3, 300 epochs
  OptimizerConfig weights_optimizer;  // phase 1 when weights_solver == sgd
  NormScheme preprocess = NormScheme::unit_center_unit;
  Index early_stop_patience = 10;  // epochs without val-MSE improvement; <= 0 disables

  void validate() const;
};

// L_mse + β·L_lpl + L_lle + λ·L_ortho. The weight-reconstruction term is a
// constant of the frozen weights, so it contributes value only, no gradient.
LossValue total_loss(const AlignConfig& cfg, const LossValue& mse, const LossValue& lpl,
                     double lle_value, const LossValue& ortho);

struct TrainLogEntry {
  Index epoch = 0;  // 0 is the initial state, before any update
  double l_mse = 0.0;
  double l_lpl = 0.0;
  double l_lle = 0.0;
  double l_ortho = 0.0;
  double val_mse = 0.0;  // mean over validation pairs; NaN when there are none
};

struct AlignLosses {
  double l_mse = 0.0, l_lpl = 0.0, l_lle = 0.0, l_ortho = 0.0, total = 0.0;
};

struct AlignResult {
  LinearMap map;  // the weights at the best validation epoch
  NeighborGraph graph;
  LleWeights weights;
  std::vector<TrainLogEntry> log;
  Index best_epoch = 0;
  double best_val_mse = 0.0;
  AlignLosses final_losses;  // evaluated at the returned map
};

// Two-phase training. Inputs are raw embedding matrices; cfg.preprocess is
// applied to both sides first and the neighbor graph is built over the
// preprocessed source. Lexicons index rows; train and val must be disjoint.
AlignResult train_align(const AlignConfig& cfg, const EmbeddingMatrix& src,
                        const EmbeddingMatrix& tgt, const Lexicon& lex_train,
                        const Lexicon& lex_val);

// Binary checkpoint: magic "LPAM", u32 version, u32 d, then d·d doubles
// row-major, all little-endian.
void save_linear_map(const std::string& path, const LinearMap& f);
LinearMap load_linear_map(const std::string& path);

}  // namespace lpa
