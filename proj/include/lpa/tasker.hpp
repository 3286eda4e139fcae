#pragma once

// Alignment-as-regularizer mode: a small feed-forward classifier/regressor
// over embedding pairs. The premise embedding is projected into the
// hypothesis space by a little FFN, the projection is concatenated with the
// original pair as network input, and δ-weighted clipped MSE/LPL terms on
// the projection regularize training alongside the task loss.

#include <limits>
#include <string>
#include <vector>

#include "lpa/align.hpp"
#include "lpa/embeddings.hpp"
#include "lpa/lle.hpp"
#include "lpa/neighbors.hpp"
#include "lpa/optimizer.hpp"
#include "lpa/rng.hpp"
#include "lpa/types.hpp"

namespace lpa {

enum class Activation { leaky_relu, relu };

constexpr double kLeakySlope = 0.01;

Activation parse_activation(const std::string& name);
const char* activation_name(Activation a);

// How a network's final affine output is interpreted. The task heads are
// 3-way logits or a sigmoid scalar; the alignment sub-network keeps its raw
// affine output (it produces a vector, not a prediction).
enum class OutputHead { linear, softmax_3, sigmoid_1 };

struct FfnLayer {
  Matrix weight;  // out×in
  Vector bias;    // out
};

struct FfnParams {
  std::vector<FfnLayer> layers;
  Activation activation = Activation::leaky_relu;
  OutputHead output = OutputHead::linear;

  Index in_dim() const;
  Index out_dim() const;
  Index param_count() const;
  void check_chain() const;  // consecutive layer dims must agree
};

// Hidden layers are affine→activation; the last layer is affine only, then
// the head: logits stay raw (softmax lives in the loss), sigmoid_1 squashes
// to a score in (0,1), linear passes through.
Eigen::RowVectorXd ffn_forward(const FfnParams& p, const Eigen::RowVectorXd& input);

// Forward state needed to run a backward pass.
struct FfnCache {
  std::vector<Eigen::RowVectorXd> inputs;  // input to each affine layer
  std::vector<Eigen::RowVectorXd> pre;     // each layer's affine output
};

Eigen::RowVectorXd ffn_forward_cached(const FfnParams& p, const Eigen::RowVectorXd& input,
                                      FfnCache& cache);

// dz_out is dL/d(final affine output). Accumulates parameter gradients into
// grad (same shapes as p) and returns dL/d(input). Head nonlinearities are
// the caller's job: pass softmax−onehot for CE, 2(s−y)s(1−s) for a sigmoid
// squared error, or the raw upstream gradient for a linear head.
Eigen::RowVectorXd ffn_backward(const FfnParams& p, const FfnCache& cache,
                                const Eigen::RowVectorXd& dz_out, FfnParams& grad);

// Gradient-shaped zero copy, elementwise accumulate, flat packing (layer
// order, weight row-major, then bias) for the optimizer.
FfnParams zeros_like(const FfnParams& p);
void add_scaled(FfnParams& acc, const FfnParams& g, double scale);
void flatten_into(const FfnParams& p, Eigen::Ref<Vector> out, Index& offset);
void unflatten_from(FfnParams& p, const Vector& in, Index& offset);

// Xavier-uniform weights, zero biases, filled in a fixed order from rng.
void init_xavier(FfnParams& p, Rng& rng);

// [f(s1); s1; s2] — the projected premise, then the raw pair.
Eigen::RowVectorXd build_task_input(const FfnParams& align_net, const Eigen::RowVectorXd& s1,
                                    const Eigen::RowVectorXd& s2);
Eigen::RowVectorXd build_task_input(const LinearMap& f, const Eigen::RowVectorXd& s1,
                                    const Eigen::RowVectorXd& s2);

enum class TaskKind { classification, regression };

TaskKind parse_task_kind(const std::string& name);
const char* task_kind_name(TaskKind k);

// Which alignment terms regularize the task loss.
enum class LossVariant { baseline, mse, mse_lpl };

LossVariant parse_loss_variant(const std::string& name);
const char* loss_variant_name(LossVariant v);

// Per-class-label δ. Positive aligns the pair, negative diverges it.
struct DeltaMap {
  std::vector<std::string> class_names;
  std::vector<double> values;

  double at(int label) const;

  static DeltaMap snli();       // {entailment: 100, neutral: −5, contradiction: 0}
  static DeltaMap snli_main();  // {entailment: 100, neutral: −5, contradiction: 1}
  static DeltaMap mnli();       // {entailment: 250, neutral: 1, contradiction: −10}
};

struct TaskConfig {
  TaskKind kind = TaskKind::classification;
  LossVariant variant = LossVariant::mse_lpl;
  double gamma = 1.0;
  DeltaMap delta = DeltaMap::snli();
  double clip_floor = -1.0;  // floor of any δ-scaled alignment term
  double margin = 0.1;       // regression: divergence stops past this distance²
  Index align_net_hidden = 0;  // 0 → embedding dim
  Index align_net_layers = 1;  // hidden layers in the alignment sub-network
  std::vector<Index> task_hidden = {1024, 1024};
  Activation activation = Activation::leaky_relu;
  Index k = 10;
  double lle_ridge = 1e-3;
  OptimizerConfig optimizer;

  TaskConfig();  // sets the optimizer to RMSProp at 1e-4
  void validate() const;
};

// Classification: (max(clip_floor, δ_y·l_mse), max(clip_floor, δ_y·l_lpl)).
std::pair<double, double> clipped_alignment_losses(const TaskConfig& cfg, double l_mse,
                                                   double l_lpl, int label);
// Regression: δ = 2·label−1. Negative δ caps the loss at the margin first
// (divergence pushes pairs apart only up to margin), then the floor applies.
std::pair<double, double> clipped_alignment_losses(const TaskConfig& cfg, double l_mse,
                                                   double l_lpl, double label);

struct PairDataset {
  Matrix side1;  // premise / sentence-1 rows
  Matrix side2;  // hypothesis / sentence-2 rows
  TaskKind kind = TaskKind::classification;
  std::vector<int> class_labels;          // classification
  std::vector<double> scores;             // regression, normalized to [0,1]
  std::vector<std::string> label_names;

  Index size() const { return side1.rows(); }
  void validate() const;
};

// TSV rows "token1<TAB>token2<TAB>label"; tokens reference the embedding
// file. Classification labels must appear in label_names when given,
// otherwise names are collected in order of first appearance.
PairDataset load_pair_dataset(const std::string& path, const EmbeddingMatrix& embeddings,
                              TaskKind kind, const std::vector<std::string>& label_names = {});

struct TaskModel {
  FfnParams align_net;  // d → d projection, linear head
  FfnParams task_net;   // 3d → logits/score
  TaskKind kind = TaskKind::classification;
};

TaskModel make_task_model(const TaskConfig& cfg, Index dim, Index n_classes, Rng& rng);

struct TaskLossResult {
  double value = 0.0;           // full objective, mean over the batch
  double task_term = 0.0;       // CE or squared-error mean
  double align_mse_term = 0.0;  // γ-scaled clipped means
  double align_lpl_term = 0.0;
  double align_lle_term = 0.0;  // constant of the frozen weights
  double min_clipped_term = std::numeric_limits<double>::infinity();
  // The task term reaches both networks (through the concatenated input);
  // the alignment terms touch only the projection network.
  FfnParams grad_task;              // ∂task_term/∂task_net
  FfnParams grad_align_from_task;   // ∂task_term/∂align_net
  FfnParams grad_align_from_align;  // ∂(γ·alignment terms)/∂align_net
};

// graph/weights may be null for the baseline variant or γ=0, in which case
// the alignment block is skipped entirely and the objective is the bare
// task loss.
TaskLossResult task_total_loss(const TaskConfig& cfg, const TaskModel& model,
                               const PairDataset& data, const std::vector<Index>& batch,
                               const NeighborGraph* graph, const LleWeights* weights);

int predict_label(const TaskModel& m, const Eigen::RowVectorXd& s1,
                  const Eigen::RowVectorXd& s2);
double predict_score(const TaskModel& m, const Eigen::RowVectorXd& s1,
                     const Eigen::RowVectorXd& s2);
std::vector<int> predict_labels(const TaskModel& m, const Matrix& side1, const Matrix& side2);
std::vector<double> predict_scores(const TaskModel& m, const Matrix& side1, const Matrix& side2);

struct TaskFoldResult {
  std::uint64_t seed = 0;
  double metric = 0.0;  // accuracy or Pearson r on the test split
  double final_train_loss = 0.0;
};

struct TaskRunResult {
  TaskModel model;  // from the last fold
  std::vector<TaskFoldResult> folds;
  double mean_metric = 0.0;
  double stdev_metric = 0.0;  // population
  double min_clipped_term = std::numeric_limits<double>::infinity();
};

// Cross-validated low-resource runs: each fold draws subset_size training
// pairs without replacement (fold seed = base seed + fold), reinitializes,
// trains, and scores the test split. The neighbor graph for LPL is built
// over the fold's own training subset only. subset_size 0 uses all pairs.
TaskRunResult train_task(const TaskConfig& cfg, const PairDataset& train,
                         const PairDataset& test, Index subset_size, Index folds);

}  // namespace lpa
