#include "lpa/tasker.hpp"

#include <algorithm>

#include "lpa/eval.hpp"
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

namespace lpa {

Activation parse_activation(const std::string& name) {
  if (name == "leaky_relu") return Activation::leaky_relu;
  if (name == "relu") return Activation::relu;
  throw ConfigError("unknown activation: '" + name + "' (expected leaky_relu or relu)");
}

const char* activation_name(Activation a) {
  return a == Activation::leaky_relu ? "leaky_relu" : "relu";
}

namespace {

double activate(Activation a, double z) {
  if (z > 0.0) return z;
  return a == Activation::leaky_relu ? kLeakySlope * z : 0.0;
}

double activate_grad(Activation a, double z) {
  if (z > 0.0) return 1.0;
  return a == Activation::leaky_relu ? kLeakySlope : 0.0;
}

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

}  // namespace

Index FfnParams::in_dim() const {
  if (layers.empty()) throw ConfigError("network has no layers");
  return layers.front().weight.cols();
}

Index FfnParams::out_dim() const {
  if (layers.empty()) throw ConfigError("network has no layers");
  return layers.back().weight.rows();
}

Index FfnParams::param_count() const {
  Index n = 0;
  for (const FfnLayer& l : layers) n += l.weight.size() + l.bias.size();
  return n;
}

void FfnParams::check_chain() const {
  if (layers.empty()) throw ConfigError("network has no layers");
  for (std::size_t l = 0; l < layers.size(); ++l) {
    if (layers[l].bias.size() != layers[l].weight.rows()) {
      throw ConfigError("bias size does not match layer " + std::to_string(l));
    }
    if (l > 0 && layers[l].weight.cols() != layers[l - 1].weight.rows()) {
      throw ConfigError("layer dimensions do not chain at layer " + std::to_string(l));
    }
  }
}

Eigen::RowVectorXd ffn_forward_cached(const FfnParams& p, const Eigen::RowVectorXd& input,
                                      FfnCache& cache) {
  p.check_chain();
  if (input.size() != p.in_dim()) throw ConfigError("input dimension does not match the network");
  cache.inputs.clear();
  cache.pre.clear();
  Eigen::RowVectorXd x = input;
  for (std::size_t l = 0; l < p.layers.size(); ++l) {
    cache.inputs.push_back(x);
    Eigen::RowVectorXd z = x * p.layers[l].weight.transpose() + p.layers[l].bias.transpose();
    cache.pre.push_back(z);
    if (l + 1 < p.layers.size()) {
      for (Index i = 0; i < z.size(); ++i) z(i) = activate(p.activation, z(i));
    }
    x = z;
  }
  if (p.output == OutputHead::sigmoid_1) {
    if (x.size() != 1) throw ConfigError("sigmoid head requires a single output");
    x(0) = sigmoid(x(0));
  }
  return x;
}

Eigen::RowVectorXd ffn_forward(const FfnParams& p, const Eigen::RowVectorXd& input) {
  FfnCache cache;
  return ffn_forward_cached(p, input, cache);
}

Eigen::RowVectorXd ffn_backward(const FfnParams& p, const FfnCache& cache,
                                const Eigen::RowVectorXd& dz_out, FfnParams& grad) {
  if (cache.inputs.size() != p.layers.size()) throw ConfigError("stale forward cache");
  if (grad.layers.size() != p.layers.size()) throw ConfigError("gradient shape mismatch");
  Eigen::RowVectorXd g = dz_out;
  for (std::size_t l = p.layers.size(); l-- > 0;) {
    grad.layers[l].weight.noalias() += g.transpose() * cache.inputs[l];
    grad.layers[l].bias += g.transpose();
    Eigen::RowVectorXd dinput = g * p.layers[l].weight;
    if (l == 0) return dinput;
    // Walk back through the previous layer's activation.
    const Eigen::RowVectorXd& z = cache.pre[l - 1];
    g = dinput;
    for (Index i = 0; i < g.size(); ++i) g(i) *= activate_grad(p.activation, z(i));
  }
  throw ConfigError("network has no layers");
}

FfnParams zeros_like(const FfnParams& p) {
  FfnParams z;
  z.activation = p.activation;
  z.output = p.output;
  z.layers.reserve(p.layers.size());
  for (const FfnLayer& l : p.layers) {
    z.layers.push_back({Matrix::Zero(l.weight.rows(), l.weight.cols()),
                        Vector::Zero(l.bias.size())});
  }
  return z;
}

void add_scaled(FfnParams& acc, const FfnParams& g, double scale) {
  if (acc.layers.size() != g.layers.size()) throw ConfigError("gradient shape mismatch");
  for (std::size_t l = 0; l < acc.layers.size(); ++l) {
    acc.layers[l].weight += scale * g.layers[l].weight;
    acc.layers[l].bias += scale * g.layers[l].bias;
  }
}

void flatten_into(const FfnParams& p, Eigen::Ref<Vector> out, Index& offset) {
  for (const FfnLayer& l : p.layers) {
    for (Index i = 0; i < l.weight.rows(); ++i) {
      for (Index j = 0; j < l.weight.cols(); ++j) out(offset++) = l.weight(i, j);
    }
    for (Index i = 0; i < l.bias.size(); ++i) out(offset++) = l.bias(i);
  }
}

void unflatten_from(FfnParams& p, const Vector& in, Index& offset) {
  for (FfnLayer& l : p.layers) {
    for (Index i = 0; i < l.weight.rows(); ++i) {
      for (Index j = 0; j < l.weight.cols(); ++j) l.weight(i, j) = in(offset++);
    }
    for (Index i = 0; i < l.bias.size(); ++i) l.bias(i) = in(offset++);
  }
}

void init_xavier(FfnParams& p, Rng& rng) {
  for (FfnLayer& l : p.layers) {
    double limit = std::sqrt(6.0 / static_cast<double>(l.weight.rows() + l.weight.cols()));
    for (Index i = 0; i < l.weight.rows(); ++i) {
      for (Index j = 0; j < l.weight.cols(); ++j) l.weight(i, j) = rng.uniform(-limit, limit);
    }
    l.bias.setZero();
  }
}

Eigen::RowVectorXd build_task_input(const FfnParams& align_net, const Eigen::RowVectorXd& s1,
                                    const Eigen::RowVectorXd& s2) {
  Eigen::RowVectorXd proj = ffn_forward(align_net, s1);
  Eigen::RowVectorXd out(proj.size() + s1.size() + s2.size());
  out << proj, s1, s2;
  return out;
}

Eigen::RowVectorXd build_task_input(const LinearMap& f, const Eigen::RowVectorXd& s1,
                                    const Eigen::RowVectorXd& s2) {
  Eigen::RowVectorXd proj = s1 * f.weight.transpose();
  Eigen::RowVectorXd out(proj.size() + s1.size() + s2.size());
  out << proj, s1, s2;
  return out;
}

TaskKind parse_task_kind(const std::string& name) {
  if (name == "classification" || name == "classify") return TaskKind::classification;
  if (name == "regression" || name == "regress") return TaskKind::regression;
  throw ConfigError("unknown task kind: '" + name + "'");
}

const char* task_kind_name(TaskKind k) {
  return k == TaskKind::classification ? "classification" : "regression";
}

LossVariant parse_loss_variant(const std::string& name) {
  if (name == "baseline") return LossVariant::baseline;
  if (name == "mse") return LossVariant::mse;
  if (name == "mse_lpl" || name == "mse+lpl") return LossVariant::mse_lpl;
  throw ConfigError("unknown loss variant: '" + name +
                    "' (expected baseline, mse, or mse_lpl)");
}

const char* loss_variant_name(LossVariant v) {
  switch (v) {
    case LossVariant::baseline: return "baseline";
    case LossVariant::mse: return "mse";
    case LossVariant::mse_lpl: return "mse_lpl";
  }
  return "baseline";
}

double DeltaMap::at(int label) const {
  if (label < 0 || static_cast<std::size_t>(label) >= values.size()) {
    throw ConfigError("unknown label id " + std::to_string(label));
  }
  return values[static_cast<std::size_t>(label)];
}

DeltaMap DeltaMap::snli() {
  return {{"entailment", "neutral", "contradiction"}, {100.0, -5.0, 0.0}};
}

DeltaMap DeltaMap::snli_main() {
  return {{"entailment", "neutral", "contradiction"}, {100.0, -5.0, 1.0}};
}

DeltaMap DeltaMap::mnli() {
  return {{"entailment", "neutral", "contradiction"}, {250.0, 1.0, -10.0}};
}

TaskConfig::TaskConfig() {
  optimizer.algorithm = OptAlgorithm::rmsprop;
  optimizer.learning_rate = 1e-4;
}

void TaskConfig::validate() const {
  if (gamma < 0.0) throw ConfigError("gamma must be non-negative");
  if (clip_floor > 0.0) throw ConfigError("clip_floor must be non-positive");
  if (!(margin > 0.0)) throw ConfigError("margin must be positive");
  if (align_net_hidden < 0) throw ConfigError("align_net_hidden must be non-negative");
  if (align_net_layers < 1) throw ConfigError("align_net_layers must be at least 1");
  for (Index h : task_hidden) {
    if (h < 1) throw ConfigError("task hidden sizes must be positive");
  }
  if (k < 1) throw ConfigError("k must be at least 1");
  if (lle_ridge < 0.0) throw ConfigError("lle_ridge must be non-negative");
  if (kind == TaskKind::classification && delta.values.size() != delta.class_names.size()) {
    throw ConfigError("delta map must give one value per class name");
  }
  optimizer.validate();
}

namespace {

// One clipped alignment term and the coefficient its gradient carries
// (δ while the term is live, 0 once a cap flattens it).
std::pair<double, double> clip_term_classification(double floor, double delta, double loss) {
  double raw = delta * loss;
  if (raw > floor) return {raw, delta};
  return {floor, 0.0};
}

std::pair<double, double> clip_term_regression(double floor, double margin, double delta,
                                               double loss) {
  if (delta >= 0.0) return {delta * loss, delta};
  // Divergence: push apart only while the pair is closer than the margin,
  // and never report below the floor.
  double capped = std::min(loss, margin);
  double raw = delta * capped;
  if (raw <= floor) return {floor, 0.0};
  return {raw, loss < margin ? delta : 0.0};
}

void check_loss_nonneg(double l_mse, double l_lpl) {
  if (l_mse < 0.0 || l_lpl < 0.0) throw ConfigError("alignment losses must be non-negative");
}

}  // namespace

std::pair<double, double> clipped_alignment_losses(const TaskConfig& cfg, double l_mse,
                                                   double l_lpl, int label) {
  check_loss_nonneg(l_mse, l_lpl);
  double delta = cfg.delta.at(label);
  return {clip_term_classification(cfg.clip_floor, delta, l_mse).first,
          clip_term_classification(cfg.clip_floor, delta, l_lpl).first};
}

std::pair<double, double> clipped_alignment_losses(const TaskConfig& cfg, double l_mse,
                                                   double l_lpl, double label) {
  check_loss_nonneg(l_mse, l_lpl);
  if (label < 0.0 || label > 1.0) {
    throw ConfigError("regression labels must be normalized to [0, 1]");
  }
  double delta = 2.0 * label - 1.0;
  return {clip_term_regression(cfg.clip_floor, cfg.margin, delta, l_mse).first,
          clip_term_regression(cfg.clip_floor, cfg.margin, delta, l_lpl).first};
}

void PairDataset::validate() const {
  if (side1.rows() != side2.rows()) throw ConfigError("pair dataset sides differ in count");
  if (side1.cols() != side2.cols()) throw ConfigError("pair dataset sides differ in dimension");
  if (kind == TaskKind::classification) {
    if (static_cast<Index>(class_labels.size()) != size()) {
      throw ConfigError("one class label per pair required");
    }
    for (int y : class_labels) {
      if (y < 0 || static_cast<std::size_t>(y) >= label_names.size()) {
        throw ConfigError("class label out of range");
      }
    }
  } else {
    if (static_cast<Index>(scores.size()) != size()) {
      throw ConfigError("one score per pair required");
    }
    for (double s : scores) {
      if (!(s >= 0.0 && s <= 1.0)) {
        throw ConfigError("regression labels must be normalized to [0, 1]");
      }
    }
  }
}

PairDataset load_pair_dataset(const std::string& path, const EmbeddingMatrix& embeddings,
                              TaskKind kind, const std::vector<std::string>& label_names) {
  std::ifstream in(path);
  if (!in) throw ParseError(path + ": cannot open file");

  PairDataset ds;
  ds.kind = kind;
  ds.label_names = label_names;
  std::vector<Index> rows1, rows2;
  std::string line;
  long lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    while (!line.empty() && (line.back() == '\n' || line.back() == '\r')) line.pop_back();
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::string tok1, tok2, label;
    if (!std::getline(ss, tok1, '\t') || !std::getline(ss, tok2, '\t') ||
        !std::getline(ss, label, '\t')) {
      throw ParseError(path + ":" + std::to_string(lineno) +
                       ": expected 'token1<TAB>token2<TAB>label'");
    }
    auto i1 = embeddings.vocab.lookup(tok1);
    auto i2 = embeddings.vocab.lookup(tok2);
    if (!i1 || !i2) {
      throw ParseError(path + ":" + std::to_string(lineno) + ": token not in embedding file: '" +
                       (!i1 ? tok1 : tok2) + "'");
    }
    rows1.push_back(*i1);
    rows2.push_back(*i2);
    if (kind == TaskKind::classification) {
      auto it = std::find(ds.label_names.begin(), ds.label_names.end(), label);
      if (it == ds.label_names.end()) {
        if (!label_names.empty()) {
          throw ParseError(path + ":" + std::to_string(lineno) + ": unknown label: '" + label +
                           "'");
        }
        ds.label_names.push_back(label);
        it = ds.label_names.end() - 1;
      }
      ds.class_labels.push_back(static_cast<int>(it - ds.label_names.begin()));
    } else {
      double v = 0.0;
      try {
        std::size_t pos = 0;
        v = std::stod(label, &pos);
        if (pos != label.size()) throw std::invalid_argument(label);
      } catch (const std::exception&) {
        throw ParseError(path + ":" + std::to_string(lineno) + ": bad score: '" + label + "'");
      }
      ds.scores.push_back(v);
    }
  }
  if (rows1.empty()) throw ParseError(path + ": no pairs");

  ds.side1.resize(static_cast<Index>(rows1.size()), embeddings.dim());
  ds.side2.resize(static_cast<Index>(rows2.size()), embeddings.dim());
  for (std::size_t i = 0; i < rows1.size(); ++i) {
    ds.side1.row(static_cast<Index>(i)) = embeddings.data.row(rows1[i]);
    ds.side2.row(static_cast<Index>(i)) = embeddings.data.row(rows2[i]);
  }
  ds.validate();
  return ds;
}

TaskModel make_task_model(const TaskConfig& cfg, Index dim, Index n_classes, Rng& rng) {
  if (dim < 1) throw ConfigError("embedding dimension must be positive");
  TaskModel m;
  m.kind = cfg.kind;

  Index hidden = cfg.align_net_hidden == 0 ? dim : cfg.align_net_hidden;
  m.align_net.activation = cfg.activation;
  m.align_net.output = OutputHead::linear;
  Index prev = dim;
  for (Index l = 0; l < cfg.align_net_layers; ++l) {
    m.align_net.layers.push_back({Matrix::Zero(hidden, prev), Vector::Zero(hidden)});
    prev = hidden;
  }
  m.align_net.layers.push_back({Matrix::Zero(dim, prev), Vector::Zero(dim)});

  Index out = cfg.kind == TaskKind::classification ? n_classes : 1;
  if (cfg.kind == TaskKind::classification && n_classes < 2) {
    throw ConfigError("classification needs at least 2 classes");
  }
  m.task_net.activation = cfg.activation;
  m.task_net.output =
      cfg.kind == TaskKind::classification ? OutputHead::softmax_3 : OutputHead::sigmoid_1;
  prev = 3 * dim;
  for (Index h : cfg.task_hidden) {
    m.task_net.layers.push_back({Matrix::Zero(h, prev), Vector::Zero(h)});
    prev = h;
  }
  m.task_net.layers.push_back({Matrix::Zero(out, prev), Vector::Zero(out)});

  init_xavier(m.align_net, rng);
  init_xavier(m.task_net, rng);
  return m;
}

namespace {

// Task-head loss and its gradient at the final affine output.
double task_head_loss(const TaskModel& model, const PairDataset& data, Index i,
                      const Eigen::RowVectorXd& z, Eigen::RowVectorXd& dz) {
  if (model.kind == TaskKind::classification) {
    // Stable softmax cross-entropy on the raw logits.
    int y = data.class_labels[static_cast<std::size_t>(i)];
    double zmax = z.maxCoeff();
    Eigen::RowVectorXd p = (z.array() - zmax).exp();
    double zsum = p.sum();
    p /= zsum;
    dz = p;
    dz(y) -= 1.0;
    return -(z(y) - zmax - std::log(zsum));
  }
  // Sigmoid head: forward already squashed, so z here is the score.
  double s = z(0);
  double y = data.scores[static_cast<std::size_t>(i)];
  dz.resize(1);
  dz(0) = 2.0 * (s - y) * s * (1.0 - s);
  return (s - y) * (s - y);
}

}  // namespace

TaskLossResult task_total_loss(const TaskConfig& cfg, const TaskModel& model,
                               const PairDataset& data, const std::vector<Index>& batch,
                               const NeighborGraph* graph, const LleWeights* weights) {
  if (batch.empty()) throw ConfigError("loss over an empty batch");
  const Index d = data.side1.cols();
  const bool use_align = cfg.variant != LossVariant::baseline && cfg.gamma != 0.0;
  const bool use_lpl = cfg.variant == LossVariant::mse_lpl;
  if (use_align && use_lpl && (graph == nullptr || weights == nullptr)) {
    throw ConfigError("LPL variant needs a neighbor graph and frozen weights");
  }

  TaskLossResult res;
  res.grad_task = zeros_like(model.task_net);
  res.grad_align_from_task = zeros_like(model.align_net);
  res.grad_align_from_align = zeros_like(model.align_net);

  for (Index i : batch) {
    if (i < 0 || i >= data.size()) throw ConfigError("batch index out of range");
    Eigen::RowVectorXd s1 = data.side1.row(i);
    Eigen::RowVectorXd s2 = data.side2.row(i);

    FfnCache cache_a;
    Eigen::RowVectorXd proj = ffn_forward_cached(model.align_net, s1, cache_a);

    Eigen::RowVectorXd x(3 * d);
    x << proj, s1, s2;
    FfnCache cache_t;
    Eigen::RowVectorXd z = ffn_forward_cached(model.task_net, x, cache_t);

    Eigen::RowVectorXd dz;
    res.task_term += task_head_loss(model, data, i, z, dz);
    Eigen::RowVectorXd dx = ffn_backward(model.task_net, cache_t, dz, res.grad_task);
    ffn_backward(model.align_net, cache_a, dx.head(d), res.grad_align_from_task);

    if (!use_align) continue;

    // δ for this pair; the clip coefficient is δ while a term is live.
    double delta;
    if (cfg.kind == TaskKind::classification) {
      delta = cfg.delta.at(data.class_labels[static_cast<std::size_t>(i)]);
    } else {
      double y = data.scores[static_cast<std::size_t>(i)];
      delta = 2.0 * y - 1.0;
    }
    auto clip = [&](double loss) {
      return cfg.kind == TaskKind::classification
                 ? clip_term_classification(cfg.clip_floor, delta, loss)
                 : clip_term_regression(cfg.clip_floor, cfg.margin, delta, loss);
    };

    // MSE: the projected premise against the hypothesis.
    Eigen::RowVectorXd r_mse = proj - s2;
    auto [term_mse, coeff_mse] = clip(r_mse.squaredNorm());
    res.align_mse_term += term_mse;
    res.min_clipped_term = std::min(res.min_clipped_term, term_mse);
    if (coeff_mse != 0.0) {
      ffn_backward(model.align_net, cache_a, (cfg.gamma * coeff_mse * 2.0) * r_mse,
                   res.grad_align_from_align);
    }

    if (use_lpl) {
      // LPL: the hypothesis against the weighted projected premise
      // neighborhood. Each neighbor runs through the projection net.
      std::vector<FfnCache> caches(static_cast<std::size_t>(graph->k));
      Eigen::RowVectorXd u = Eigen::RowVectorXd::Zero(d);
      for (Index j = 0; j < graph->k; ++j) {
        Eigen::RowVectorXd nb = data.side1.row(graph->neighbor_ids(i, j));
        u += weights->w(i, j) *
             ffn_forward_cached(model.align_net, nb, caches[static_cast<std::size_t>(j)]);
      }
      Eigen::RowVectorXd r_lpl = u - s2;
      auto [term_lpl, coeff_lpl] = clip(r_lpl.squaredNorm());
      res.align_lpl_term += term_lpl;
      res.min_clipped_term = std::min(res.min_clipped_term, term_lpl);
      if (coeff_lpl != 0.0) {
        for (Index j = 0; j < graph->k; ++j) {
          ffn_backward(model.align_net, caches[static_cast<std::size_t>(j)],
                       (cfg.gamma * coeff_lpl * 2.0 * weights->w(i, j)) * r_lpl,
                       res.grad_align_from_align);
        }
      }

      // Reconstruction term of the frozen weights: a constant, clipped the
      // same way for uniform bookkeeping, with no gradient.
      Eigen::RowVectorXd rec = Eigen::RowVectorXd::Zero(d);
      for (Index j = 0; j < graph->k; ++j) {
        rec += weights->w(i, j) * data.side1.row(graph->neighbor_ids(i, j));
      }
      double term_lle = clip((s1 - rec).squaredNorm()).first;
      res.align_lle_term += term_lle;
      res.min_clipped_term = std::min(res.min_clipped_term, term_lle);
    }
  }

  const double inv = 1.0 / static_cast<double>(batch.size());
  res.task_term *= inv;
  res.align_mse_term *= cfg.gamma * inv;
  res.align_lpl_term *= cfg.gamma * inv;
  res.align_lle_term *= cfg.gamma * inv;
  res.value = res.task_term + res.align_mse_term + res.align_lpl_term + res.align_lle_term;
  // Gradients were accumulated with γ and the clip coefficients baked in;
  // only the batch mean is left.
  for (FfnParams* g : {&res.grad_task, &res.grad_align_from_task, &res.grad_align_from_align}) {
    for (FfnLayer& l : g->layers) {
      l.weight *= inv;
      l.bias *= inv;
    }
  }
  return res;
}

int predict_label(const TaskModel& m, const Eigen::RowVectorXd& s1,
                  const Eigen::RowVectorXd& s2) {
  Eigen::RowVectorXd z = ffn_forward(m.task_net, build_task_input(m.align_net, s1, s2));
  int best = 0;
  for (Index i = 1; i < z.size(); ++i) {
    if (z(i) > z(best)) best = static_cast<int>(i);  // ties keep the lower id
  }
  return best;
}

double predict_score(const TaskModel& m, const Eigen::RowVectorXd& s1,
                     const Eigen::RowVectorXd& s2) {
  Eigen::RowVectorXd z = ffn_forward(m.task_net, build_task_input(m.align_net, s1, s2));
  return z(0);
}

std::vector<int> predict_labels(const TaskModel& m, const Matrix& side1, const Matrix& side2) {
  if (side1.rows() != side2.rows()) throw ConfigError("prediction sides differ in count");
  std::vector<int> out;
  out.reserve(static_cast<std::size_t>(side1.rows()));
  for (Index i = 0; i < side1.rows(); ++i) {
    out.push_back(predict_label(m, side1.row(i), side2.row(i)));
  }
  return out;
}

std::vector<double> predict_scores(const TaskModel& m, const Matrix& side1, const Matrix& side2) {
  if (side1.rows() != side2.rows()) throw ConfigError("prediction sides differ in count");
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(side1.rows()));
  for (Index i = 0; i < side1.rows(); ++i) {
    out.push_back(predict_score(m, side1.row(i), side2.row(i)));
  }
  return out;
}

namespace {

PairDataset subset_dataset(const PairDataset& data, const std::vector<Index>& ids) {
  PairDataset sub;
  sub.kind = data.kind;
  sub.label_names = data.label_names;
  sub.side1.resize(static_cast<Index>(ids.size()), data.side1.cols());
  sub.side2.resize(static_cast<Index>(ids.size()), data.side2.cols());
  for (std::size_t i = 0; i < ids.size(); ++i) {
    sub.side1.row(static_cast<Index>(i)) = data.side1.row(ids[i]);
    sub.side2.row(static_cast<Index>(i)) = data.side2.row(ids[i]);
    if (data.kind == TaskKind::classification) {
      sub.class_labels.push_back(data.class_labels[static_cast<std::size_t>(ids[i])]);
    } else {
      sub.scores.push_back(data.scores[static_cast<std::size_t>(ids[i])]);
    }
  }
  return sub;
}

double fold_test_metric(const TaskModel& model, const PairDataset& test) {
  if (test.kind == TaskKind::classification) {
    return accuracy(predict_labels(model, test.side1, test.side2), test.class_labels);
  }
  return pearson(predict_scores(model, test.side1, test.side2), test.scores);
}

}  // namespace

TaskRunResult train_task(const TaskConfig& cfg, const PairDataset& train,
                         const PairDataset& test, Index subset_size, Index folds) {
  cfg.validate();
  train.validate();
  test.validate();
  if (train.kind != cfg.kind || test.kind != cfg.kind) {
    throw ConfigError("dataset task kind does not match the config");
  }
  if (train.side1.cols() != test.side1.cols()) {
    throw ConfigError("train and test dimensions differ");
  }
  if (folds < 1) throw ConfigError("folds must be at least 1");
  if (subset_size < 0 || subset_size > train.size()) {
    throw ConfigError("subset size exceeds dataset");
  }
  const Index n_sub = subset_size == 0 ? train.size() : subset_size;
  const Index d = train.side1.cols();
  const Index n_classes = static_cast<Index>(train.label_names.size());
  const bool use_align = cfg.variant != LossVariant::baseline && cfg.gamma != 0.0;
  const bool use_lpl = use_align && cfg.variant == LossVariant::mse_lpl;

  TaskRunResult run;
  for (Index fold = 0; fold < folds; ++fold) {
    const std::uint64_t seed = cfg.optimizer.seed + static_cast<std::uint64_t>(fold);
    Rng rng(seed);

    PairDataset sub = subset_dataset(train, rng.sample_without_replacement(train.size(), n_sub));

    // LPL machinery over this fold's training subset only.
    NeighborGraph graph;
    LleWeights weights;
    if (use_lpl) {
      KdIndex index(sub.side1);
      graph = build_graph(index, cfg.k);
      weights = solve_weights_closed(sub.side1, graph, cfg.lle_ridge);
    }

    TaskModel model = make_task_model(cfg, d, n_classes, rng);
    const Index n_params = model.align_net.param_count() + model.task_net.param_count();
    Vector params(n_params);
    Index offset = 0;
    flatten_into(model.align_net, params, offset);
    flatten_into(model.task_net, params, offset);
    Optimizer opt(cfg.optimizer, n_params);

    const Index batch =
        cfg.optimizer.batch_size == 0 ? n_sub : std::min(cfg.optimizer.batch_size, n_sub);
    std::vector<Index> order(static_cast<std::size_t>(n_sub));
    std::iota(order.begin(), order.end(), Index{0});

    double last_loss = 0.0;
    for (Index epoch = 1; epoch <= cfg.optimizer.epochs; ++epoch) {
      rng.shuffle(order);
      double epoch_loss = 0.0;
      Index n_batches = 0;
      for (Index begin = 0; begin < n_sub; begin += batch) {
        Index end = std::min(begin + batch, n_sub);
        std::vector<Index> ids(order.begin() + begin, order.begin() + end);
        TaskLossResult loss = task_total_loss(cfg, model, sub, ids, use_lpl ? &graph : nullptr,
                                              use_lpl ? &weights : nullptr);
        run.min_clipped_term = std::min(run.min_clipped_term, loss.min_clipped_term);
        epoch_loss += loss.value;
        ++n_batches;

        add_scaled(loss.grad_align_from_task, loss.grad_align_from_align, 1.0);
        Vector grad(n_params);
        offset = 0;
        flatten_into(loss.grad_align_from_task, grad, offset);
        flatten_into(loss.grad_task, grad, offset);
        opt.step(params, grad);
        offset = 0;
        unflatten_from(model.align_net, params, offset);
        unflatten_from(model.task_net, params, offset);
      }
      last_loss = epoch_loss / static_cast<double>(n_batches);
      if (!std::isfinite(last_loss)) {
        throw DivergenceError("task training diverged at epoch " + std::to_string(epoch) +
                              " (fold " + std::to_string(fold) + ")");
      }
    }

    run.folds.push_back({seed, fold_test_metric(model, test), last_loss});
    run.model = std::move(model);
  }

  const double n = static_cast<double>(run.folds.size());
  for (const TaskFoldResult& f : run.folds) run.mean_metric += f.metric;
  run.mean_metric /= n;
  for (const TaskFoldResult& f : run.folds) {
    run.stdev_metric += (f.metric - run.mean_metric) * (f.metric - run.mean_metric);
  }
  run.stdev_metric = std::sqrt(run.stdev_metric / n);
  return run;
}

}  // namespace lpa
