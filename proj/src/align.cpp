#include "lpa/align.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <limits>

#include "lpa/rng.hpp"

namespace lpa {

LinearMap LinearMap::identity(Index d) {
  if (d < 1) throw ConfigError("map dimension must be positive");
  LinearMap f;
  f.weight = Matrix::Identity(d, d);
  return f;
}

Matrix apply_map(const LinearMap& f, const Matrix& x) {
  if (x.cols() != f.weight.cols()) throw ConfigError("input dimension does not match the map");
  return x * f.weight.transpose();
}

namespace {

void check_pair_shapes(const LinearMap& f, const Matrix& src, const Matrix& tgt,
                       const Lexicon& lex) {
  if (f.weight.rows() != f.weight.cols()) throw ConfigError("map weight must be square");
  if (src.cols() != f.dim() || tgt.cols() != f.dim()) {
    throw ConfigError("embedding dimension does not match the map");
  }
  for (const auto& [s, t] : lex.pairs) {
    if (s < 0 || s >= src.rows() || t < 0 || t >= tgt.rows()) {
      throw ConfigError("lexicon indexes a row outside the embedding matrices");
    }
  }
}

}  // namespace

LossValue mse_loss(const LinearMap& f, const Matrix& src, const Matrix& tgt, const Lexicon& lex) {
  check_pair_shapes(f, src, tgt, lex);
  if (lex.pairs.empty()) throw ConfigError("mse_loss over an empty lexicon");
  LossValue out;
  out.grad = Matrix::Zero(f.dim(), f.dim());
  for (const auto& [si, ti] : lex.pairs) {
    Eigen::RowVectorXd s = src.row(si);
    Eigen::RowVectorXd r = s * f.weight.transpose() - tgt.row(ti);
    out.value += r.squaredNorm();
    out.grad.noalias() += 2.0 * r.transpose() * s;
  }
  return out;
}

LossValue lpl_loss(const LinearMap& f, const Matrix& src, const Matrix& tgt, const Lexicon& lex,
                   const NeighborGraph& g, const LleWeights& w) {
  check_pair_shapes(f, src, tgt, lex);
  if (g.rows() != src.rows() || w.rows() != src.rows()) {
    throw ConfigError("weight rows missing for lexicon entries: graph and weights must cover "
                      "the source matrix");
  }
  LossValue out;
  out.grad = Matrix::Zero(f.dim(), f.dim());
  for (const auto& [si, ti] : lex.pairs) {
    // f is linear, so the weighted average of projected neighbors is the
    // projection of the weighted average.
    Eigen::RowVectorXd u = Eigen::RowVectorXd::Zero(src.cols());
    for (Index j = 0; j < g.k; ++j) u += w.w(si, j) * src.row(g.neighbor_ids(si, j));
    Eigen::RowVectorXd r = u * f.weight.transpose() - tgt.row(ti);
    out.value += r.squaredNorm();
    out.grad.noalias() += 2.0 * r.transpose() * u;
  }
  return out;
}

LossValue ortho_penalty(const LinearMap& f) {
  if (f.weight.rows() != f.weight.cols()) throw ConfigError("map weight must be square");
  Matrix p = f.weight * f.weight.transpose();
  p.diagonal().array() -= 1.0;
  LossValue out;
  out.value = p.squaredNorm();
  out.grad = 4.0 * p * f.weight;
  return out;
}

WeightsSolver parse_weights_solver(const std::string& name) {
  if (name == "closed_form" || name == "closed-form" || name == "closed") {
    return WeightsSolver::closed_form;
  }
  if (name == "sgd") return WeightsSolver::sgd;
  throw ConfigError("unknown weights solver: '" + name + "' (expected closed_form or sgd)");
}

const char* weights_solver_name(WeightsSolver s) {
  return s == WeightsSolver::closed_form ? "closed_form" : "sgd";
}

void AlignConfig::validate() const {
  if (beta < 0.0) throw ConfigError("beta must be non-negative");
  if (lambda_ortho < 0.0) throw ConfigError("lambda_ortho must be non-negative");
  if (k < 1) throw ConfigError("k must be at least 1");
  if (lle_ridge < 0.0) throw ConfigError("lle_ridge must be non-negative");
  optimizer.validate();
  if (weights_solver == WeightsSolver::sgd) weights_optimizer.validate();
}

LossValue total_loss(const AlignConfig& cfg, const LossValue& mse, const LossValue& lpl,
                     double lle_value, const LossValue& ortho) {
  LossValue out;
  out.value = mse.value + cfg.beta * lpl.value + lle_value + cfg.lambda_ortho * ortho.value;
  out.grad = mse.grad + cfg.beta * lpl.grad + cfg.lambda_ortho * ortho.grad;
  return out;
}

namespace {

// Mean squared distance between mapped source and target over a lexicon;
// NaN when the lexicon is empty (used for the no-validation case).
double mean_pair_mse(const LinearMap& f, const Matrix& src, const Matrix& tgt,
                     const Lexicon& lex) {
  if (lex.pairs.empty()) return std::numeric_limits<double>::quiet_NaN();
  double total = 0.0;
  for (const auto& [si, ti] : lex.pairs) {
    Eigen::RowVectorXd r = src.row(si) * f.weight.transpose() - tgt.row(ti);
    total += r.squaredNorm();
  }
  return total / static_cast<double>(lex.pairs.size());
}

Lexicon batch_slice(const Lexicon& lex, const std::vector<Index>& order, Index begin, Index end) {
  Lexicon b;
  b.pairs.reserve(static_cast<std::size_t>(end - begin));
  for (Index i = begin; i < end; ++i) {
    b.pairs.push_back(lex.pairs[static_cast<std::size_t>(order[static_cast<std::size_t>(i)])]);
  }
  return b;
}

}  // namespace

AlignResult train_align(const AlignConfig& cfg, const EmbeddingMatrix& src,
                        const EmbeddingMatrix& tgt, const Lexicon& lex_train,
                        const Lexicon& lex_val) {
  cfg.validate();
  if (lex_train.pairs.empty()) throw ConfigError("training lexicon is empty");
  if (src.dim() != tgt.dim()) {
    throw ConfigError("source and target dimensions differ; the linear map is square");
  }

  AlignResult res;
  Matrix src_n = normalize(src, cfg.preprocess).data;
  Matrix tgt_n = normalize(tgt, cfg.preprocess).data;

  // Phase 1: locally-linear weights over the source space, then frozen.
  KdIndex index(src_n);
  res.graph = build_graph(index, cfg.k);
  res.weights = cfg.weights_solver == WeightsSolver::closed_form
                    ? solve_weights_closed(src_n, res.graph, cfg.lle_ridge)
                    : fit_weights_sgd(src_n, res.graph, cfg.weights_optimizer);

  // The weight-reconstruction term is a constant of phase 1; evaluate it
  // once over the supervised points and carry the value through the logs.
  std::vector<Index> train_sources;
  train_sources.reserve(lex_train.pairs.size());
  for (const auto& [si, ti] : lex_train.pairs) train_sources.push_back(si);
  const double l_lle = lle_loss_at(src_n, res.graph, res.weights, train_sources);

  // Phase 2: fit the map.
  const Index n_train = lex_train.size();
  const Index batch =
      cfg.optimizer.batch_size == 0 ? n_train : std::min(cfg.optimizer.batch_size, n_train);
  LinearMap map = LinearMap::identity(src_n.cols());
  Optimizer opt(cfg.optimizer, map.weight.size());
  Rng rng(cfg.optimizer.seed);

  std::vector<Index> order(static_cast<std::size_t>(n_train));
  for (Index i = 0; i < n_train; ++i) order[static_cast<std::size_t>(i)] = i;

  LinearMap best_map = map;
  double best_val = std::numeric_limits<double>::infinity();
  Index best_epoch = 0;
  Index since_best = 0;

  auto log_epoch = [&](Index epoch) {
    LossValue mse = mse_loss(map, src_n, tgt_n, lex_train);
    LossValue lpl = lpl_loss(map, src_n, tgt_n, lex_train, res.graph, res.weights);
    LossValue ortho = ortho_penalty(map);
    double val_mse = mean_pair_mse(map, src_n, tgt_n, lex_val);
    res.log.push_back({epoch, mse.value, lpl.value, l_lle, ortho.value, val_mse});
    double total = mse.value + cfg.beta * lpl.value + l_lle + cfg.lambda_ortho * ortho.value;
    if (!std::isfinite(total)) {
      throw DivergenceError("alignment training diverged at epoch " + std::to_string(epoch) +
                            ": total loss " + std::to_string(total));
    }
    // Validation bookkeeping: strict improvement, earliest epoch keeps ties.
    // Without a validation set the final epoch wins.
    if (lex_val.pairs.empty()) {
      best_map = map;
      best_epoch = epoch;
      best_val = val_mse;
      return;
    }
    if (val_mse < best_val) {
      best_val = val_mse;
      best_map = map;
      best_epoch = epoch;
      since_best = 0;
    } else {
      ++since_best;
    }
  };

  log_epoch(0);
  for (Index epoch = 1; epoch <= cfg.optimizer.epochs; ++epoch) {
    if (!lex_val.pairs.empty() && cfg.early_stop_patience > 0 &&
        since_best >= cfg.early_stop_patience) {
      break;
    }
    rng.shuffle(order);
    for (Index begin = 0; begin < n_train; begin += batch) {
      Index end = std::min(begin + batch, n_train);
      Lexicon b = batch_slice(lex_train, order, begin, end);
      // Per-step objective: per-pair mean of the supervised terms plus the
      // orthogonality penalty, all under the same 1/|batch| scale. Matching
      // scale keeps λ_ortho meaningful independent of lexicon size.
      LossValue mse = mse_loss(map, src_n, tgt_n, b);
      LossValue lpl = lpl_loss(map, src_n, tgt_n, b, res.graph, res.weights);
      LossValue ortho = ortho_penalty(map);
      double inv = 1.0 / static_cast<double>(b.size());
      Matrix grad =
          inv * (mse.grad + cfg.beta * lpl.grad + cfg.lambda_ortho * ortho.grad);
      Eigen::Map<Vector> params(map.weight.data(), map.weight.size());
      Eigen::Map<const Vector> grad_flat(grad.data(), grad.size());
      opt.step(params, grad_flat);
    }
    log_epoch(epoch);
  }

  res.map = best_map;
  res.best_epoch = best_epoch;
  res.best_val_mse = best_val;

  LossValue mse = mse_loss(res.map, src_n, tgt_n, lex_train);
  LossValue lpl = lpl_loss(res.map, src_n, tgt_n, lex_train, res.graph, res.weights);
  LossValue ortho = ortho_penalty(res.map);
  res.final_losses = {mse.value, lpl.value, l_lle, ortho.value,
                      mse.value + cfg.beta * lpl.value + l_lle + cfg.lambda_ortho * ortho.value};
  return res;
}

namespace {

constexpr char kMapMagic[4] = {'L', 'P', 'A', 'M'};
constexpr std::uint32_t kMapVersion = 1;

}  // namespace

void save_linear_map(const std::string& path, const LinearMap& f) {
  if (f.weight.rows() != f.weight.cols()) throw ConfigError("map weight must be square");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ParseError(path + ": cannot open file for writing");
  out.write(kMapMagic, 4);
  std::uint32_t version = kMapVersion;
  std::uint32_t d = static_cast<std::uint32_t>(f.dim());
  out.write(reinterpret_cast<const char*>(&version), sizeof version);
  out.write(reinterpret_cast<const char*>(&d), sizeof d);
  out.write(reinterpret_cast<const char*>(f.weight.data()),
            static_cast<std::streamsize>(sizeof(double)) * f.weight.size());
  if (!out) throw ParseError(path + ": write failed");
}

LinearMap load_linear_map(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError(path + ": cannot open file");
  char magic[4];
  std::uint32_t version = 0, d = 0;
  in.read(magic, 4);
  in.read(reinterpret_cast<char*>(&version), sizeof version);
  in.read(reinterpret_cast<char*>(&d), sizeof d);
  if (!in || std::memcmp(magic, kMapMagic, 4) != 0) {
    throw ParseError(path + ": not a map checkpoint");
  }
  if (version != kMapVersion) {
    throw ParseError(path + ": unsupported checkpoint version " + std::to_string(version));
  }
  if (d == 0 || d > (1u << 20)) throw ParseError(path + ": implausible dimension");
  LinearMap f;
  f.weight.resize(d, d);
  in.read(reinterpret_cast<char*>(f.weight.data()),
          static_cast<std::streamsize>(sizeof(double)) * f.weight.size());
  if (!in) throw ParseError(path + ": truncated checkpoint");
  if (!f.weight.allFinite()) throw ParseError(path + ": non-finite weights");
  return f;
}

}  // namespace lpa
