#include "lpa/fixtures.hpp"

#include <Eigen/Dense>
#include <numeric>
#include <string>
#include <vector>

#include "lpa/rng.hpp"

namespace lpa {

void RotationFixtureConfig::validate() const {
  if (n < 2 || dim < 1) throw ConfigError("rotation fixture needs n >= 2 and dim >= 1");
  if (n_train < 1 || n_val < 0 || n_test < 0) {
    throw ConfigError("rotation fixture split sizes invalid");
  }
  if (n_train + n_val + n_test > n) {
    throw ConfigError("rotation fixture splits exceed the point count");
  }
  if (noise_sigma < 0.0) throw ConfigError("noise_sigma must be non-negative");
}

namespace {

Matrix random_orthogonal(Index d, Rng& rng) {
  Matrix g(d, d);
  for (Index i = 0; i < d; ++i) {
    for (Index j = 0; j < d; ++j) g(i, j) = rng.gaussian();
  }
  Eigen::HouseholderQR<Matrix> qr(g);
  Matrix q = qr.householderQ();
  Matrix r = qr.matrixQR().triangularView<Eigen::Upper>();
  // Sign fix makes the factorization unique (and the distribution Haar).
  for (Index j = 0; j < d; ++j) {
    if (r(j, j) < 0.0) q.col(j) = -q.col(j);
  }
  return q;
}

std::vector<std::string> numbered_tokens(const std::string& prefix, Index n) {
  std::vector<std::string> tokens;
  tokens.reserve(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) tokens.push_back(prefix + std::to_string(i));
  return tokens;
}

}  // namespace

RotationFixture make_rotation_fixture(const RotationFixtureConfig& cfg) {
  cfg.validate();
  Rng rng(cfg.seed);

  RotationFixture fx;
  Matrix src(cfg.n, cfg.dim);
  for (Index i = 0; i < cfg.n; ++i) {
    for (Index j = 0; j < cfg.dim; ++j) src(i, j) = rng.gaussian();
    double norm = src.row(i).norm();
    if (norm == 0.0) norm = 1.0;  // astronomically unlikely; keep the row usable
    src.row(i) /= norm;
  }
  fx.q = random_orthogonal(cfg.dim, rng);
  Matrix tgt = src * fx.q.transpose();

  // Disjoint supervision splits over a shuffled pairing i ↔ i.
  std::vector<Index> ids(static_cast<std::size_t>(cfg.n));
  std::iota(ids.begin(), ids.end(), Index{0});
  rng.shuffle(ids);
  auto take = [&](Index begin, Index count, Lexicon& lex) {
    for (Index i = begin; i < begin + count; ++i) {
      Index id = ids[static_cast<std::size_t>(i)];
      lex.pairs.emplace_back(id, id);
    }
  };
  take(0, cfg.n_train, fx.train);
  take(cfg.n_train, cfg.n_val, fx.val);
  take(cfg.n_train + cfg.n_val, cfg.n_test, fx.test);

  // Supervision noise: perturb exactly the rows the trainer reads as
  // targets, leaving the retrieval space clean.
  if (cfg.noise_sigma > 0.0) {
    for (const auto& [s, t] : fx.train.pairs) {
      for (Index j = 0; j < cfg.dim; ++j) tgt(t, j) += cfg.noise_sigma * rng.gaussian();
    }
  }

  fx.src.data = std::move(src);
  fx.src.vocab = Vocabulary(numbered_tokens("s", cfg.n));
  fx.tgt.data = std::move(tgt);
  fx.tgt.vocab = Vocabulary(numbered_tokens("t", cfg.n));
  return fx;
}

void TaskFixtureConfig::validate() const {
  if (n_train < 3 || n_test < 3) throw ConfigError("task fixture needs at least 3 pairs a side");
  if (dim < 2) throw ConfigError("task fixture needs dim >= 2");
  if (noise < 0.0 || center_spread <= 0.0) throw ConfigError("task fixture scales invalid");
}

namespace {

PairDataset sample_task_pairs(Index n, Index dim, double noise, const Matrix& planted,
                              const Eigen::RowVectorXd& contra_offset, Rng& rng) {
  PairDataset ds;
  ds.kind = TaskKind::classification;
  ds.label_names = {"entailment", "neutral", "contradiction"};
  ds.side1.resize(n, dim);
  ds.side2.resize(n, dim);
  Eigen::RowVectorXd g(dim);
  for (Index i = 0; i < n; ++i) {
    int label = static_cast<int>(i % 3);  // balanced classes
    for (Index j = 0; j < dim; ++j) ds.side1(i, j) = rng.gaussian();
    for (Index j = 0; j < dim; ++j) g(j) = rng.gaussian();
    switch (label) {
      case 0:  // entailment: side 2 is the planted image
        ds.side2.row(i) = ds.side1.row(i) * planted.transpose() + noise * g;
        break;
      case 1:  // neutral: side 2 is unrelated
        ds.side2.row(i) = g;
        break;
      case 2:  // contradiction: planted image pushed by a fixed vector
        ds.side2.row(i) =
            ds.side1.row(i) * planted.transpose() + contra_offset + noise * g;
        break;
    }
    ds.class_labels.push_back(label);
  }
  ds.validate();
  return ds;
}

}  // namespace

TaskFixture make_task_fixture(const TaskFixtureConfig& cfg) {
  cfg.validate();
  Rng rng(cfg.seed);

  // The planted rotation keeps ‖s2 − s1‖ uninformative: under it every class
  // sits at a comparable raw distance, and only the relation to R s1 — which
  // a model has to estimate — separates them.
  TaskFixture fx;
  fx.planted = random_orthogonal(cfg.dim, rng);
  Eigen::RowVectorXd contra(cfg.dim);
  for (Index j = 0; j < cfg.dim; ++j) contra(j) = rng.gaussian();
  contra *= cfg.center_spread / contra.norm();

  fx.train = sample_task_pairs(cfg.n_train, cfg.dim, cfg.noise, fx.planted, contra, rng);
  fx.test = sample_task_pairs(cfg.n_test, cfg.dim, cfg.noise, fx.planted, contra, rng);
  return fx;
}

}  // namespace lpa
