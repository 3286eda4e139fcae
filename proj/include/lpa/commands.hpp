#pragma once

// The CLI verbs. Each takes resolved options, runs the pipeline, writes
// artifacts under the experiment's output directory, and throws on error
// (main maps exception types to exit codes).

#include <string>

#include "lpa/config.hpp"
#include "lpa/types.hpp"

namespace lpa {

// Train the alignment map: writes map.bin, map.json (config + final losses),
// train_log.jsonl, weights.tsv, graph.tsv, and metrics.json when a test
// lexicon is configured. dry_run stops after validation.
void cmd_align(const ExperimentConfig& cfg, bool dry_run);

// Run the task sweep grid (subset sizes × loss variants × folds): writes
// task_metrics.json and the plot-ready task_metrics.csv. Cells run on a
// small worker pool; outputs are assembled in grid order.
void cmd_task(const ExperimentConfig& cfg, bool dry_run);

struct EvalOptions {
  std::string model_path;
  std::string source_embeddings;
  std::string target_embeddings;
  EmbeddingFormat format = EmbeddingFormat::word2vec_text;
  std::string lexicon;
  RetrievalConfig retrieval;
  Index topk = 1;
  // Preprocessing must match training; read from the checkpoint sidecar
  // when present, overridable here.
  std::string preprocess_override;
  std::string out_path;  // optional metrics JSON destination
};

// Score a saved checkpoint against a test lexicon; prints precision@k and
// optionally writes it as JSON.
void cmd_eval(const EvalOptions& opts);

struct NeighborsOptions {
  std::string embeddings_path;
  EmbeddingFormat format = EmbeddingFormat::word2vec_text;
  std::string token;
  Index k = 10;
  NormScheme preprocess = NormScheme::none;
};

// Print a token's k nearest neighbors with distances.
void cmd_neighbors(const NeighborsOptions& opts);

struct FixtureOptions {
  std::string kind = "rotation";  // rotation | task
  std::string out_dir;
  std::uint64_t seed = 0;
  Index n = 500;
  Index dim = 10;
  Index n_train = 50;
  Index n_val = 150;
  Index n_test = 100;
  double noise = 0.0;
};

// Materialize a synthetic fixture as data files a config can point at.
void cmd_fixture(const FixtureOptions& opts);

}  // namespace lpa
