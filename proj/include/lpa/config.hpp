#pragma once

// Experiment configuration: a small INI dialect (sections, key = value,
// full-line # or ; comments) with strict unknown-key rejection, resolved
// into typed configs. A fingerprint of the resolved settings labels every
// artifact an experiment writes.

#include <map>
#include <string>
#include <vector>

#include "lpa/align.hpp"
#include "lpa/eval.hpp"
#include "lpa/tasker.hpp"
#include "lpa/types.hpp"

namespace lpa {

enum class ExperimentMode { align, task_classify, task_regress };

ExperimentMode parse_experiment_mode(const std::string& name);
const char* experiment_mode_name(ExperimentMode m);

// 16-hex-digit FNV-1a over a canonical settings dump; the fingerprint
// primitive shared by every artifact writer.
std::string fnv1a_hex(const std::string& text);

struct ExperimentConfig {
  ExperimentMode mode = ExperimentMode::align;
  std::string out_dir = ".";

  // Alignment mode data.
  std::string source_embeddings;
  std::string target_embeddings;
  EmbeddingFormat format = EmbeddingFormat::word2vec_text;
  std::string train_lexicon;
  std::string val_lexicon;   // optional
  std::string test_lexicon;  // optional

  // Task mode data: one embedding file, pair TSVs referencing its tokens.
  std::string embeddings;
  std::string train_pairs;
  std::string test_pairs;

  AlignConfig align;
  TaskConfig task;
  RetrievalConfig retrieval;
  Index eval_topk = 1;

  // Task sweep grid.
  std::vector<Index> subset_sizes = {0};  // 0 = all pairs
  std::vector<LossVariant> variants = {LossVariant::baseline, LossVariant::mse,
                                       LossVariant::mse_lpl};
  Index folds = 3;

  void validate() const;

  // FNV-1a hash of the resolved settings (inputs, hyperparameters, seeds —
  // everything that defines the experiment; the output directory is
  // location, not identity).
  std::string fingerprint() const;
};

// Parse + resolve. Relative paths are taken against the config file's
// directory. Unknown sections or keys are errors.
ExperimentConfig load_experiment_config(const std::string& path);

}  // namespace lpa
