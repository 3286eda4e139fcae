#pragma once

#include <optional>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "lpa/types.hpp"

namespace lpa {

// Ordered token list with a reverse index. Tokens are matched byte-exactly
// and must be unique.
class Vocabulary {
 public:
  Vocabulary() = default;
  explicit Vocabulary(std::vector<std::string> tokens);

  Index size() const { return static_cast<Index>(tokens_.size()); }
  const std::string& token(Index i) const { return tokens_.at(static_cast<std::size_t>(i)); }
  const std::vector<std::string>& tokens() const { return tokens_; }
  std::optional<Index> lookup(const std::string& token) const;

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, Index> index_;
};

std::optional<Index> lookup(const Vocabulary& v, const std::string& token);

// Dense embedding manifold: one unit vector per vocabulary entry.
// Immutable by convention once loaded; every entry is finite.
struct EmbeddingMatrix {
  Matrix data;
  Vocabulary vocab;

  Index rows() const { return data.rows(); }
  Index dim() const { return data.cols(); }
};

enum class EmbeddingFormat { word2vec_text, tsv };

EmbeddingFormat parse_embedding_format(const std::string& name);
const char* embedding_format_name(EmbeddingFormat f);

EmbeddingMatrix load_embeddings(const std::string& path, EmbeddingFormat format);
void save_embeddings(const std::string& path, const EmbeddingMatrix& m, EmbeddingFormat format);

enum class NormScheme { none, unit, center, unit_center_unit };

NormScheme parse_norm_scheme(const std::string& name);
const char* norm_scheme_name(NormScheme s);

// unit: every row scaled to Euclidean norm 1. center: column means removed.
// unit_center_unit: unit, then center, then unit again.
EmbeddingMatrix normalize(const EmbeddingMatrix& m, NormScheme scheme);

enum class LabelKind { none, continuous, categorical };

// Supervised pair set between two manifolds. Indices refer to rows of the
// source and target matrices the lexicon was resolved against.
struct Lexicon {
  std::vector<std::pair<Index, Index>> pairs;
  LabelKind label_kind = LabelKind::none;
  std::vector<double> continuous_labels;  // parallel to pairs when continuous
  std::vector<int> class_labels;          // parallel to pairs when categorical

  Index size() const { return static_cast<Index>(pairs.size()); }
};

// TSV rows: source_token<TAB>target_token[<TAB>label]. A label column is
// matched against class_names when given, otherwise parsed as a number.
Lexicon load_lexicon(const std::string& path, const Vocabulary& src, const Vocabulary& tgt,
                     const std::vector<std::string>& class_names = {});

void save_lexicon(const std::string& path, const Lexicon& lex, const Vocabulary& src,
                  const Vocabulary& tgt, const std::vector<std::string>& class_names = {});

}  // namespace lpa
