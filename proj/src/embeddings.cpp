#include "lpa/embeddings.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace lpa {

namespace {

[[noreturn]] void parse_fail(const std::string& path, long line, const std::string& msg) {
  throw ParseError(path + ":" + std::to_string(line) + ": " + msg);
}

bool has_whitespace(const std::string& s) {
  for (char c : s) {
    if (c == ' ' || c == '\t' || c == '\r' || c == '\n' || c == '\v' || c == '\f') return true;
  }
  return false;
}

double parse_value(const std::string& field, const std::string& path, long line) {
  std::size_t pos = 0;
  double v = 0.0;
  try {
    v = std::stod(field, &pos);
  } catch (const std::exception&) {
    parse_fail(path, line, "not a number: '" + field + "'");
  }
  if (pos != field.size()) parse_fail(path, line, "trailing characters in value: '" + field + "'");
  if (!std::isfinite(v)) parse_fail(path, line, "non-finite value: '" + field + "'");
  return v;
}

std::vector<std::string> split(const std::string& s, char sep, bool collapse) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i <= s.size()) {
    std::size_t j = s.find(sep, i);
    if (j == std::string::npos) j = s.size();
    if (!collapse || j > i) out.push_back(s.substr(i, j - i));
    i = j + 1;
    if (i == s.size() + 1) break;
  }
  if (!collapse && !s.empty() && s.back() == sep) out.push_back("");
  return out;
}

std::string chomp(std::string line) {
  while (!line.empty() && (line.back() == '\n' || line.back() == '\r')) line.pop_back();
  return line;
}

}  // namespace

Vocabulary::Vocabulary(std::vector<std::string> tokens) : tokens_(std::move(tokens)) {
  index_.reserve(tokens_.size());
  for (Index i = 0; i < size(); ++i) {
    auto [it, inserted] = index_.emplace(tokens_[static_cast<std::size_t>(i)], i);
    if (!inserted) throw ConfigError("duplicate token in vocabulary: '" + it->first + "'");
  }
}

std::optional<Index> Vocabulary::lookup(const std::string& token) const {
  auto it = index_.find(token);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::optional<Index> lookup(const Vocabulary& v, const std::string& token) {
  return v.lookup(token);
}

EmbeddingFormat parse_embedding_format(const std::string& name) {
  if (name == "word2vec-text" || name == "word2vec" || name == "w2v") {
    return EmbeddingFormat::word2vec_text;
  }
  if (name == "tsv") return EmbeddingFormat::tsv;
  throw ConfigError("unknown embedding format: '" + name + "' (expected word2vec-text or tsv)");
}

const char* embedding_format_name(EmbeddingFormat f) {
  return f == EmbeddingFormat::word2vec_text ? "word2vec-text" : "tsv";
}

namespace {

EmbeddingMatrix load_word2vec_text(const std::string& path, std::ifstream& in) {
  std::string line;
  if (!std::getline(in, line)) parse_fail(path, 1, "empty file, expected header '<count> <dim>'");
  line = chomp(line);
  auto header = split(line, ' ', /*collapse=*/true);
  if (header.size() != 2) parse_fail(path, 1, "malformed header, expected '<count> <dim>'");
  long count = 0, dim = 0;
  try {
    count = std::stol(header[0]);
    dim = std::stol(header[1]);
  } catch (const std::exception&) {
    parse_fail(path, 1, "malformed header, expected '<count> <dim>'");
  }
  if (count <= 0 || dim <= 0) parse_fail(path, 1, "header counts must be positive");

  Matrix data(count, dim);
  std::vector<std::string> tokens;
  tokens.reserve(static_cast<std::size_t>(count));
  long row = 0;
  long lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    line = chomp(line);
    if (line.empty()) continue;
    if (row >= count) parse_fail(path, lineno, "more rows than the header declared");
    auto fields = split(line, ' ', /*collapse=*/true);
    if (static_cast<long>(fields.size()) != dim + 1) {
      parse_fail(path, lineno,
                 "dimension mismatch: expected " + std::to_string(dim) + " values, got " +
                     std::to_string(static_cast<long>(fields.size()) - 1));
    }
    tokens.push_back(fields[0]);
    for (long j = 0; j < dim; ++j) {
      data(row, j) = parse_value(fields[static_cast<std::size_t>(j + 1)], path, lineno);
    }
    ++row;
  }
  if (row != count) {
    parse_fail(path, lineno, "header declared " + std::to_string(count) + " rows, file has " +
                                 std::to_string(row));
  }
  EmbeddingMatrix m;
  m.data = std::move(data);
  try {
    m.vocab = Vocabulary(std::move(tokens));
  } catch (const ConfigError& e) {
    throw ParseError(path + ": " + e.what());
  }
  return m;
}

EmbeddingMatrix load_tsv(const std::string& path, std::ifstream& in) {
  std::string line;
  std::vector<std::string> tokens;
  std::vector<double> values;
  long dim = -1;
  long lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    line = chomp(line);
    if (line.empty()) continue;
    auto fields = split(line, '\t', /*collapse=*/false);
    if (fields.size() < 2) parse_fail(path, lineno, "expected 'token<TAB>v1<TAB>...<TAB>vd'");
    if (has_whitespace(fields[0])) {
      parse_fail(path, lineno, "token contains whitespace: '" + fields[0] + "'");
    }
    long row_dim = static_cast<long>(fields.size()) - 1;
    if (dim < 0) dim = row_dim;
    if (row_dim != dim) {
      parse_fail(path, lineno, "dimension mismatch: expected " + std::to_string(dim) +
                                   " values, got " + std::to_string(row_dim));
    }
    tokens.push_back(fields[0]);
    for (long j = 0; j < dim; ++j) {
      values.push_back(parse_value(fields[static_cast<std::size_t>(j + 1)], path, lineno));
    }
  }
  if (tokens.empty()) throw ParseError(path + ": no embedding rows");
  Matrix data(static_cast<Index>(tokens.size()), dim);
  for (Index i = 0; i < data.rows(); ++i) {
    for (Index j = 0; j < dim; ++j) {
      data(i, j) = values[static_cast<std::size_t>(i * dim + j)];
    }
  }
  EmbeddingMatrix m;
  m.data = std::move(data);
  try {
    m.vocab = Vocabulary(std::move(tokens));
  } catch (const ConfigError& e) {
    throw ParseError(path + ": " + e.what());
  }
  return m;
}

}  // namespace

EmbeddingMatrix load_embeddings(const std::string& path, EmbeddingFormat format) {
  std::ifstream in(path);
  if (!in) throw ParseError(path + ": cannot open file");
  EmbeddingMatrix m = format == EmbeddingFormat::word2vec_text ? load_word2vec_text(path, in)
                                                               : load_tsv(path, in);
  for (Index i = 0; i < m.rows(); ++i) {
    const std::string& tok = m.vocab.token(i);
    if (tok.empty()) throw ParseError(path + ": empty token at row " + std::to_string(i));
    if (has_whitespace(tok)) throw ParseError(path + ": token contains whitespace: '" + tok + "'");
  }
  return m;
}

void save_embeddings(const std::string& path, const EmbeddingMatrix& m, EmbeddingFormat format) {
  std::ofstream out(path);
  if (!out) throw ParseError(path + ": cannot open file for writing");
  char buf[40];
  const char sep = format == EmbeddingFormat::word2vec_text ? ' ' : '\t';
  if (format == EmbeddingFormat::word2vec_text) {
    out << m.rows() << ' ' << m.dim() << '\n';
  }
  for (Index i = 0; i < m.rows(); ++i) {
    out << m.vocab.token(i);
    for (Index j = 0; j < m.dim(); ++j) {
      std::snprintf(buf, sizeof buf, "%.17g", m.data(i, j));
      out << sep << buf;
    }
    out << '\n';
  }
  if (!out) throw ParseError(path + ": write failed");
}

NormScheme parse_norm_scheme(const std::string& name) {
  if (name == "none") return NormScheme::none;
  if (name == "unit") return NormScheme::unit;
  if (name == "center") return NormScheme::center;
  if (name == "unit_center_unit") return NormScheme::unit_center_unit;
  throw ConfigError("unknown normalization scheme: '" + name + "'");
}

const char* norm_scheme_name(NormScheme s) {
  switch (s) {
    case NormScheme::none: return "none";
    case NormScheme::unit: return "unit";
    case NormScheme::center: return "center";
    case NormScheme::unit_center_unit: return "unit_center_unit";
  }
  return "none";
}

namespace {

void unit_rows(Matrix& data) {
  for (Index i = 0; i < data.rows(); ++i) {
    double norm = data.row(i).norm();
    if (norm == 0.0) {
      throw ConfigError("zero-norm row " + std::to_string(i) + " under unit normalization");
    }
    data.row(i) /= norm;
  }
}

void center_columns(Matrix& data) {
  Eigen::RowVectorXd mean = data.colwise().mean();
  data.rowwise() -= mean;
}

}  // namespace

EmbeddingMatrix normalize(const EmbeddingMatrix& m, NormScheme scheme) {
  EmbeddingMatrix out;
  out.vocab = m.vocab;
  out.data = m.data;
  switch (scheme) {
    case NormScheme::none:
      break;
    case NormScheme::unit:
      unit_rows(out.data);
      break;
    case NormScheme::center:
      center_columns(out.data);
      break;
    case NormScheme::unit_center_unit:
      unit_rows(out.data);
      center_columns(out.data);
      unit_rows(out.data);
      break;
  }
  return out;
}

Lexicon load_lexicon(const std::string& path, const Vocabulary& src, const Vocabulary& tgt,
                     const std::vector<std::string>& class_names) {
  std::ifstream in(path);
  if (!in) throw ParseError(path + ": cannot open file");
  Lexicon lex;
  std::string line;
  long lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    line = chomp(line);
    if (line.empty()) continue;
    auto fields = split(line, '\t', /*collapse=*/false);
    if (fields.size() != 2 && fields.size() != 3) {
      parse_fail(path, lineno, "expected 'source_token<TAB>target_token[<TAB>label]'");
    }
    auto si = src.lookup(fields[0]);
    if (!si) parse_fail(path, lineno, "source token not in vocabulary: '" + fields[0] + "'");
    auto ti = tgt.lookup(fields[1]);
    if (!ti) parse_fail(path, lineno, "target token not in vocabulary: '" + fields[1] + "'");
    lex.pairs.emplace_back(*si, *ti);
    if (fields.size() == 3) {
      if (!class_names.empty()) {
        int id = -1;
        for (std::size_t c = 0; c < class_names.size(); ++c) {
          if (class_names[c] == fields[2]) { id = static_cast<int>(c); break; }
        }
        if (id < 0) parse_fail(path, lineno, "unknown label: '" + fields[2] + "'");
        lex.label_kind = LabelKind::categorical;
        lex.class_labels.push_back(id);
      } else {
        lex.label_kind = LabelKind::continuous;
        lex.continuous_labels.push_back(parse_value(fields[2], path, lineno));
      }
    } else if (lex.label_kind != LabelKind::none) {
      parse_fail(path, lineno, "missing label column");
    }
  }
  if (lex.label_kind == LabelKind::continuous &&
      lex.continuous_labels.size() != lex.pairs.size()) {
    throw ParseError(path + ": some rows are missing the label column");
  }
  if (lex.label_kind == LabelKind::categorical && lex.class_labels.size() != lex.pairs.size()) {
    throw ParseError(path + ": some rows are missing the label column");
  }
  return lex;
}

void save_lexicon(const std::string& path, const Lexicon& lex, const Vocabulary& src,
                  const Vocabulary& tgt, const std::vector<std::string>& class_names) {
  std::ofstream out(path);
  if (!out) throw ParseError(path + ": cannot open file for writing");
  char buf[40];
  for (Index i = 0; i < lex.size(); ++i) {
    const auto& [s, t] = lex.pairs[static_cast<std::size_t>(i)];
    out << src.token(s) << '\t' << tgt.token(t);
    if (lex.label_kind == LabelKind::continuous) {
      std::snprintf(buf, sizeof buf, "%.17g", lex.continuous_labels[static_cast<std::size_t>(i)]);
      out << '\t' << buf;
    } else if (lex.label_kind == LabelKind::categorical) {
      int id = lex.class_labels[static_cast<std::size_t>(i)];
      if (!class_names.empty()) {
        out << '\t' << class_names.at(static_cast<std::size_t>(id));
      } else {
        out << '\t' << id;
      }
    }
    out << '\n';
  }
  if (!out) throw ParseError(path + ": write failed");
}

}  // namespace lpa
