#pragma once

// Retrieval metrics over a trained map: cosine / CSLS ranked retrieval,
// precision@k against a gold lexicon, Pearson correlation and accuracy for
// the task heads, and multi-seed variance summaries.

#include <string>
#include <vector>

#include "lpa/align.hpp"
#include "lpa/embeddings.hpp"
#include "lpa/types.hpp"

namespace lpa {

enum class RetrievalMethod { nn_cosine, csls };

RetrievalMethod parse_retrieval_method(const std::string& name);
const char* retrieval_method_name(RetrievalMethod m);

struct RetrievalConfig {
  RetrievalMethod method = RetrievalMethod::csls;
  Index csls_k = 10;

  void validate() const;
};

double cosine(const Eigen::RowVectorXd& x, const Eigen::RowVectorXd& y);

// 2·cos(x,y) − rT − rS with the caller-supplied hubness corrections.
double csls_score(const Eigen::RowVectorXd& x, const Eigen::RowVectorXd& y, double r_t,
                  double r_s);

// Ranked retrieval from mapped source rows into target rows. Construction
// normalizes both sides and, for CSLS, precomputes each target's mean cosine
// to its csls_k nearest mapped sources. Queries are then cheap and the
// object is safe to share read-only.
class Retriever {
 public:
  Retriever(const LinearMap& f, const Matrix& src, const Matrix& tgt, RetrievalConfig cfg);

  Index n_sources() const { return mapped_.rows(); }
  Index n_targets() const { return targets_.rows(); }

  // Top-k target ids for one source row, best first, ties to the lower id.
  std::vector<Index> retrieve(Index query_id, Index topk) const;

 private:
  RetrievalConfig cfg_;
  Matrix mapped_;   // row-normalized f(src)
  Matrix targets_;  // row-normalized tgt
  Vector r_s_;      // per-target hubness correction (CSLS only)
};

std::vector<Index> retrieve(const LinearMap& f, Index query_id, const Matrix& src,
                            const Matrix& tgt, const RetrievalConfig& cfg, Index topk);

// Fraction of distinct query sources whose gold target (any of them, when a
// source has several) appears in the top-k list.
double precision_at_k(const LinearMap& f, const Matrix& src, const Matrix& tgt,
                      const Lexicon& lex_test, const RetrievalConfig& cfg, Index k);

// Sample Pearson correlation; requires length ≥ 2 and non-zero variance.
double pearson(const std::vector<double>& pred, const std::vector<double>& gold);

// Exact-match fraction.
double accuracy(const std::vector<int>& pred, const std::vector<int>& gold);

struct MetricsReport {
  std::string metric;
  std::vector<double> values;         // one per run
  std::vector<std::uint64_t> seeds;   // matching run seeds
  double mean = 0.0;
  double stdev = 0.0;                 // population standard deviation
  std::string config_fingerprint;
};

MetricsReport variance_report(const std::string& metric, const std::vector<double>& runs,
                              const std::vector<std::uint64_t>& seeds,
                              const std::string& config_fingerprint);

}  // namespace lpa
