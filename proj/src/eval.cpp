#include "lpa/eval.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

namespace lpa {

RetrievalMethod parse_retrieval_method(const std::string& name) {
  if (name == "nn" || name == "nn_cosine" || name == "cosine") return RetrievalMethod::nn_cosine;
  if (name == "csls") return RetrievalMethod::csls;
  throw ConfigError("unknown retrieval method: '" + name + "' (expected nn or csls)");
}

const char* retrieval_method_name(RetrievalMethod m) {
  return m == RetrievalMethod::nn_cosine ? "nn" : "csls";
}

void RetrievalConfig::validate() const {
  if (csls_k < 1) throw ConfigError("csls_k must be at least 1");
}

double cosine(const Eigen::RowVectorXd& x, const Eigen::RowVectorXd& y) {
  if (x.size() != y.size()) throw ConfigError("cosine of vectors with different dimensions");
  double nx = x.norm(), ny = y.norm();
  if (nx == 0.0 || ny == 0.0) throw ConfigError("cosine of a zero-norm vector");
  return x.dot(y) / (nx * ny);
}

double csls_score(const Eigen::RowVectorXd& x, const Eigen::RowVectorXd& y, double r_t,
                  double r_s) {
  return 2.0 * cosine(x, y) - r_t - r_s;
}

namespace {

Matrix normalize_rows_checked(Matrix m, const char* what) {
  for (Index i = 0; i < m.rows(); ++i) {
    double norm = m.row(i).norm();
    if (norm == 0.0) {
      throw ConfigError(std::string(what) + " row " + std::to_string(i) +
                        " has zero norm; cosine scores are undefined");
    }
    m.row(i) /= norm;
  }
  return m;
}

// Mean of the k largest values, summed in descending order so the result is
// reproducible against an oracle that sorts the same way.
double mean_top_k(Vector values, Index k) {
  double* data = values.data();
  std::partial_sort(data, data + k, data + values.size(),
                    [](double a, double b) { return a > b; });
  double s = 0.0;
  for (Index i = 0; i < k; ++i) s += data[i];
  return s / static_cast<double>(k);
}

}  // namespace

Retriever::Retriever(const LinearMap& f, const Matrix& src, const Matrix& tgt,
                     RetrievalConfig cfg)
    : cfg_(cfg) {
  cfg_.validate();
  if (src.rows() == 0 || tgt.rows() == 0) throw ConfigError("retrieval needs non-empty matrices");
  mapped_ = normalize_rows_checked(apply_map(f, src), "mapped source");
  targets_ = normalize_rows_checked(tgt, "target");

  if (cfg_.method == RetrievalMethod::csls) {
    if (cfg_.csls_k > mapped_.rows() || cfg_.csls_k > targets_.rows()) {
      throw ConfigError("csls_k exceeds the number of rows on one side");
    }
    // Per-target mean cosine to its csls_k nearest mapped sources. Done in
    // row blocks so the full cosine matrix never materializes at once.
    r_s_.resize(targets_.rows());
    const Index block = std::max<Index>(1, (1 << 23) / std::max<Index>(1, mapped_.rows()));
    for (Index begin = 0; begin < targets_.rows(); begin += block) {
      Index end = std::min(begin + block, targets_.rows());
      Matrix sims = targets_.middleRows(begin, end - begin) * mapped_.transpose();
      for (Index i = 0; i < sims.rows(); ++i) {
        r_s_(begin + i) = mean_top_k(sims.row(i).transpose(), cfg_.csls_k);
      }
    }
  }
}

std::vector<Index> Retriever::retrieve(Index query_id, Index topk) const {
  if (query_id < 0 || query_id >= mapped_.rows()) throw ConfigError("query id out of range");
  if (topk < 1 || topk > targets_.rows()) throw ConfigError("topk out of range");

  Vector scores = targets_ * mapped_.row(query_id).transpose();  // cosines
  if (cfg_.method == RetrievalMethod::csls) {
    double r_t = mean_top_k(scores, cfg_.csls_k);
    scores = 2.0 * scores - r_s_;
    scores.array() -= r_t;
  }

  std::vector<Index> ids(static_cast<std::size_t>(targets_.rows()));
  std::iota(ids.begin(), ids.end(), Index{0});
  auto better = [&](Index a, Index b) {
    return scores(a) != scores(b) ? scores(a) > scores(b) : a < b;
  };
  std::partial_sort(ids.begin(), ids.begin() + topk, ids.end(), better);
  ids.resize(static_cast<std::size_t>(topk));
  return ids;
}

std::vector<Index> retrieve(const LinearMap& f, Index query_id, const Matrix& src,
                            const Matrix& tgt, const RetrievalConfig& cfg, Index topk) {
  return Retriever(f, src, tgt, cfg).retrieve(query_id, topk);
}

double precision_at_k(const LinearMap& f, const Matrix& src, const Matrix& tgt,
                      const Lexicon& lex_test, const RetrievalConfig& cfg, Index k) {
  if (lex_test.pairs.empty()) throw ConfigError("precision@k over an empty lexicon");
  Retriever retriever(f, src, tgt, cfg);

  // Group gold targets by query; a query counts once however many golds it has.
  std::map<Index, std::vector<Index>> gold;
  for (const auto& [s, t] : lex_test.pairs) gold[s].push_back(t);

  Index hits = 0;
  for (const auto& [s, targets] : gold) {
    std::vector<Index> ranked = retriever.retrieve(s, k);
    bool hit = std::any_of(targets.begin(), targets.end(), [&](Index t) {
      return std::find(ranked.begin(), ranked.end(), t) != ranked.end();
    });
    hits += hit ? 1 : 0;
  }
  return static_cast<double>(hits) / static_cast<double>(gold.size());
}

double pearson(const std::vector<double>& pred, const std::vector<double>& gold) {
  if (pred.size() != gold.size()) throw ConfigError("pearson inputs differ in length");
  if (pred.size() < 2) throw ConfigError("pearson needs at least 2 points");
  const double n = static_cast<double>(pred.size());
  double mx = std::accumulate(pred.begin(), pred.end(), 0.0) / n;
  double my = std::accumulate(gold.begin(), gold.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    double dx = pred[i] - mx, dy = gold[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) throw ConfigError("pearson of a zero-variance sequence");
  return sxy / std::sqrt(sxx * syy);
}

double accuracy(const std::vector<int>& pred, const std::vector<int>& gold) {
  if (pred.size() != gold.size()) throw ConfigError("accuracy inputs differ in length");
  if (pred.empty()) throw ConfigError("accuracy of empty predictions");
  std::size_t correct = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) correct += pred[i] == gold[i] ? 1 : 0;
  return static_cast<double>(correct) / static_cast<double>(pred.size());
}

MetricsReport variance_report(const std::string& metric, const std::vector<double>& runs,
                              const std::vector<std::uint64_t>& seeds,
                              const std::string& config_fingerprint) {
  if (runs.size() < 2) throw ConfigError("variance report needs at least 2 runs");
  if (seeds.size() != runs.size()) throw ConfigError("one seed per run required");
  MetricsReport r;
  r.metric = metric;
  r.values = runs;
  r.seeds = seeds;
  r.config_fingerprint = config_fingerprint;
  const double n = static_cast<double>(runs.size());
  r.mean = std::accumulate(runs.begin(), runs.end(), 0.0) / n;
  double ss = 0.0;
  for (double v : runs) ss += (v - r.mean) * (v - r.mean);
  r.stdev = std::sqrt(ss / n);
  return r;
}

}  // namespace lpa
