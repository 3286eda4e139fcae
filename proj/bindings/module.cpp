// Python surface for the alignment library: numpy-centric wrappers over
// loading, neighbors, locally-linear weights, alignment training, retrieval
// metrics, and the regularized pair-task trainer. Matrices cross the
// boundary as float64 arrays; enums cross as their config-file spellings.

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "lpa/align.hpp"
#include "lpa/embeddings.hpp"
#include "lpa/eval.hpp"
#include "lpa/lle.hpp"
#include "lpa/neighbors.hpp"
#include "lpa/tasker.hpp"
#include "lpa/types.hpp"

namespace py = pybind11;
using namespace lpa;

namespace {

Vocabulary vocab_from(const std::vector<std::string>& tokens) { return Vocabulary(tokens); }

EmbeddingMatrix matrix_with_anonymous_vocab(Matrix data) {
  std::vector<std::string> tokens;
  tokens.reserve(static_cast<std::size_t>(data.rows()));
  for (Index i = 0; i < data.rows(); ++i) tokens.push_back(std::to_string(i));
  EmbeddingMatrix m;
  m.data = std::move(data);
  m.vocab = Vocabulary(std::move(tokens));
  return m;
}

Lexicon lexicon_from_pairs(const std::vector<std::pair<Index, Index>>& pairs) {
  Lexicon lex;
  lex.pairs = pairs;
  return lex;
}

DeltaMap delta_from(const py::object& spec) {
  if (spec.is_none()) return DeltaMap::snli();
  if (py::isinstance<py::str>(spec)) {
    std::string name = spec.cast<std::string>();
    if (name == "snli") return DeltaMap::snli();
    if (name == "snli_main") return DeltaMap::snli_main();
    if (name == "mnli") return DeltaMap::mnli();
    throw ConfigError("unknown delta preset '" + name + "' (snli, snli_main, mnli)");
  }
  DeltaMap d;
  d.values = spec.cast<std::vector<double>>();
  for (std::size_t i = 0; i < d.values.size(); ++i) d.class_names.push_back(std::to_string(i));
  return d;
}

py::dict log_entry_dict(const TrainLogEntry& e) {
  py::dict d;
  d["epoch"] = e.epoch;
  d["l_mse"] = e.l_mse;
  d["l_lpl"] = e.l_lpl;
  d["l_lle"] = e.l_lle;
  d["l_ortho"] = e.l_ortho;
  d["val_mse"] = e.val_mse;
  return d;
}

py::dict align_result_dict(const AlignResult& res) {
  py::dict out;
  out["map"] = res.map.weight;
  out["best_epoch"] = res.best_epoch;
  out["best_val_mse"] = res.best_val_mse;
  py::dict fin;
  fin["l_mse"] = res.final_losses.l_mse;
  fin["l_lpl"] = res.final_losses.l_lpl;
  fin["l_lle"] = res.final_losses.l_lle;
  fin["l_ortho"] = res.final_losses.l_ortho;
  fin["total"] = res.final_losses.total;
  out["final_losses"] = fin;
  py::list log;
  for (const TrainLogEntry& e : res.log) log.append(log_entry_dict(e));
  out["log"] = log;
  out["neighbor_ids"] = res.graph.neighbor_ids;
  out["lle_weights"] = res.weights.w;
  return out;
}

py::dict task_result_dict(const TaskRunResult& res) {
  py::dict out;
  out["mean"] = res.mean_metric;
  out["stdev"] = res.stdev_metric;
  out["min_clipped_term"] = res.min_clipped_term;
  py::list folds;
  for (const TaskFoldResult& f : res.folds) {
    py::dict fd;
    fd["seed"] = f.seed;
    fd["metric"] = f.metric;
    fd["final_train_loss"] = f.final_train_loss;
    folds.append(fd);
  }
  out["folds"] = folds;
  return out;
}

PairDataset dataset_from(const Matrix& side1, const Matrix& side2, const py::object& labels,
                         TaskKind kind, std::vector<std::string> label_names) {
  PairDataset ds;
  ds.kind = kind;
  ds.side1 = side1;
  ds.side2 = side2;
  if (kind == TaskKind::classification) {
    ds.class_labels = labels.cast<std::vector<int>>();
    if (label_names.empty()) {
      int top = -1;
      for (int y : ds.class_labels) top = std::max(top, y);
      for (int y = 0; y <= top; ++y) label_names.push_back("class_" + std::to_string(y));
    }
    ds.label_names = std::move(label_names);
  } else {
    ds.scores = labels.cast<std::vector<double>>();
  }
  ds.validate();
  return ds;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Embedding-manifold alignment: locality preserving loss, linear maps, "
            "CSLS retrieval, and alignment-regularized pair tasks.";

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<ParseError>(m, "ParseError", PyExc_ValueError);
  py::register_exception<DivergenceError>(m, "DivergenceError", PyExc_RuntimeError);

  m.def(
      "load_embeddings",
      [](const std::string& path, const std::string& fmt) {
        EmbeddingMatrix e = load_embeddings(path, parse_embedding_format(fmt));
        return py::make_tuple(e.vocab.tokens(), e.data);
      },
      py::arg("path"), py::arg("fmt") = "word2vec-text",
      "Load embeddings; returns (tokens, matrix).");

  m.def(
      "save_embeddings",
      [](const std::string& path, const std::vector<std::string>& tokens, const Matrix& data,
         const std::string& fmt) {
        EmbeddingMatrix e;
        e.data = data;
        e.vocab = vocab_from(tokens);
        save_embeddings(path, e, parse_embedding_format(fmt));
      },
      py::arg("path"), py::arg("tokens"), py::arg("matrix"), py::arg("fmt") = "word2vec-text");

  m.def(
      "load_lexicon",
      [](const std::string& path, const std::vector<std::string>& src_tokens,
         const std::vector<std::string>& tgt_tokens) {
        Lexicon lex = load_lexicon(path, vocab_from(src_tokens), vocab_from(tgt_tokens));
        return lex.pairs;
      },
      py::arg("path"), py::arg("src_tokens"), py::arg("tgt_tokens"),
      "Resolve a token-pair TSV against two vocabularies; returns row-index pairs.");

  m.def(
      "normalize",
      [](const Matrix& data, const std::string& scheme) {
        return normalize(matrix_with_anonymous_vocab(data), parse_norm_scheme(scheme)).data;
      },
      py::arg("matrix"), py::arg("scheme") = "unit_center_unit");

  m.def(
      "knn_graph",
      [](const Matrix& points, Index k) {
        KdIndex index(points);
        NeighborGraph g = build_graph(index, k);
        return py::make_tuple(g.neighbor_ids, g.distances);
      },
      py::arg("points"), py::arg("k"),
      "Exact k-nearest neighbors per row, self excluded; returns (ids, distances).");

  m.def(
      "lle_weights",
      [](const Matrix& points, Index k, double ridge) {
        KdIndex index(points);
        NeighborGraph g = build_graph(index, k);
        LleWeights w = solve_weights_closed(points, g, ridge);
        return py::make_tuple(g.neighbor_ids, w.w, lle_loss(points, g, w));
      },
      py::arg("points"), py::arg("k"), py::arg("ridge") = 1e-3,
      "Locally-linear reconstruction weights; returns (neighbor_ids, weights, loss).");

  m.def(
      "train_align",
      [](const Matrix& src, const Matrix& tgt, const std::vector<std::pair<Index, Index>>& train,
         const std::optional<std::vector<std::pair<Index, Index>>>& val, double beta,
         double lambda_ortho, Index k, double lle_ridge, const std::string& preprocess,
         double learning_rate, Index epochs, Index batch_size, std::uint64_t seed,
         Index patience) {
        AlignConfig cfg;
        cfg.beta = beta;
        cfg.lambda_ortho = lambda_ortho;
        cfg.k = k;
        cfg.lle_ridge = lle_ridge;
        cfg.preprocess = parse_norm_scheme(preprocess);
        cfg.optimizer.learning_rate = learning_rate;
        cfg.optimizer.epochs = epochs;
        cfg.optimizer.batch_size = batch_size;
        cfg.optimizer.seed = seed;
        cfg.early_stop_patience = patience;
        AlignResult res;
        {
          py::gil_scoped_release release;
          res = train_align(cfg, matrix_with_anonymous_vocab(src),
                            matrix_with_anonymous_vocab(tgt), lexicon_from_pairs(train),
                            lexicon_from_pairs(val.value_or(std::vector<std::pair<Index, Index>>{})));
        }
        return align_result_dict(res);
      },
      py::arg("src"), py::arg("tgt"), py::arg("train_pairs"), py::arg("val_pairs") = py::none(),
      py::kw_only(), py::arg("beta") = 0.7, py::arg("lambda_ortho") = 1.0, py::arg("k") = 10,
      py::arg("lle_ridge") = 1e-3, py::arg("preprocess") = "unit_center_unit",
      py::arg("learning_rate") = 1e-3, py::arg("epochs") = 300, py::arg("batch_size") = 0,
      py::arg("seed") = 0, py::arg("patience") = 10,
      "Two-phase alignment training; returns a dict with the map, log, and losses.");

  m.def(
      "apply_map", [](const Matrix& w, const Matrix& x) { return apply_map(LinearMap{w}, x); },
      py::arg("map"), py::arg("x"), "Row-convention application: every row x_i -> x_i @ map.T");

  m.def(
      "save_map", [](const std::string& path, const Matrix& w) {
        save_linear_map(path, LinearMap{w});
      },
      py::arg("path"), py::arg("map"));
  m.def(
      "load_map", [](const std::string& path) { return load_linear_map(path).weight; },
      py::arg("path"));

  m.def(
      "retrieve",
      [](const Matrix& w, const Matrix& src, const Matrix& tgt, Index query_id,
         const std::string& method, Index csls_k, Index topk) {
        RetrievalConfig cfg;
        cfg.method = parse_retrieval_method(method);
        cfg.csls_k = csls_k;
        return retrieve(LinearMap{w}, query_id, src, tgt, cfg, topk);
      },
      py::arg("map"), py::arg("src"), py::arg("tgt"), py::arg("query_id"), py::kw_only(),
      py::arg("method") = "csls", py::arg("csls_k") = 10, py::arg("topk") = 1,
      "Top-k target row ids for one mapped source row.");

  m.def(
      "precision_at_k",
      [](const Matrix& w, const Matrix& src, const Matrix& tgt,
         const std::vector<std::pair<Index, Index>>& pairs, const std::string& method,
         Index csls_k, Index k) {
        RetrievalConfig cfg;
        cfg.method = parse_retrieval_method(method);
        cfg.csls_k = csls_k;
        double value;
        {
          py::gil_scoped_release release;
          value = precision_at_k(LinearMap{w}, src, tgt, lexicon_from_pairs(pairs), cfg, k);
        }
        return value;
      },
      py::arg("map"), py::arg("src"), py::arg("tgt"), py::arg("test_pairs"), py::kw_only(),
      py::arg("method") = "csls", py::arg("csls_k") = 10, py::arg("k") = 1);

  m.def(
      "train_task",
      [](const Matrix& train_s1, const Matrix& train_s2, const py::object& train_labels,
         const Matrix& test_s1, const Matrix& test_s2, const py::object& test_labels,
         const std::string& kind, const std::string& variant,
         const std::vector<std::string>& label_names, double gamma, const py::object& delta,
         double clip_floor, double margin, const std::vector<Index>& hidden, Index k,
         double lle_ridge, double learning_rate, Index epochs, Index batch_size,
         std::uint64_t seed, Index subset_size, Index folds) {
        TaskConfig cfg;
        cfg.kind = parse_task_kind(kind);
        cfg.variant = parse_loss_variant(variant);
        cfg.gamma = gamma;
        cfg.delta = delta_from(delta);
        cfg.clip_floor = clip_floor;
        cfg.margin = margin;
        cfg.task_hidden = hidden;
        cfg.k = k;
        cfg.lle_ridge = lle_ridge;
        cfg.optimizer.learning_rate = learning_rate;
        cfg.optimizer.epochs = epochs;
        cfg.optimizer.batch_size = batch_size;
        cfg.optimizer.seed = seed;
        PairDataset train = dataset_from(train_s1, train_s2, train_labels, cfg.kind, label_names);
        PairDataset test = dataset_from(test_s1, test_s2, test_labels, cfg.kind, label_names);
        TaskRunResult res;
        {
          py::gil_scoped_release release;
          res = train_task(cfg, train, test, subset_size, folds);
        }
        return task_result_dict(res);
      },
      py::arg("train_side1"), py::arg("train_side2"), py::arg("train_labels"),
      py::arg("test_side1"), py::arg("test_side2"), py::arg("test_labels"), py::kw_only(),
      py::arg("kind") = "classification", py::arg("variant") = "mse_lpl",
      py::arg("label_names") = std::vector<std::string>{}, py::arg("gamma") = 1.0,
      py::arg("delta") = py::none(), py::arg("clip_floor") = -1.0, py::arg("margin") = 0.1,
      py::arg("hidden") = std::vector<Index>{32, 32}, py::arg("k") = 10,
      py::arg("lle_ridge") = 1e-3, py::arg("learning_rate") = 1e-4, py::arg("epochs") = 100,
      py::arg("batch_size") = 20, py::arg("seed") = 0, py::arg("subset_size") = 0,
      py::arg("folds") = 1,
      "Cross-validated pair-task training with the alignment regularizer; "
      "returns fold metrics and their mean/stdev.");

  m.def("pearson", &pearson, py::arg("pred"), py::arg("gold"));
  m.def("accuracy", &accuracy, py::arg("pred"), py::arg("gold"));
}
