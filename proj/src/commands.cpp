#include "lpa/commands.hpp"

#include <atomic>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <thread>

#include "json.hpp"
#include "lpa/eval.hpp"
#include "lpa/fixtures.hpp"

namespace lpa {

namespace {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

void write_text(const std::string& path, const std::string& content) {
  std::ofstream out(path);
  if (!out) throw ParseError(path + ": cannot open file for writing");
  out << content;
  if (!out) throw ParseError(path + ": write failed");
}

void write_json(const std::string& path, const json& j) {
  write_text(path, j.dump(2) + "\n");
}

json optimizer_json(const OptimizerConfig& o) {
  return {{"algorithm", opt_algorithm_name(o.algorithm)},
          {"learning_rate", o.learning_rate},
          {"epochs", o.epochs},
          {"batch_size", o.batch_size},
          {"seed", o.seed},
          {"rmsprop_decay", o.rmsprop_decay},
          {"rmsprop_epsilon", o.rmsprop_epsilon}};
}

}  // namespace

void cmd_align(const ExperimentConfig& cfg, bool dry_run) {
  cfg.validate();
  if (cfg.mode != ExperimentMode::align) throw ConfigError("config mode is not align");
  const std::string fp = cfg.fingerprint();
  if (dry_run) {
    std::cout << "config ok, fingerprint " << fp << "\n";
    return;
  }

  EmbeddingMatrix src = load_embeddings(cfg.source_embeddings, cfg.format);
  EmbeddingMatrix tgt = load_embeddings(cfg.target_embeddings, cfg.format);
  Lexicon train = load_lexicon(cfg.train_lexicon, src.vocab, tgt.vocab);
  Lexicon val, test;
  if (!cfg.val_lexicon.empty()) val = load_lexicon(cfg.val_lexicon, src.vocab, tgt.vocab);
  if (!cfg.test_lexicon.empty()) test = load_lexicon(cfg.test_lexicon, src.vocab, tgt.vocab);

  AlignResult res = train_align(cfg.align, src, tgt, train, val);

  fs::create_directories(cfg.out_dir);
  auto out = [&](const std::string& name) { return (fs::path(cfg.out_dir) / name).string(); };

  save_linear_map(out("map.bin"), res.map);
  save_weights_tsv(out("weights.tsv"), res.weights);
  save_graph_tsv(out("graph.tsv"), res.graph);

  json sidecar = {
      {"fingerprint", fp},
      {"mode", "align"},
      {"dim", res.map.dim()},
      {"preprocess", norm_scheme_name(cfg.align.preprocess)},
      {"best_epoch", res.best_epoch},
      {"best_val_mse", res.best_val_mse},
      {"final_losses",
       {{"l_mse", res.final_losses.l_mse},
        {"l_lpl", res.final_losses.l_lpl},
        {"l_lle", res.final_losses.l_lle},
        {"l_ortho", res.final_losses.l_ortho},
        {"total", res.final_losses.total}}},
      {"config",
       {{"beta", cfg.align.beta},
        {"lambda_ortho", cfg.align.lambda_ortho},
        {"k", cfg.align.k},
        {"lle_ridge", cfg.align.lle_ridge},
        {"weights_solver", weights_solver_name(cfg.align.weights_solver)},
        {"patience", cfg.align.early_stop_patience},
        {"optimizer", optimizer_json(cfg.align.optimizer)}}},
  };
  write_json(out("map.json"), sidecar);

  std::string log;
  for (const TrainLogEntry& e : res.log) {
    json line = {{"epoch", e.epoch},       {"l_mse", e.l_mse},   {"l_lpl", e.l_lpl},
                 {"l_lle", e.l_lle},       {"l_ortho", e.l_ortho}, {"val_mse", e.val_mse}};
    log += line.dump() + "\n";
  }
  write_text(out("train_log.jsonl"), log);

  if (!test.pairs.empty()) {
    Matrix src_n = normalize(src, cfg.align.preprocess).data;
    Matrix tgt_n = normalize(tgt, cfg.align.preprocess).data;
    double p = precision_at_k(res.map, src_n, tgt_n, test, cfg.retrieval, cfg.eval_topk);
    json metrics = {{"fingerprint", fp},
                    {"metric", "precision_at_k"},
                    {"k", cfg.eval_topk},
                    {"method", retrieval_method_name(cfg.retrieval.method)},
                    {"csls_k", cfg.retrieval.csls_k},
                    {"n_test_pairs", test.size()},
                    {"value", p}};
    write_json(out("metrics.json"), metrics);
    std::cout << "precision@" << cfg.eval_topk << " = " << p << " ("
              << retrieval_method_name(cfg.retrieval.method) << ")\n";
  }
  std::cout << "align done: best epoch " << res.best_epoch << ", artifacts in " << cfg.out_dir
            << " (fingerprint " << fp << ")\n";
}

void cmd_task(const ExperimentConfig& cfg, bool dry_run) {
  cfg.validate();
  if (cfg.mode == ExperimentMode::align) throw ConfigError("config mode is not a task mode");
  const std::string fp = cfg.fingerprint();
  if (dry_run) {
    std::cout << "config ok, fingerprint " << fp << "\n";
    return;
  }

  EmbeddingMatrix emb = load_embeddings(cfg.embeddings, cfg.format);
  const std::vector<std::string> label_names =
      cfg.task.kind == TaskKind::classification ? cfg.task.delta.class_names
                                                : std::vector<std::string>{};
  PairDataset train = load_pair_dataset(cfg.train_pairs, emb, cfg.task.kind, label_names);
  PairDataset test = load_pair_dataset(cfg.test_pairs, emb, cfg.task.kind, label_names);

  struct Cell {
    Index subset_size = 0;
    LossVariant variant = LossVariant::baseline;
    TaskRunResult result;
  };
  std::vector<Cell> cells;
  for (Index s : cfg.subset_sizes) {
    for (LossVariant v : cfg.variants) cells.push_back({s, v, {}});
  }

  // Cells are independent; farm them out and keep results in grid order.
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(cells.size());
  auto worker = [&] {
    for (std::size_t i = next.fetch_add(1); i < cells.size(); i = next.fetch_add(1)) {
      try {
        TaskConfig cell_cfg = cfg.task;
        cell_cfg.variant = cells[i].variant;
        cells[i].result = train_task(cell_cfg, train, test, cells[i].subset_size, cfg.folds);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  unsigned n_workers = std::max(1u, std::min(static_cast<unsigned>(cells.size()),
                                             std::thread::hardware_concurrency()));
  std::vector<std::thread> pool;
  for (unsigned w = 0; w < n_workers; ++w) pool.emplace_back(worker);
  for (std::thread& t : pool) t.join();
  for (const std::exception_ptr& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  const char* metric_name = cfg.task.kind == TaskKind::classification ? "accuracy" : "pearson";
  json grid = json::array();
  std::string csv = "subset_size,variant,mean,stdev\n";
  char buf[80];
  for (const Cell& c : cells) {
    json fold_rows = json::array();
    for (const TaskFoldResult& f : c.result.folds) {
      fold_rows.push_back({{"seed", f.seed},
                           {"metric", f.metric},
                           {"final_train_loss", f.final_train_loss}});
    }
    grid.push_back({{"subset_size", c.subset_size},
                    {"variant", loss_variant_name(c.variant)},
                    {"mean", c.result.mean_metric},
                    {"stdev", c.result.stdev_metric},
                    {"min_clipped_term", c.result.min_clipped_term},
                    {"folds", fold_rows}});
    std::snprintf(buf, sizeof buf, "%lld,%s,%.17g,%.17g\n",
                  static_cast<long long>(c.subset_size), loss_variant_name(c.variant),
                  c.result.mean_metric, c.result.stdev_metric);
    csv += buf;
  }
  json report = {{"fingerprint", fp},
                 {"kind", task_kind_name(cfg.task.kind)},
                 {"metric", metric_name},
                 {"folds", cfg.folds},
                 {"grid", grid}};

  fs::create_directories(cfg.out_dir);
  write_json((fs::path(cfg.out_dir) / "task_metrics.json").string(), report);
  write_text((fs::path(cfg.out_dir) / "task_metrics.csv").string(), csv);
  std::cout << "task sweep done: " << cells.size() << " cells x " << cfg.folds
            << " folds, artifacts in " << cfg.out_dir << " (fingerprint " << fp << ")\n";
}

void cmd_eval(const EvalOptions& opts) {
  LinearMap map = load_linear_map(opts.model_path);

  NormScheme scheme = NormScheme::unit_center_unit;
  std::string train_fingerprint;
  fs::path sidecar_path = fs::path(opts.model_path).parent_path() / "map.json";
  if (fs::exists(sidecar_path)) {
    std::ifstream inj(sidecar_path);
    json sidecar = json::parse(inj, nullptr, /*allow_exceptions=*/false);
    if (!sidecar.is_discarded() && sidecar.contains("fingerprint")) {
      train_fingerprint = sidecar["fingerprint"].get<std::string>();
    }
    if (!sidecar.is_discarded() && sidecar.contains("preprocess")) {
      scheme = parse_norm_scheme(sidecar["preprocess"].get<std::string>());
    }
  }
  if (!opts.preprocess_override.empty()) scheme = parse_norm_scheme(opts.preprocess_override);

  EmbeddingMatrix src = load_embeddings(opts.source_embeddings, opts.format);
  EmbeddingMatrix tgt = load_embeddings(opts.target_embeddings, opts.format);
  if (src.dim() != map.dim() || tgt.dim() != map.dim()) {
    throw ConfigError("embedding dimension does not match the checkpoint (" +
                      std::to_string(src.dim()) + " vs " + std::to_string(map.dim()) + ")");
  }
  Lexicon lex = load_lexicon(opts.lexicon, src.vocab, tgt.vocab);

  Matrix src_n = normalize(src, scheme).data;
  Matrix tgt_n = normalize(tgt, scheme).data;
  double p = precision_at_k(map, src_n, tgt_n, lex, opts.retrieval, opts.topk);

  // Fingerprint of this evaluation's own resolved settings; the producing
  // run's fingerprint rides along when the checkpoint sidecar names it.
  std::ostringstream resolved;
  resolved << "eval.model=" << opts.model_path << '\n'
           << "eval.source_embeddings=" << opts.source_embeddings << '\n'
           << "eval.target_embeddings=" << opts.target_embeddings << '\n'
           << "eval.lexicon=" << opts.lexicon << '\n'
           << "eval.format=" << embedding_format_name(opts.format) << '\n'
           << "eval.preprocess=" << norm_scheme_name(scheme) << '\n'
           << "eval.method=" << retrieval_method_name(opts.retrieval.method) << '\n'
           << "eval.csls_k=" << opts.retrieval.csls_k << '\n'
           << "eval.topk=" << opts.topk << '\n';

  json metrics = {{"fingerprint", fnv1a_hex(resolved.str())},
                  {"metric", "precision_at_k"},
                  {"k", opts.topk},
                  {"method", retrieval_method_name(opts.retrieval.method)},
                  {"csls_k", opts.retrieval.csls_k},
                  {"preprocess", norm_scheme_name(scheme)},
                  {"n_test_pairs", lex.size()},
                  {"value", p}};
  if (!train_fingerprint.empty()) metrics["model_fingerprint"] = train_fingerprint;
  std::cout << metrics.dump(2) << "\n";
  if (!opts.out_path.empty()) write_json(opts.out_path, metrics);
}

void cmd_neighbors(const NeighborsOptions& opts) {
  EmbeddingMatrix emb = load_embeddings(opts.embeddings_path, opts.format);
  auto id = emb.vocab.lookup(opts.token);
  if (!id) throw ConfigError("token not in vocabulary: '" + opts.token + "'");
  Matrix m = normalize(emb, opts.preprocess).data;
  KdIndex index(m);
  auto neighbors = index.knn(*id, opts.k, /*exclude_self=*/true);
  char buf[40];
  for (std::size_t r = 0; r < neighbors.size(); ++r) {
    std::snprintf(buf, sizeof buf, "%.6f", neighbors[r].distance);
    std::cout << (r + 1) << "\t" << emb.vocab.token(neighbors[r].id) << "\t" << neighbors[r].id
              << "\t" << buf << "\n";
  }
}

namespace {

void write_rotation_fixture(const FixtureOptions& opts) {
  RotationFixtureConfig fc;
  fc.n = opts.n;
  fc.dim = opts.dim;
  fc.n_train = opts.n_train;
  fc.n_val = opts.n_val;
  fc.n_test = opts.n_test;
  fc.noise_sigma = opts.noise;
  fc.seed = opts.seed;
  RotationFixture fx = make_rotation_fixture(fc);

  auto out = [&](const std::string& name) { return (fs::path(opts.out_dir) / name).string(); };
  save_embeddings(out("src.vec"), fx.src, EmbeddingFormat::word2vec_text);
  save_embeddings(out("tgt.vec"), fx.tgt, EmbeddingFormat::word2vec_text);
  save_lexicon(out("train.tsv"), fx.train, fx.src.vocab, fx.tgt.vocab);
  save_lexicon(out("val.tsv"), fx.val, fx.src.vocab, fx.tgt.vocab);
  save_lexicon(out("test.tsv"), fx.test, fx.src.vocab, fx.tgt.vocab);

  json q = json::array();
  for (Index i = 0; i < fx.q.rows(); ++i) {
    json row = json::array();
    for (Index j = 0; j < fx.q.cols(); ++j) row.push_back(fx.q(i, j));
    q.push_back(row);
  }
  write_json(out("meta.json"), {{"kind", "rotation"},
                                {"seed", fc.seed},
                                {"n", fc.n},
                                {"dim", fc.dim},
                                {"n_train", fc.n_train},
                                {"n_val", fc.n_val},
                                {"n_test", fc.n_test},
                                {"noise_sigma", fc.noise_sigma},
                                {"planted_map", q}});

  // A ready-to-run experiment pointing at the files above. The points are
  // already unit vectors related by a pure rotation, so no preprocessing.
  write_text(out("align.ini"),
             "[experiment]\n"
             "mode = align\n"
             "seed = " + std::to_string(fc.seed) + "\n"
             "out = run\n"
             "\n"
             "[data]\n"
             "format = word2vec-text\n"
             "source_embeddings = src.vec\n"
             "target_embeddings = tgt.vec\n"
             "train_lexicon = train.tsv\n"
             "val_lexicon = val.tsv\n"
             "test_lexicon = test.tsv\n"
             "\n"
             "[align]\n"
             "preprocess = none\n"
             "# unit vectors, full batch: the library default rate is far too timid here\n"
             "learning_rate = 0.5\n"
             "\n"
             "[retrieval]\n"
             "method = nn\n"
             "topk = 1\n");
}

void write_task_fixture(const FixtureOptions& opts) {
  TaskFixtureConfig fc;
  fc.n_train = opts.n_train;
  fc.n_test = opts.n_test;
  fc.dim = opts.dim;
  if (opts.noise > 0.0) fc.noise = opts.noise;
  fc.seed = opts.seed;
  TaskFixture fx = make_task_fixture(fc);

  // One embedding file holds all four row groups; pair files reference the
  // tokens. Round-trips through the dataset loader.
  const Index nr = fx.train.size(), ne = fx.test.size(), d = fc.dim;
  std::vector<std::string> tokens;
  Matrix rows(2 * nr + 2 * ne, d);
  Index at = 0;
  auto add_rows = [&](const Matrix& m, const std::string& prefix) {
    for (Index i = 0; i < m.rows(); ++i) {
      tokens.push_back(prefix + std::to_string(i));
      rows.row(at++) = m.row(i);
    }
  };
  add_rows(fx.train.side1, "trp");
  add_rows(fx.train.side2, "trh");
  add_rows(fx.test.side1, "tep");
  add_rows(fx.test.side2, "teh");
  EmbeddingMatrix emb;
  emb.data = std::move(rows);
  emb.vocab = Vocabulary(std::move(tokens));

  auto out = [&](const std::string& name) { return (fs::path(opts.out_dir) / name).string(); };
  save_embeddings(out("embeddings.vec"), emb, EmbeddingFormat::word2vec_text);

  auto pairs_tsv = [&](const PairDataset& ds, const std::string& p1, const std::string& p2) {
    std::string text;
    for (Index i = 0; i < ds.size(); ++i) {
      text += p1 + std::to_string(i) + "\t" + p2 + std::to_string(i) + "\t" +
              ds.label_names[static_cast<std::size_t>(
                  ds.class_labels[static_cast<std::size_t>(i)])] +
              "\n";
    }
    return text;
  };
  write_text(out("train_pairs.tsv"), pairs_tsv(fx.train, "trp", "trh"));
  write_text(out("test_pairs.tsv"), pairs_tsv(fx.test, "tep", "teh"));

  write_json(out("meta.json"), {{"kind", "task"},
                                {"seed", fc.seed},
                                {"n_train", fc.n_train},
                                {"n_test", fc.n_test},
                                {"dim", fc.dim},
                                {"noise", fc.noise},
                                {"center_spread", fc.center_spread},
                                {"labels", fx.train.label_names}});

  const Index small = std::max<Index>(6, fc.n_train / 5);
  write_text(out("task.ini"),
             "[experiment]\n"
             "mode = task-classify\n"
             "seed = " + std::to_string(fc.seed) + "\n"
             "out = run\n"
             "\n"
             "[data]\n"
             "format = word2vec-text\n"
             "embeddings = embeddings.vec\n"
             "train_pairs = train_pairs.tsv\n"
             "test_pairs = test_pairs.tsv\n"
             "\n"
             "[task]\n"
             "variants = baseline,mse,mse_lpl\n"
             "subset_sizes = " + std::to_string(small) + "," + std::to_string(fc.n_train) + "\n"
             "folds = 3\n"
             "hidden = 32,32\n"
             "epochs = 150\n"
             "learning_rate = 0.005\n"
             "batch_size = 20\n"
             "k = 5\n");
}

}  // namespace

void cmd_fixture(const FixtureOptions& opts) {
  if (opts.out_dir.empty()) throw ConfigError("fixture needs an output directory");
  fs::create_directories(opts.out_dir);
  if (opts.kind == "rotation") {
    write_rotation_fixture(opts);
  } else if (opts.kind == "task") {
    write_task_fixture(opts);
  } else {
    throw ConfigError("unknown fixture kind: '" + opts.kind + "' (expected rotation or task)");
  }
  std::cout << "fixture '" << opts.kind << "' written to " << opts.out_dir << "\n";
}

}  // namespace lpa
