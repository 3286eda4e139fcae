#include <cstdint>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "lpa/commands.hpp"

namespace {

struct ExperimentArgs {
  std::string config_path;
  bool dry_run = false;
  std::string out_override;
  std::uint64_t seed = 0;
  bool seed_set = false;
  std::string method_override;
  lpa::Index topk_override = 0;
};

void add_experiment_flags(CLI::App* sub, ExperimentArgs& args) {
  sub->add_option("--config", args.config_path, "experiment config (INI)")->required();
  sub->add_flag("--dry-run", args.dry_run, "validate the config and exit");
  sub->add_option("--seed", args.seed, "override the experiment seed");
  sub->add_option("--out", args.out_override, "override the output directory");
}

lpa::ExperimentConfig load_with_overrides(const ExperimentArgs& args) {
  lpa::ExperimentConfig cfg = lpa::load_experiment_config(args.config_path);
  if (!args.out_override.empty()) cfg.out_dir = args.out_override;
  if (args.seed_set) {
    cfg.align.optimizer.seed = args.seed;
    cfg.align.weights_optimizer.seed = args.seed;
    cfg.task.optimizer.seed = args.seed;
  }
  if (!args.method_override.empty()) {
    cfg.retrieval.method = lpa::parse_retrieval_method(args.method_override);
  }
  if (args.topk_override > 0) cfg.eval_topk = args.topk_override;
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"lpa: linear embedding-space alignment with a locality preserving loss,\n"
               "plus alignment-regularized pair classification/regression"};
  app.require_subcommand(1);

  ExperimentArgs align_args;
  CLI::App* align = app.add_subcommand("align", "train an alignment map from a config");
  add_experiment_flags(align, align_args);
  align->add_option("--method", align_args.method_override,
                    "retrieval method for test metrics (nn|csls)");
  align->add_option("--topk", align_args.topk_override, "precision@k cutoff for test metrics");
  align->callback([&] {
    align_args.seed_set = align->count("--seed") > 0;
    lpa::cmd_align(load_with_overrides(align_args), align_args.dry_run);
  });

  ExperimentArgs task_args;
  CLI::App* task = app.add_subcommand("task", "run the pair-task sweep from a config");
  add_experiment_flags(task, task_args);
  task->callback([&] {
    task_args.seed_set = task->count("--seed") > 0;
    lpa::cmd_task(load_with_overrides(task_args), task_args.dry_run);
  });

  lpa::EvalOptions eval_opts;
  std::string eval_format = "word2vec-text";
  std::string eval_method;
  CLI::App* eval = app.add_subcommand("eval", "score a saved map against a lexicon");
  eval->add_option("--model", eval_opts.model_path, "map checkpoint (map.bin)")->required();
  eval->add_option("--source-embeddings", eval_opts.source_embeddings)->required();
  eval->add_option("--target-embeddings", eval_opts.target_embeddings)->required();
  eval->add_option("--lexicon", eval_opts.lexicon, "test lexicon (TSV)")->required();
  eval->add_option("--format", eval_format, "embedding format (word2vec-text|tsv)");
  eval->add_option("--method", eval_method, "retrieval method (nn|csls)");
  eval->add_option("--csls-k", eval_opts.retrieval.csls_k, "CSLS neighborhood size");
  eval->add_option("--topk", eval_opts.topk, "precision@k cutoff");
  eval->add_option("--preprocess", eval_opts.preprocess_override,
                   "override the checkpoint's preprocessing scheme");
  eval->add_option("--out", eval_opts.out_path, "also write metrics JSON here");
  eval->callback([&] {
    eval_opts.format = lpa::parse_embedding_format(eval_format);
    if (!eval_method.empty()) eval_opts.retrieval.method = lpa::parse_retrieval_method(eval_method);
    lpa::cmd_eval(eval_opts);
  });

  lpa::NeighborsOptions nb_opts;
  std::string nb_format = "word2vec-text";
  std::string nb_preprocess = "none";
  CLI::App* neighbors = app.add_subcommand("neighbors", "print a token's nearest neighbors");
  neighbors->add_option("--embeddings", nb_opts.embeddings_path)->required();
  neighbors->add_option("--format", nb_format, "embedding format (word2vec-text|tsv)");
  neighbors->add_option("--token", nb_opts.token)->required();
  neighbors->add_option("--k", nb_opts.k, "neighbor count");
  neighbors->add_option("--preprocess", nb_preprocess, "normalization before the lookup");
  neighbors->callback([&] {
    nb_opts.format = lpa::parse_embedding_format(nb_format);
    nb_opts.preprocess = lpa::parse_norm_scheme(nb_preprocess);
    lpa::cmd_neighbors(nb_opts);
  });

  lpa::FixtureOptions fx_opts;
  CLI::App* fixture = app.add_subcommand("fixture", "write a synthetic dataset to disk");
  fixture->add_option("--kind", fx_opts.kind, "rotation | task");
  fixture->add_option("--out", fx_opts.out_dir, "output directory")->required();
  fixture->add_option("--seed", fx_opts.seed);
  fixture->add_option("--n", fx_opts.n, "point count (rotation)");
  fixture->add_option("--dim", fx_opts.dim);
  fixture->add_option("--train", fx_opts.n_train);
  fixture->add_option("--val", fx_opts.n_val, "val pair count (rotation)");
  fixture->add_option("--test", fx_opts.n_test);
  fixture->add_option("--noise", fx_opts.noise, "noise scale (0 = fixture default)");
  fixture->callback([&] { lpa::cmd_fixture(fx_opts); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;  // bad flags are config errors; --help is a success
  } catch (const lpa::ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const lpa::ParseError& e) {
    // malformed input files are user-fixable, same bucket as config errors
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
