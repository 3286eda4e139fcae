#include <cstdlib>
#include <fstream>
#include <string>

#include "doctest.h"
#include "helpers.hpp"
#include "json.hpp"
#include "lpa/align.hpp"
#include "lpa/embeddings.hpp"
#include "lpa/eval.hpp"
#include "lpa/neighbors.hpp"

using namespace lpa;
using lpa::testing::TempDir;
using lpa::testing::read_file;
using lpa::testing::write_file;
using json = nlohmann::json;

namespace {

// Compile-time path of the built binary, provided by the build.
const char* kCli = LPA_CLI_PATH;

int run(const std::string& args, const std::string& cwd, const std::string& out_file = "") {
  std::string cmd = "cd '" + cwd + "' && '" + kCli + "' " + args;
  cmd += out_file.empty() ? " >/dev/null 2>&1" : " >'" + out_file + "' 2>&1";
  int status = std::system(cmd.c_str());
  return WEXITSTATUS(status);
}

}  // namespace

TEST_CASE("align on a generated rotation fixture reaches high precision") {
  TempDir dir;
  REQUIRE(run("fixture --kind rotation --out rot --n 200 --dim 8 --train 40 --val 40 --test 60",
              dir.path().string()) == 0);
  REQUIRE(run("align --config rot/align.ini", dir.path().string()) == 0);

  json metrics = json::parse(read_file(dir.file("rot/run/metrics.json")));
  CHECK(metrics["metric"] == "precision_at_k");
  CHECK(metrics["value"].get<double>() >= 0.95);
  CHECK(metrics["fingerprint"].get<std::string>().size() == 16);

  // the sidecar carries the same fingerprint and the preprocess scheme
  json sidecar = json::parse(read_file(dir.file("rot/run/map.json")));
  CHECK(sidecar["fingerprint"] == metrics["fingerprint"]);
  CHECK(sidecar["preprocess"] == "none");
}

TEST_CASE("dry run validates without writing artifacts") {
  TempDir dir;
  REQUIRE(run("fixture --kind rotation --out rot --n 60 --dim 4 --train 20 --val 10 --test 10",
              dir.path().string()) == 0);
  CHECK(run("align --config rot/align.ini --dry-run", dir.path().string()) == 0);
  CHECK(!std::filesystem::exists(dir.file("rot/run")));
}

TEST_CASE("a missing input path fails with exit 2 and names the field") {
  TempDir dir;
  write_file(dir.file("broken.ini"),
             "[experiment]\nmode = align\n[data]\n"
             "source_embeddings = absent.vec\n"
             "target_embeddings = also_absent.vec\n"
             "train_lexicon = nope.tsv\n");
  CHECK(run("align --config broken.ini", dir.path().string(), dir.file("err.txt")) == 2);
  std::string err = read_file(dir.file("err.txt"));
  CHECK(err.find("source_embeddings") != std::string::npos);
}

TEST_CASE("bad flags and unknown variants exit 2; divergence exits 3") {
  TempDir dir;
  CHECK(run("align --no-such-flag", dir.path().string()) == 2);
  CHECK(run("nonsense-subcommand", dir.path().string()) == 2);

  REQUIRE(run("fixture --kind task --out tsk --train 30 --test 12 --dim 4",
              dir.path().string()) == 0);
  std::string ini = read_file(dir.file("tsk/task.ini"));
  write_file(dir.file("tsk/bad.ini"),
             ini.substr(0, ini.find("variants =")) + "variants = baseline,what\n");
  CHECK(run("task --config tsk/bad.ini", dir.path().string()) == 2);

  REQUIRE(run("fixture --kind rotation --out rot --n 50 --dim 4 --train 20 --val 10 --test 10",
              dir.path().string()) == 0);
  write_file(dir.file("rot/diverge.ini"),
             "[experiment]\nmode = align\nout = boom\n"
             "[data]\nformat = word2vec-text\nsource_embeddings = src.vec\n"
             "target_embeddings = tgt.vec\ntrain_lexicon = train.tsv\n"
             "[align]\npreprocess = none\nlearning_rate = 1e9\nepochs = 40\n");
  CHECK(run("align --config rot/diverge.ini", dir.path().string()) == 3);
}

TEST_CASE("repeat runs produce byte-identical artifacts") {
  TempDir dir;
  REQUIRE(run("fixture --kind task --out tsk --train 36 --test 18 --dim 4",
              dir.path().string()) == 0);
  // shrink the grid for speed: one subset, one fold
  write_file(dir.file("tsk/small.ini"),
             "[experiment]\nmode = task-classify\nseed = 2\nout = run_a\n"
             "[data]\nembeddings = embeddings.vec\ntrain_pairs = train_pairs.tsv\n"
             "test_pairs = test_pairs.tsv\n"
             "[task]\nvariants = baseline,mse,mse_lpl\nsubset_sizes = 12,36\nfolds = 1\n"
             "hidden = 8\nepochs = 10\nlearning_rate = 0.01\nk = 3\n");
  REQUIRE(run("task --config tsk/small.ini", dir.path().string()) == 0);
  REQUIRE(run("task --config tsk/small.ini --out tsk/run_b", dir.path().string()) == 0);
  CHECK(read_file(dir.file("tsk/run_a/task_metrics.json")) ==
        read_file(dir.file("tsk/run_b/task_metrics.json")));
  CHECK(read_file(dir.file("tsk/run_a/task_metrics.csv")) ==
        read_file(dir.file("tsk/run_b/task_metrics.csv")));

  // the full grid was written: 2 sizes × 3 variants
  json report = json::parse(read_file(dir.file("tsk/run_a/task_metrics.json")));
  CHECK(report["grid"].size() == 6);
}

TEST_CASE("eval scores a checkpoint like the library does") {
  TempDir dir;
  // identity checkpoint over one shared space: self-retrieval is perfect
  Rng rng(3);
  EmbeddingMatrix emb;
  emb.data = lpa::testing::random_matrix(30, 5, rng);
  for (Index i = 0; i < 30; ++i) emb.data.row(i) /= emb.data.row(i).norm();
  std::vector<std::string> tokens;
  for (int i = 0; i < 30; ++i) tokens.push_back("w" + std::to_string(i));
  emb.vocab = Vocabulary(tokens);
  save_embeddings(dir.file("e.vec"), emb, EmbeddingFormat::word2vec_text);
  save_linear_map(dir.file("map.bin"), LinearMap::identity(5));
  std::string lex;
  for (int i = 0; i < 30; ++i) lex += "w" + std::to_string(i) + "\tw" + std::to_string(i) + "\n";
  write_file(dir.file("lex.tsv"), lex);

  std::string common = "eval --model map.bin --source-embeddings e.vec "
                       "--target-embeddings e.vec --lexicon lex.tsv --preprocess none ";
  REQUIRE(run(common + "--method nn --out nn.json", dir.path().string()) == 0);
  REQUIRE(run(common + "--method csls --csls-k 4 --out csls.json", dir.path().string()) == 0);

  json nn = json::parse(read_file(dir.file("nn.json")));
  json csls = json::parse(read_file(dir.file("csls.json")));
  CHECK(nn["value"].get<double>() == 1.0);
  CHECK(nn["method"] == "nn");
  CHECK(csls["method"] == "csls");
  // every artifact carries a fingerprint of its own resolved settings
  CHECK(nn["fingerprint"].get<std::string>().size() == 16);
  CHECK(nn["fingerprint"] != csls["fingerprint"]);

  // bypass the CLI and ask the library directly
  RetrievalConfig rc;
  rc.method = RetrievalMethod::csls;
  rc.csls_k = 4;
  Lexicon lib_lex = load_lexicon(dir.file("lex.tsv"), emb.vocab, emb.vocab);
  double direct = precision_at_k(LinearMap::identity(5), emb.data, emb.data, lib_lex, rc, 1);
  CHECK(csls["value"].get<double>() == direct);
}

TEST_CASE("neighbors output matches the library call and excludes self") {
  TempDir dir;
  write_file(dir.file("line.vec"), "3 1\nzero 0\none 1\nthree 3\n");
  REQUIRE(run("neighbors --embeddings line.vec --token zero --k 1", dir.path().string(),
              dir.file("out.txt")) == 0);
  std::string out = read_file(dir.file("out.txt"));
  CHECK(out.find("one") != std::string::npos);
  CHECK(out.find("zero") == std::string::npos);  // self excluded

  EmbeddingMatrix emb = load_embeddings(dir.file("line.vec"), EmbeddingFormat::word2vec_text);
  KdIndex index(emb.data);
  auto lib = index.knn(0, 1);
  CHECK(out.find(emb.vocab.token(lib[0].id)) != std::string::npos);

  CHECK(run("neighbors --embeddings line.vec --token missing --k 1", dir.path().string()) == 2);
}

TEST_CASE("help exits cleanly") {
  TempDir dir;
  CHECK(run("--help", dir.path().string()) == 0);
  CHECK(run("align --help", dir.path().string()) == 0);
}
