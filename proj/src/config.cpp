#include "lpa/config.hpp"

#include <cinttypes>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

namespace lpa {

ExperimentMode parse_experiment_mode(const std::string& name) {
  if (name == "align") return ExperimentMode::align;
  if (name == "task-classify" || name == "task_classify") return ExperimentMode::task_classify;
  if (name == "task-regress" || name == "task_regress") return ExperimentMode::task_regress;
  throw ConfigError("unknown mode: '" + name + "' (expected align, task-classify, task-regress)");
}

const char* experiment_mode_name(ExperimentMode m) {
  switch (m) {
    case ExperimentMode::align: return "align";
    case ExperimentMode::task_classify: return "task-classify";
    case ExperimentMode::task_regress: return "task-regress";
  }
  return "align";
}

namespace {

std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

// Section → key → value, with strict duplicate rejection. Consumed keys are
// crossed off so leftovers can be reported as unknown.
class IniTable {
 public:
  IniTable(const std::string& path) : path_(path) {
    std::ifstream in(path);
    if (!in) throw ConfigError(path + ": cannot open config file");
    std::string line, section;
    long lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      std::string t = trim(line);
      if (t.empty() || t[0] == '#' || t[0] == ';') continue;
      if (t.front() == '[') {
        if (t.back() != ']') fail(lineno, "malformed section header");
        section = trim(t.substr(1, t.size() - 2));
        if (section.empty()) fail(lineno, "empty section name");
        sections_[section];
        continue;
      }
      std::size_t eq = t.find('=');
      if (eq == std::string::npos) fail(lineno, "expected 'key = value'");
      std::string key = trim(t.substr(0, eq));
      std::string value = trim(t.substr(eq + 1));
      if (key.empty()) fail(lineno, "empty key");
      if (section.empty()) fail(lineno, "key outside any [section]");
      if (!sections_[section].emplace(key, value).second) {
        fail(lineno, "duplicate key '" + key + "' in [" + section + "]");
      }
    }
  }

  bool has(const std::string& section, const std::string& key) const {
    auto s = sections_.find(section);
    return s != sections_.end() && s->second.count(key) > 0;
  }

  std::string get(const std::string& section, const std::string& key,
                  const std::string& fallback) {
    auto s = sections_.find(section);
    if (s == sections_.end()) return fallback;
    auto k = s->second.find(key);
    if (k == s->second.end()) return fallback;
    consumed_.insert(section + "." + key);
    return k->second;
  }

  std::string require(const std::string& section, const std::string& key) {
    if (!has(section, key)) {
      throw ConfigError(path_ + ": missing required key '" + key + "' in [" + section + "]");
    }
    return get(section, key, "");
  }

  double get_double(const std::string& section, const std::string& key, double fallback) {
    if (!has(section, key)) return fallback;
    return parse_double(section, key, get(section, key, ""));
  }

  Index get_index(const std::string& section, const std::string& key, Index fallback) {
    if (!has(section, key)) return fallback;
    return parse_index(section, key, get(section, key, ""));
  }

  std::uint64_t get_u64(const std::string& section, const std::string& key,
                        std::uint64_t fallback) {
    if (!has(section, key)) return fallback;
    std::string v = get(section, key, "");
    try {
      std::size_t pos = 0;
      std::uint64_t r = std::stoull(v, &pos);
      if (pos != v.size()) throw std::invalid_argument(v);
      return r;
    } catch (const std::exception&) {
      throw ConfigError(path_ + ": bad value for " + section + "." + key + ": '" + v + "'");
    }
  }

  std::vector<std::string> get_list(const std::string& section, const std::string& key) {
    std::string v = get(section, key, "");
    std::vector<std::string> out;
    std::istringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ',')) {
      item = trim(item);
      if (!item.empty()) out.push_back(item);
    }
    return out;
  }

  double parse_double(const std::string& section, const std::string& key, const std::string& v) {
    try {
      std::size_t pos = 0;
      double r = std::stod(v, &pos);
      if (pos != v.size()) throw std::invalid_argument(v);
      return r;
    } catch (const std::exception&) {
      throw ConfigError(path_ + ": bad value for " + section + "." + key + ": '" + v + "'");
    }
  }

  Index parse_index(const std::string& section, const std::string& key, const std::string& v) {
    try {
      std::size_t pos = 0;
      long long r = std::stoll(v, &pos);
      if (pos != v.size()) throw std::invalid_argument(v);
      return static_cast<Index>(r);
    } catch (const std::exception&) {
      throw ConfigError(path_ + ": bad value for " + section + "." + key + ": '" + v + "'");
    }
  }

  // Every key must have been consumed by now.
  void check_all_consumed() const {
    for (const auto& [section, kv] : sections_) {
      for (const auto& [key, value] : kv) {
        if (consumed_.count(section + "." + key) == 0) {
          throw ConfigError(path_ + ": unknown key '" + key + "' in [" + section + "]");
        }
      }
    }
  }

 private:
  [[noreturn]] void fail(long lineno, const std::string& msg) const {
    throw ConfigError(path_ + ":" + std::to_string(lineno) + ": " + msg);
  }

  std::string path_;
  std::map<std::string, std::map<std::string, std::string>> sections_;
  std::set<std::string> consumed_;
};

std::string resolve_path(const std::filesystem::path& base, const std::string& p) {
  if (p.empty()) return p;
  std::filesystem::path fp(p);
  if (fp.is_absolute()) return fp.lexically_normal().string();
  return (base / fp).lexically_normal().string();
}

DeltaMap parse_delta_spec(const std::string& spec) {
  if (spec == "snli") return DeltaMap::snli();
  if (spec == "snli_main" || spec == "snli-main") return DeltaMap::snli_main();
  if (spec == "mnli") return DeltaMap::mnli();
  // Inline form: "label:value,label:value,…"
  DeltaMap dm;
  std::istringstream ss(spec);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (item.empty()) continue;
    std::size_t colon = item.find(':');
    if (colon == std::string::npos) {
      throw ConfigError("bad delta entry '" + item + "' (expected label:value or a preset name)");
    }
    dm.class_names.push_back(trim(item.substr(0, colon)));
    std::string v = trim(item.substr(colon + 1));
    try {
      std::size_t pos = 0;
      dm.values.push_back(std::stod(v, &pos));
      if (pos != v.size()) throw std::invalid_argument(v);
    } catch (const std::exception&) {
      throw ConfigError("bad delta value '" + v + "'");
    }
  }
  if (dm.class_names.empty()) throw ConfigError("empty delta map");
  return dm;
}

void read_optimizer(IniTable& ini, const std::string& section, OptimizerConfig& opt) {
  if (ini.has(section, "optimizer")) {
    opt.algorithm = parse_opt_algorithm(ini.get(section, "optimizer", ""));
  }
  opt.learning_rate = ini.get_double(section, "learning_rate", opt.learning_rate);
  opt.epochs = ini.get_index(section, "epochs", opt.epochs);
  opt.batch_size = ini.get_index(section, "batch_size", opt.batch_size);
  opt.rmsprop_decay = ini.get_double(section, "rmsprop_decay", opt.rmsprop_decay);
  opt.rmsprop_epsilon = ini.get_double(section, "rmsprop_epsilon", opt.rmsprop_epsilon);
}

}  // namespace

void ExperimentConfig::validate() const {
  namespace fs = std::filesystem;
  auto need_file = [](const std::string& what, const std::string& p) {
    if (p.empty()) throw ConfigError("missing required path: " + what);
    if (!fs::exists(p)) throw ConfigError(what + " does not exist: " + p);
  };
  if (mode == ExperimentMode::align) {
    need_file("data.source_embeddings", source_embeddings);
    need_file("data.target_embeddings", target_embeddings);
    need_file("data.train_lexicon", train_lexicon);
    if (!val_lexicon.empty()) need_file("data.val_lexicon", val_lexicon);
    if (!test_lexicon.empty()) need_file("data.test_lexicon", test_lexicon);
    align.validate();
  } else {
    need_file("data.embeddings", embeddings);
    need_file("data.train_pairs", train_pairs);
    need_file("data.test_pairs", test_pairs);
    task.validate();
    if (folds < 1) throw ConfigError("folds must be at least 1");
    if (subset_sizes.empty()) throw ConfigError("subset_sizes must not be empty");
    for (Index s : subset_sizes) {
      if (s < 0) throw ConfigError("subset sizes must be non-negative (0 = all)");
    }
    if (variants.empty()) throw ConfigError("variants must not be empty");
  }
  retrieval.validate();
  if (eval_topk < 1) throw ConfigError("topk must be at least 1");
}

std::string ExperimentConfig::fingerprint() const {
  // Canonical resolved-settings dump; every field that defines the
  // experiment appears exactly once, in a fixed order.
  std::ostringstream ss;
  char buf[40];
  auto num = [&](double v) {
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return std::string(buf);
  };
  ss << "mode=" << experiment_mode_name(mode) << '\n';
  ss << "source_embeddings=" << source_embeddings << '\n';
  ss << "target_embeddings=" << target_embeddings << '\n';
  ss << "format=" << embedding_format_name(format) << '\n';
  ss << "train_lexicon=" << train_lexicon << '\n';
  ss << "val_lexicon=" << val_lexicon << '\n';
  ss << "test_lexicon=" << test_lexicon << '\n';
  ss << "embeddings=" << embeddings << '\n';
  ss << "train_pairs=" << train_pairs << '\n';
  ss << "test_pairs=" << test_pairs << '\n';
  ss << "align.beta=" << num(align.beta) << '\n';
  ss << "align.lambda_ortho=" << num(align.lambda_ortho) << '\n';
  ss << "align.k=" << align.k << '\n';
  ss << "align.lle_ridge=" << num(align.lle_ridge) << '\n';
  ss << "align.weights_solver=" << weights_solver_name(align.weights_solver) << '\n';
  ss << "align.preprocess=" << norm_scheme_name(align.preprocess) << '\n';
  ss << "align.patience=" << align.early_stop_patience << '\n';
  auto opt = [&](const char* prefix, const OptimizerConfig& o) {
    ss << prefix << ".algorithm=" << opt_algorithm_name(o.algorithm) << '\n';
    ss << prefix << ".learning_rate=" << num(o.learning_rate) << '\n';
    ss << prefix << ".epochs=" << o.epochs << '\n';
    ss << prefix << ".batch_size=" << o.batch_size << '\n';
    ss << prefix << ".seed=" << o.seed << '\n';
    ss << prefix << ".rmsprop_decay=" << num(o.rmsprop_decay) << '\n';
    ss << prefix << ".rmsprop_epsilon=" << num(o.rmsprop_epsilon) << '\n';
  };
  opt("align.optimizer", align.optimizer);
  opt("align.weights_optimizer", align.weights_optimizer);
  ss << "task.kind=" << task_kind_name(task.kind) << '\n';
  ss << "task.variant=" << loss_variant_name(task.variant) << '\n';
  ss << "task.gamma=" << num(task.gamma) << '\n';
  for (std::size_t i = 0; i < task.delta.class_names.size(); ++i) {
    ss << "task.delta." << task.delta.class_names[i] << "=" << num(task.delta.values[i]) << '\n';
  }
  ss << "task.clip_floor=" << num(task.clip_floor) << '\n';
  ss << "task.margin=" << num(task.margin) << '\n';
  ss << "task.align_net_hidden=" << task.align_net_hidden << '\n';
  ss << "task.align_net_layers=" << task.align_net_layers << '\n';
  ss << "task.hidden=";
  for (std::size_t i = 0; i < task.task_hidden.size(); ++i) {
    ss << (i ? "," : "") << task.task_hidden[i];
  }
  ss << '\n';
  ss << "task.activation=" << activation_name(task.activation) << '\n';
  ss << "task.k=" << task.k << '\n';
  ss << "task.lle_ridge=" << num(task.lle_ridge) << '\n';
  opt("task.optimizer", task.optimizer);
  ss << "retrieval.method=" << retrieval_method_name(retrieval.method) << '\n';
  ss << "retrieval.csls_k=" << retrieval.csls_k << '\n';
  ss << "retrieval.topk=" << eval_topk << '\n';
  ss << "sweep.subset_sizes=";
  for (std::size_t i = 0; i < subset_sizes.size(); ++i) ss << (i ? "," : "") << subset_sizes[i];
  ss << '\n';
  ss << "sweep.variants=";
  for (std::size_t i = 0; i < variants.size(); ++i) {
    ss << (i ? "," : "") << loss_variant_name(variants[i]);
  }
  ss << '\n';
  ss << "sweep.folds=" << folds << '\n';
  return fnv1a_hex(ss.str());
}

std::string fnv1a_hex(const std::string& text) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ull;
  }
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016" PRIx64, h);
  return buf;
}

ExperimentConfig load_experiment_config(const std::string& path) {
  IniTable ini(path);
  std::filesystem::path base = std::filesystem::path(path).parent_path();

  ExperimentConfig cfg;
  cfg.mode = parse_experiment_mode(ini.require("experiment", "mode"));
  cfg.out_dir = resolve_path(base, ini.get("experiment", "out", "."));
  std::uint64_t seed = ini.get_u64("experiment", "seed", 0);
  cfg.align.optimizer.seed = seed;
  cfg.align.weights_optimizer.seed = seed;
  cfg.task.optimizer.seed = seed;

  if (ini.has("data", "format")) cfg.format = parse_embedding_format(ini.get("data", "format", ""));
  cfg.source_embeddings = resolve_path(base, ini.get("data", "source_embeddings", ""));
  cfg.target_embeddings = resolve_path(base, ini.get("data", "target_embeddings", ""));
  cfg.train_lexicon = resolve_path(base, ini.get("data", "train_lexicon", ""));
  cfg.val_lexicon = resolve_path(base, ini.get("data", "val_lexicon", ""));
  cfg.test_lexicon = resolve_path(base, ini.get("data", "test_lexicon", ""));
  cfg.embeddings = resolve_path(base, ini.get("data", "embeddings", ""));
  cfg.train_pairs = resolve_path(base, ini.get("data", "train_pairs", ""));
  cfg.test_pairs = resolve_path(base, ini.get("data", "test_pairs", ""));

  cfg.align.beta = ini.get_double("align", "beta", cfg.align.beta);
  cfg.align.lambda_ortho = ini.get_double("align", "lambda_ortho", cfg.align.lambda_ortho);
  cfg.align.k = ini.get_index("align", "k", cfg.align.k);
  cfg.align.lle_ridge = ini.get_double("align", "ridge", cfg.align.lle_ridge);
  if (ini.has("align", "weights_solver")) {
    cfg.align.weights_solver = parse_weights_solver(ini.get("align", "weights_solver", ""));
  }
  if (ini.has("align", "preprocess")) {
    cfg.align.preprocess = parse_norm_scheme(ini.get("align", "preprocess", ""));
  }
  cfg.align.early_stop_patience =
      ini.get_index("align", "patience", cfg.align.early_stop_patience);
  read_optimizer(ini, "align", cfg.align.optimizer);
  cfg.align.weights_optimizer.epochs =
      ini.get_index("align", "weights_epochs", cfg.align.weights_optimizer.epochs);
  cfg.align.weights_optimizer.learning_rate =
      ini.get_double("align", "weights_learning_rate", cfg.align.weights_optimizer.learning_rate);

  cfg.task.kind = cfg.mode == ExperimentMode::task_regress ? TaskKind::regression
                                                           : TaskKind::classification;
  if (ini.has("task", "delta")) cfg.task.delta = parse_delta_spec(ini.get("task", "delta", ""));
  cfg.task.gamma = ini.get_double("task", "gamma", cfg.task.gamma);
  cfg.task.clip_floor = ini.get_double("task", "clip_floor", cfg.task.clip_floor);
  cfg.task.margin = ini.get_double("task", "margin", cfg.task.margin);
  cfg.task.align_net_hidden =
      ini.get_index("task", "align_hidden", cfg.task.align_net_hidden);
  cfg.task.align_net_layers =
      ini.get_index("task", "align_layers", cfg.task.align_net_layers);
  if (ini.has("task", "hidden")) {
    cfg.task.task_hidden.clear();
    for (const std::string& h : ini.get_list("task", "hidden")) {
      cfg.task.task_hidden.push_back(ini.parse_index("task", "hidden", h));
    }
  }
  if (ini.has("task", "activation")) {
    cfg.task.activation = parse_activation(ini.get("task", "activation", ""));
  }
  cfg.task.k = ini.get_index("task", "k", cfg.task.k);
  cfg.task.lle_ridge = ini.get_double("task", "ridge", cfg.task.lle_ridge);
  read_optimizer(ini, "task", cfg.task.optimizer);
  if (ini.has("task", "subset_sizes")) {
    cfg.subset_sizes.clear();
    for (const std::string& s : ini.get_list("task", "subset_sizes")) {
      cfg.subset_sizes.push_back(ini.parse_index("task", "subset_sizes", s));
    }
  }
  if (ini.has("task", "variants")) {
    cfg.variants.clear();
    for (const std::string& v : ini.get_list("task", "variants")) {
      cfg.variants.push_back(parse_loss_variant(v));
    }
  }
  cfg.folds = ini.get_index("task", "folds", cfg.folds);

  if (ini.has("retrieval", "method")) {
    cfg.retrieval.method = parse_retrieval_method(ini.get("retrieval", "method", ""));
  }
  cfg.retrieval.csls_k = ini.get_index("retrieval", "csls_k", cfg.retrieval.csls_k);
  cfg.eval_topk = ini.get_index("retrieval", "topk", cfg.eval_topk);

  ini.check_all_consumed();
  return cfg;
}

}  // namespace lpa
