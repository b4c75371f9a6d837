// tdlstm: train, evaluate and inspect target-dependent LSTM sentiment
// classifiers.

#include <CLI11.hpp>

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "tdlstm/io.hpp"
#include "tdlstm/tdlstm.hpp"

namespace fs = std::filesystem;
using namespace tdlstm;

namespace {

enum ExitCode : int {
  kOk = 0,
  kIoFailure = 1,
  kUsage = 2,
  kFormat = 3,
  kNumeric = 4,
};

class UsageError : public Error {
 public:
  using Error::Error;
};

// ---- train ----------------------------------------------------------------

struct TrainArgs {
  std::string train_path;
  std::string test_path;
  std::string embeddings;
  std::size_t dim = 100;
  std::string config_path;
  std::string out = "run";
  int precision = 64;
  bool no_lowercase = false;
  bool quiet = false;

  // Flag overrides; applied after the config file.
  std::string variant, combine, clip_mode;
  std::optional<std::size_t> hidden, epochs;
  std::optional<double> lr, clip;
  std::optional<std::uint64_t> seed;
  std::optional<bool> trainable;
};

TrainConfig resolve_config(const TrainArgs& a) {
  TrainConfig cfg;
  if (!a.config_path.empty()) apply_config(cfg, read_json_file(a.config_path));
  if (!a.variant.empty()) cfg.variant = parse_variant(a.variant);
  if (!a.combine.empty()) cfg.combine = parse_combine(a.combine);
  if (!a.clip_mode.empty()) cfg.clip_mode = parse_clip_mode(a.clip_mode);
  if (a.hidden) cfg.hidden = *a.hidden;
  if (a.epochs) cfg.epochs = *a.epochs;
  if (a.lr) cfg.learning_rate = *a.lr;
  if (a.clip) cfg.clip_threshold = *a.clip;
  if (a.seed) cfg.seed = *a.seed;
  if (a.trainable) cfg.embeddings_trainable = *a.trainable;
  cfg.validate();
  return cfg;
}

/// Seeded streams: one for OOV / random word vectors, one for parameters.
/// Shuffling uses its own stream inside train().
struct RunStreams {
  Rng embeddings;
  Rng params;
  explicit RunStreams(std::uint64_t seed) : embeddings(Rng(seed).split()), params(Rng(seed).split().split()) {}
};

template <typename T>
EmbeddingTable<T> make_table(const std::string& path, std::size_t dim, const Vocabulary& vocab, Rng& rng,
                             bool quiet) {
  if (path.empty()) return random_embeddings<T>(vocab, dim, rng);
  PretrainedLoadReport rep;
  auto table = load_pretrained<T>(path, vocab, rng, &rep);
  if (!quiet) {
    std::cerr << "embeddings: d=" << table.dim() << ", " << rep.matched << "/" << (vocab.size() - 1)
              << " vocabulary words found in " << path << "\n";
  }
  return table;
}

template <typename T>
int run_train(const TrainArgs& a) {
  const TrainConfig cfg = resolve_config(a);
  const auto train_set = parse_corpus(a.train_path);
  std::vector<Instance> test_set;
  if (!a.test_path.empty()) test_set = parse_corpus(a.test_path);
  Vocabulary vocab = build_vocabulary({&train_set, &test_set}, !a.no_lowercase);

  RunStreams streams(cfg.seed);
  auto table = make_table<T>(a.embeddings, a.dim, vocab, streams.embeddings, a.quiet);
  Model<T> model = initialize_model<T>(cfg, vocab, std::move(table), streams.params);
  if (!a.quiet) {
    std::cerr << "training " << to_string(cfg.variant) << " (d=" << model.params.shape.hidden << ", "
              << model.params.parameter_count() << " parameters) on " << train_set.size() << " instances\n";
  }

  fs::create_directories(a.out);
  const auto enc_train = encode_all(train_set, model.vocab);
  const auto enc_test = encode_all(test_set, model.vocab);
  auto result = train<T>(std::move(model), enc_train, enc_test, cfg, [&](const EpochRecord& r, const Model<T>&) {
    if (!a.quiet) {
      std::cerr << "epoch " << r.epoch << "  loss " << std::fixed << std::setprecision(5) << r.mean_loss;
      if (r.train_accuracy) std::cerr << "  train_acc " << *r.train_accuracy;
      if (r.test_accuracy) std::cerr << "  test_acc " << *r.test_accuracy << "  test_f1 " << *r.test_macro_f1;
      std::cerr << "  " << std::setprecision(2) << r.seconds << "s\n" << std::defaultfloat;
    }
    return true;
  });

  save_model(a.out + "/model.ckpt", result.model);
  write_train_log(a.out + "/train_log.jsonl", result.log);
  write_timing_log(a.out + "/timing.jsonl", result.log);
  result.model.vocab.save(a.out + "/vocab.txt");

  const auto& last = result.log.epochs.back();
  std::cout << "variant " << to_string(cfg.variant) << "\n";
  if (last.test_accuracy) {
    std::cout << "test_accuracy " << *last.test_accuracy << "\n"
              << "test_macro_f1 " << *last.test_macro_f1 << "\n";
  }
  std::cout << "checkpoint " << a.out << "/model.ckpt\n";
  return kOk;
}

// ---- eval -----------------------------------------------------------------

struct EvalArgs {
  std::string checkpoint;
  std::string corpus;
  std::string out;
  std::string reference;
  std::size_t show_errors = 0;
};

std::uint8_t checkpoint_width(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read checkpoint '" + path + "'");
  char head[13] = {};
  in.read(head, sizeof head);
  if (in.gcount() < static_cast<std::streamsize>(sizeof head)) throw LoadError("checkpoint is truncated");
  return static_cast<std::uint8_t>(head[12]);
}

std::string join(const std::vector<std::string>& toks, std::size_t b, std::size_t e) {
  std::string s;
  for (std::size_t i = b; i < e; ++i) s += (s.empty() ? "" : " ") + toks[i];
  return s;
}

void print_case(const ErrorCase& c) {
  const Instance& inst = *c.instance;
  std::cout << "  #" << c.index << " gold " << static_cast<int>(polarity_of_class(c.gold)) << " predicted "
            << static_cast<int>(polarity_of_class(c.predicted)) << " | " << join(inst.tokens, 0, inst.target_begin)
            << " [" << join(inst.tokens, inst.target_begin, inst.target_end) << "] "
            << join(inst.tokens, inst.target_end, inst.tokens.size()) << "\n";
}

template <typename T>
int run_eval(const EvalArgs& a) {
  const Model<T> model = load_model<T>(a.checkpoint);
  const auto corpus = parse_corpus(a.corpus);
  const auto enc = encode_all(corpus, model.vocab);
  const auto preds = predict_classes(model, enc);
  std::vector<std::size_t> golds;
  for (const auto& x : enc) golds.push_back(x.gold);
  const EvalReport report = evaluate(preds, golds, model.params.shape.classes);

  std::cout << "model " << to_string(model.params.variant()) << "\n" << format_report(report);
  if (!a.out.empty()) {
    std::ofstream out(a.out);
    if (!out) throw IoError("cannot write report '" + a.out + "'");
    json j = to_json(report);
    j["variant"] = std::string(to_string(model.params.variant()));
    out << j.dump(2) << "\n";
  }
  if (!a.reference.empty()) {
    const Model<T> ref = load_model<T>(a.reference);
    const auto ref_preds = predict_classes(ref, encode_all(corpus, ref.vocab));
    const auto cases = error_cases(corpus, preds, &ref_preds);
    std::cout << "\n" << cases.size() << " examples misclassified by " << to_string(model.params.variant())
              << " but correct under " << to_string(ref.params.variant()) << "\n";
    for (std::size_t i = 0; i < std::min(cases.size(), std::max<std::size_t>(a.show_errors, 10)); ++i)
      print_case(cases[i]);
  } else if (a.show_errors > 0) {
    const auto cases = error_cases(corpus, preds);
    std::cout << "\nfirst " << std::min(a.show_errors, cases.size()) << " of " << cases.size() << " errors\n";
    for (std::size_t i = 0; i < std::min(cases.size(), a.show_errors); ++i) print_case(cases[i]);
  }
  return kOk;
}

// ---- predict --------------------------------------------------------------

struct PredictArgs {
  std::string checkpoint;
  std::string sentence;
  std::string target;
};

template <typename T>
int run_predict(const PredictArgs& a) {
  if (a.sentence.find(kTargetPlaceholder) == std::string::npos) {
    throw UsageError("--sentence must mark the target position with " + std::string(kTargetPlaceholder));
  }
  const Model<T> model = load_model<T>(a.checkpoint);
  Instance inst;
  try {
    inst = make_instance(a.sentence, a.target, Polarity::neutral, "--sentence");
  } catch (const FormatError& e) {
    throw UsageError(e.what());
  }
  const auto pred = model.predict(inst);
  std::cout << "label " << class_name(pred.predicted_class) << "\n" << std::setprecision(6) << std::fixed;
  for (std::size_t c = 0; c < pred.probabilities.size(); ++c) {
    std::cout << "p(" << class_name(c) << ") " << static_cast<double>(pred.probabilities[c]) << "\n";
  }
  return kOk;
}

// ---- gradcheck ------------------------------------------------------------

struct GradcheckArgs {
  std::string variant = "td-lstm";
  std::size_t dim = 4;
  std::size_t hidden = 0;
  std::uint64_t seed = 1;
  std::size_t preceding = 3, target = 2, following = 3;
  std::string combine = "concat";
  bool inject_fault = false;
};

int run_gradcheck(const GradcheckArgs& a) {
  ModelShape shape;
  shape.variant = parse_variant(a.variant);
  shape.combine = parse_combine(a.combine);
  shape.embedding_dim = a.dim;
  shape.hidden = a.hidden == 0 ? a.dim : a.hidden;
  auto c = make_gradcheck_case<double>(shape, a.preceding, a.target, a.following, a.seed);
  GradCheckOptions opt;
  opt.inject_fault = a.inject_fault;
  const auto r = gradient_check(c.params, c.table, c.instance, opt);
  std::cout << "gradcheck " << a.variant << " d=" << shape.hidden << " seed=" << a.seed << " eps=" << opt.epsilon
            << " tol=" << opt.tolerance << "\n";
  for (const auto& p : r.params) {
    std::cout << "  " << std::left << std::setw(14) << p.name << std::right << std::setw(6) << p.entries
              << "  max_rel_err " << std::scientific << std::setprecision(3) << p.max_rel_error << std::defaultfloat
              << "  " << (p.pass ? "PASS" : "FAIL") << "\n";
  }
  std::cout << (r.pass() ? "PASS" : "FAIL") << "\n";
  return r.pass() ? kOk : kNumeric;
}

// ---- synth ----------------------------------------------------------------

struct SynthArgs {
  std::string out = "synthetic";
  std::size_t bases = 1000;
  std::uint64_t seed = 1;
  std::size_t dim = 50;
  double test_fraction = 0.2;
};

int run_synth(const SynthArgs& a) {
  if (a.bases < 2) throw UsageError("--bases must be at least 2");
  Rng rng(a.seed);
  SyntheticOptions opt;
  opt.base_sentences = a.bases;
  const auto data = generate_target_pairs(opt, rng);
  std::size_t test_bases = static_cast<std::size_t>(a.test_fraction * static_cast<double>(a.bases));
  test_bases = std::clamp<std::size_t>(test_bases, 1, a.bases - 1);
  const std::size_t split_at = 2 * (a.bases - test_bases);
  fs::create_directories(a.out);
  {
    std::ofstream tr(a.out + "/train.txt"), te(a.out + "/test.txt");
    if (!tr || !te) throw IoError("cannot write corpus files under '" + a.out + "'");
    for (std::size_t i = 0; i < data.size(); ++i) write_record(i < split_at ? tr : te, data[i]);
  }
  const Vocabulary vocab = build_vocabulary({&data});
  Rng erng = rng.split();
  const auto table = random_embeddings<double>(vocab, a.dim, erng, 0.5);
  save_text_embeddings(a.out + "/embeddings.txt", table, vocab);
  std::cout << "wrote " << split_at << " training and " << data.size() - split_at << " test instances, "
            << (vocab.size() - 1) << " word vectors (d=" << a.dim << ") to " << a.out << "/\n";
  return kOk;
}

// ---- experiment -----------------------------------------------------------

struct ExperimentArgs {
  std::string spec;
  std::string out;
};

struct EmbeddingSource {
  std::string name;
  std::string path;
  std::size_t random_dim = 0;
  double range = kOovInitRange;
};

struct CellResult {
  std::string variant, embedding;
  std::uint64_t seed = 0;
  std::size_t dim = 0;
  bool ok = false;
  std::string error;
  double accuracy = 0, macro_f1 = 0, seconds_per_epoch = 0;
};

std::string fmt(double v, int prec) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(prec) << v;
  return os.str();
}

int run_experiment(const ExperimentArgs& a) {
  const json spec = read_json_file(a.spec);
  const auto list = [&](const char* key) {
    if (!spec.contains(key) || !spec[key].is_array() || spec[key].empty()) {
      throw UsageError(std::string("experiment spec needs a non-empty '") + key + "' list");
    }
    return spec[key];
  };
  const json variants = list("variants");
  const json embeddings = list("embeddings");
  const json seeds = list("seeds");

  std::vector<Instance> train_set, test_set;
  if (spec.contains("synthetic")) {
    const json& s = spec["synthetic"];
    SyntheticOptions opt;
    opt.base_sentences = s.value("base_sentences", std::size_t{1000});
    Rng rng(s.value("seed", std::uint64_t{1}));
    auto data = generate_target_pairs(opt, rng);
    const std::size_t split_at = 2 * (opt.base_sentences - opt.base_sentences / 5);
    train_set.assign(data.begin(), data.begin() + static_cast<std::ptrdiff_t>(split_at));
    test_set.assign(data.begin() + static_cast<std::ptrdiff_t>(split_at), data.end());
  } else {
    if (!spec.contains("train") || !spec.contains("test")) {
      throw UsageError("experiment spec needs 'train' and 'test' corpus paths (or 'synthetic')");
    }
    train_set = parse_corpus(spec["train"].get<std::string>());
    test_set = parse_corpus(spec["test"].get<std::string>());
  }
  const bool lower = spec.value("lowercase", true);
  const Vocabulary vocab = build_vocabulary({&train_set, &test_set}, lower);

  TrainConfig base;
  if (spec.contains("config")) apply_config(base, spec["config"]);

  std::vector<EmbeddingSource> sources;
  for (const auto& e : embeddings) {
    EmbeddingSource s;
    s.name = e.value("name", std::string());
    s.path = e.value("path", std::string());
    s.random_dim = e.value("random_dim", std::size_t{0});
    s.range = e.value("range", kOovInitRange);
    if (s.path.empty() && s.random_dim == 0) throw UsageError("embedding entry needs 'path' or 'random_dim'");
    if (s.name.empty()) s.name = s.path.empty() ? "random" + std::to_string(s.random_dim) : fs::path(s.path).stem().string();
    sources.push_back(s);
  }

  std::vector<CellResult> cells;
  for (const auto& src : sources) {
    for (const auto& v : variants) {
      for (const auto& sd : seeds) {
        CellResult cell;
        cell.variant = v.get<std::string>();
        cell.embedding = src.name;
        cell.seed = sd.get<std::uint64_t>();
        try {
          TrainConfig cfg = base;
          cfg.variant = parse_variant(cell.variant);
          cfg.seed = cell.seed;
          RunStreams streams(cfg.seed);
          EmbeddingTable<double> table =
              src.path.empty() ? random_embeddings<double>(vocab, src.random_dim, streams.embeddings, src.range)
                               : load_pretrained<double>(src.path, vocab, streams.embeddings);
          cell.dim = table.dim();
          auto model = initialize_model<double>(cfg, vocab, std::move(table), streams.params);
          const auto result =
              train<double>(std::move(model), encode_all(train_set, vocab), encode_all(test_set, vocab), cfg);
          const auto& last = result.log.epochs.back();
          cell.accuracy = last.test_accuracy.value_or(0);
          cell.macro_f1 = last.test_macro_f1.value_or(0);
          double secs = 0;
          for (const auto& r : result.log.epochs) secs += r.seconds;
          cell.seconds_per_epoch = secs / static_cast<double>(result.log.epochs.size());
          cell.ok = true;
        } catch (const std::exception& e) {
          cell.error = e.what();
        }
        std::cerr << "cell " << cell.variant << " / " << cell.embedding << " / seed " << cell.seed << ": "
                  << (cell.ok ? "acc " + fmt(cell.accuracy, 4) : "FAILED: " + cell.error) << "\n";
        cells.push_back(cell);
      }
    }
  }

  std::cout << std::left << std::setw(13) << "variant" << std::setw(18) << "embedding" << std::right << std::setw(5)
            << "dim" << std::setw(7) << "seed" << std::setw(10) << "accuracy" << std::setw(10) << "macro_f1"
            << std::setw(12) << "sec/epoch" << "  status\n";
  for (const auto& c : cells) {
    std::cout << std::left << std::setw(13) << c.variant << std::setw(18) << c.embedding << std::right << std::setw(5)
              << c.dim << std::setw(7) << c.seed << std::setw(10) << (c.ok ? fmt(c.accuracy, 4) : "-")
              << std::setw(10) << (c.ok ? fmt(c.macro_f1, 4) : "-") << std::setw(12)
              << (c.ok ? fmt(c.seconds_per_epoch, 3) : "-") << "  " << (c.ok ? "ok" : "failed: " + c.error) << "\n";
  }
  // Seed-averaged summary, one row per (variant, embedding).
  std::cout << "\nmean over seeds\n";
  for (const auto& src : sources) {
    for (const auto& v : variants) {
      double acc = 0, f1 = 0, sec = 0;
      std::size_t n = 0;
      std::size_t dim = 0;
      for (const auto& c : cells) {
        if (c.ok && c.variant == v.get<std::string>() && c.embedding == src.name) {
          acc += c.accuracy, f1 += c.macro_f1, sec += c.seconds_per_epoch, dim = c.dim, ++n;
        }
      }
      std::cout << std::left << std::setw(13) << v.get<std::string>() << std::setw(18) << src.name << std::right
                << std::setw(5) << dim << std::setw(7) << n;
      if (n == 0) {
        std::cout << std::setw(10) << "-" << std::setw(10) << "-" << std::setw(12) << "-" << "\n";
      } else {
        const double k = static_cast<double>(n);
        std::cout << std::setw(10) << fmt(acc / k, 4) << std::setw(10) << fmt(f1 / k, 4) << std::setw(12)
                  << fmt(sec / k, 3) << "\n";
      }
    }
  }

  if (!a.out.empty()) {
    std::ofstream out(a.out);
    if (!out) throw IoError("cannot write '" + a.out + "'");
    for (const auto& c : cells) {
      json j{{"variant", c.variant}, {"embedding", c.embedding}, {"dim", c.dim}, {"seed", c.seed}, {"ok", c.ok}};
      if (c.ok) {
        j["accuracy"] = c.accuracy;
        j["macro_f1"] = c.macro_f1;
        j["seconds_per_epoch"] = c.seconds_per_epoch;
      } else {
        j["error"] = c.error;
      }
      out << j.dump() << "\n";
    }
  }
  return kOk;
}

void require_file(const std::string& path, const char* flag) {
  if (path.empty()) throw UsageError(std::string(flag) + " is required");
  if (!fs::exists(path)) throw UsageError(std::string(flag) + ": no such file '" + path + "'");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Target-dependent LSTM sentiment classification"};
  app.require_subcommand(1);

  TrainArgs ta;
  auto* train_cmd = app.add_subcommand("train", "Train a classifier and write checkpoint + logs");
  train_cmd->add_option("--train", ta.train_path, "Training corpus (3-line $T$ records)");
  train_cmd->add_option("--test", ta.test_path, "Test corpus, evaluated after every epoch");
  train_cmd->add_option("--embeddings", ta.embeddings, "Pre-trained word vectors (GloVe/SSWE text format)");
  train_cmd->add_option("--dim", ta.dim, "Word vector size when no --embeddings file is given")->capture_default_str();
  train_cmd->add_option("--variant", ta.variant, "lstm | td-lstm | tc-lstm | att-td-lstm");
  train_cmd->add_option("--hidden", ta.hidden, "Hidden size (default: embedding dimension)");
  train_cmd->add_option("--lr", ta.lr, "Learning rate (default 0.01)");
  train_cmd->add_option("--epochs", ta.epochs, "Passes over the training set (default 10)");
  train_cmd->add_option("--seed", ta.seed, "Random seed (default 1)");
  train_cmd->add_option("--clip", ta.clip, "Softmax-layer gradient clipping threshold (default 200)");
  train_cmd->add_option("--clip-mode", ta.clip_mode, "norm | value | off");
  train_cmd->add_option("--combine", ta.combine, "concat | sum | mean");
  train_cmd->add_option("--trainable-embeddings", ta.trainable, "Fine-tune word vectors (true/false)");
  train_cmd->add_option("--config", ta.config_path, "JSON config; flags take precedence");
  train_cmd->add_option("--out", ta.out, "Output directory")->capture_default_str();
  train_cmd->add_option("--precision", ta.precision, "64 or 32 bit arithmetic")->check(CLI::IsMember({32, 64}));
  train_cmd->add_flag("--no-lowercase", ta.no_lowercase, "Keep token case for vocabulary lookup");
  train_cmd->add_flag("--quiet", ta.quiet, "No per-epoch progress on stderr");

  EvalArgs ea;
  auto* eval_cmd = app.add_subcommand("eval", "Evaluate a checkpoint on a corpus");
  eval_cmd->add_option("--checkpoint", ea.checkpoint, "Model checkpoint");
  eval_cmd->add_option("--corpus", ea.corpus, "Corpus to score");
  eval_cmd->add_option("--out", ea.out, "Also write the report as JSON");
  eval_cmd->add_option("--errors", ea.show_errors, "Print this many misclassified examples");
  eval_cmd->add_option("--reference", ea.reference,
                       "Second checkpoint: list errors of --checkpoint that this model gets right");

  PredictArgs pa;
  auto* predict_cmd = app.add_subcommand("predict", "Classify one sentence towards a target");
  predict_cmd->add_option("--checkpoint", pa.checkpoint, "Model checkpoint");
  predict_cmd->add_option("--sentence", pa.sentence, "Sentence with $T$ at the target position");
  predict_cmd->add_option("--target", pa.target, "Target words");

  GradcheckArgs ga;
  auto* grad_cmd = app.add_subcommand("gradcheck", "Compare analytic and finite-difference gradients");
  grad_cmd->add_option("--variant", ga.variant)->capture_default_str();
  grad_cmd->add_option("--dim", ga.dim, "Word vector size")->capture_default_str();
  grad_cmd->add_option("--hidden", ga.hidden, "Hidden size (default: --dim)");
  grad_cmd->add_option("--seed", ga.seed)->capture_default_str();
  grad_cmd->add_option("--preceding", ga.preceding, "Preceding-context length")->capture_default_str();
  grad_cmd->add_option("--target-len", ga.target, "Target length")->capture_default_str();
  grad_cmd->add_option("--following", ga.following, "Following-context length")->capture_default_str();
  grad_cmd->add_option("--combine", ga.combine)->capture_default_str();
  grad_cmd->add_flag("--inject-fault", ga.inject_fault, "Corrupt the LSTM adjoint (negative control)");

  ExperimentArgs xa;
  auto* exp_cmd = app.add_subcommand("experiment", "Run a variants x embeddings x seeds grid");
  exp_cmd->add_option("--spec", xa.spec, "JSON grid description");
  exp_cmd->add_option("--out", xa.out, "Write one JSON line per grid cell");

  SynthArgs sa;
  auto* synth_cmd = app.add_subcommand("synth", "Write a synthetic target-dependent corpus and word vectors");
  synth_cmd->add_option("--out", sa.out, "Output directory")->capture_default_str();
  synth_cmd->add_option("--bases", sa.bases, "Base sentences (two instances each)")->capture_default_str();
  synth_cmd->add_option("--seed", sa.seed)->capture_default_str();
  synth_cmd->add_option("--dim", sa.dim, "Word vector size")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kUsage;
  }

  try {
    if (*train_cmd) {
      require_file(ta.train_path, "--train");
      if (!ta.test_path.empty()) require_file(ta.test_path, "--test");
      if (!ta.embeddings.empty()) require_file(ta.embeddings, "--embeddings");
      return ta.precision == 32 ? run_train<float>(ta) : run_train<double>(ta);
    }
    if (*eval_cmd) {
      require_file(ea.checkpoint, "--checkpoint");
      require_file(ea.corpus, "--corpus");
      return checkpoint_width(ea.checkpoint) == 4 ? run_eval<float>(ea) : run_eval<double>(ea);
    }
    if (*predict_cmd) {
      require_file(pa.checkpoint, "--checkpoint");
      if (pa.target.empty()) throw UsageError("--target is required");
      return checkpoint_width(pa.checkpoint) == 4 ? run_predict<float>(pa) : run_predict<double>(pa);
    }
    if (*grad_cmd) return run_gradcheck(ga);
    if (*exp_cmd) {
      require_file(xa.spec, "--spec");
      return run_experiment(xa);
    }
    if (*synth_cmd) return run_synth(sa);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kUsage;
  } catch (const FormatError& e) {
    std::cerr << "format error: " << e.what() << "\n";
    return kFormat;
  } catch (const LoadError& e) {
    std::cerr << "load error: " << e.what() << "\n";
    return kFormat;
  } catch (const VariantMismatch& e) {
    std::cerr << "load error: " << e.what() << "\n";
    return kFormat;
  } catch (const NumericError& e) {
    std::cerr << "numeric failure: " << e.what() << "\n";
    return kNumeric;
  } catch (const ValidationError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kIoFailure;
  }
  return kOk;
}
