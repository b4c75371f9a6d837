#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <functional>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <type_traits>
#include <vector>

#include "tdlstm/checkpoint.hpp"
#include "tdlstm/evaluation.hpp"
#include "tdlstm/gradients.hpp"
#include "tdlstm/models.hpp"
#include "tdlstm/random.hpp"
#include "tdlstm/tape.hpp"

namespace tdlstm {

enum class ClipMode { norm, value, off };

inline std::string_view to_string(ClipMode m) {
  switch (m) {
    case ClipMode::norm: return "norm";
    case ClipMode::value: return "value";
    case ClipMode::off: return "off";
  }
  return "?";
}

inline ClipMode parse_clip_mode(std::string_view s) {
  for (ClipMode m : {ClipMode::norm, ClipMode::value, ClipMode::off}) {
    if (to_string(m) == s) return m;
  }
  throw ValidationError("unknown clip mode '" + std::string(s) + "' (expected norm, value or off)");
}

struct TrainConfig {
  Variant variant = Variant::td_lstm;
  Combine combine = Combine::concat;
  std::size_t hidden = 0;  // 0: same as the embedding dimension
  double learning_rate = 0.01;
  std::size_t epochs = 10;
  std::uint64_t seed = 1;
  double clip_threshold = 200.0;  // applies to the softmax layer only
  ClipMode clip_mode = ClipMode::norm;
  bool embeddings_trainable = true;
  bool eval_train = true;  // score the training set after every epoch

  void validate() const {
    if (!(learning_rate > 0) || !std::isfinite(learning_rate)) throw ValidationError("learning rate must be > 0");
    if (epochs < 1) throw ValidationError("epochs must be >= 1");
    if (!(clip_threshold > 0)) throw ValidationError("clip threshold must be > 0");
  }
};

struct EpochRecord {
  std::size_t epoch = 0;  // 1-based
  double mean_loss = 0;
  std::optional<double> train_accuracy;
  std::optional<double> test_accuracy;
  std::optional<double> test_macro_f1;
  double seconds = 0;  // wall clock for the SGD pass only
};

struct TrainLog {
  std::vector<EpochRecord> epochs;
};

/// -log p[gold] from a prediction.
template <typename T>
T cross_entropy(const Prediction<T>& p, std::size_t gold) {
  if (gold >= p.probabilities.size()) {
    throw ValidationError("gold class " + std::to_string(gold) + " out of range");
  }
  return -std::log(p.probabilities[gold]);
}

/// Fused log-softmax form, stable for large logits.
template <typename T>
T cross_entropy_from_logits(const Tensor<T>& logits, std::size_t gold) {
  if (gold >= logits.size()) throw ValidationError("gold class " + std::to_string(gold) + " out of range");
  return log_sum_exp(logits) - logits[gold];
}

template <typename T>
struct LossAndGradients {
  T loss = 0;
  Prediction<T> prediction;
  Gradients<T> gradients;
};

/// Forward, cross-entropy and exact reverse-mode gradients for one example.
template <typename T>
LossAndGradients<T> loss_and_gradients(const ModelParams<T>& params, const EmbeddingTable<T>& table,
                                       const EncodedInstance& x, bool inject_fault = false) {
  Tape<T> tape;
  tape.set_fault_injection(inject_fault);
  const Var logits = build_logits(tape, params, table, x);
  const Var loss = ops::softmax_cross_entropy(tape, logits, x.gold);
  LossAndGradients<T> out;
  out.loss = tape.value(loss)[0];
  out.prediction = make_prediction(tape.value(logits));
  tape.backward(loss);
  out.gradients = tape.gradients();
  return out;
}

template <typename T>
T loss_only(const ModelParams<T>& params, const EmbeddingTable<T>& table, const EncodedInstance& x) {
  Tape<T> tape;
  return cross_entropy_from_logits(tape.value(build_logits(tape, params, table, x)), x.gold);
}

inline bool is_softmax_param(std::string_view name) { return name.rfind("softmax.", 0) == 0; }

/// Clips the softmax-layer gradients in place; returns the factor applied
/// (1 when untouched). Value clipping returns 1 as well.
template <typename T>
double clip_softmax_gradients(Gradients<T>& g, double threshold, ClipMode mode) {
  if (mode == ClipMode::off) return 1.0;
  if (mode == ClipMode::value) {
    for (auto& [name, t] : g.dense) {
      if (!is_softmax_param(name)) continue;
      for (auto& v : t.data()) v = std::clamp(v, static_cast<T>(-threshold), static_cast<T>(threshold));
    }
    return 1.0;
  }
  double sq = 0;
  for (const auto& [name, t] : g.dense) {
    if (is_softmax_param(name)) sq += static_cast<double>(l2_norm_squared(t));
  }
  const double norm = std::sqrt(sq);
  if (norm <= threshold) return 1.0;
  const double factor = threshold / norm;
  for (auto& [name, t] : g.dense) {
    if (!is_softmax_param(name)) continue;
    for (auto& v : t.data()) v = static_cast<T>(v * factor);
  }
  return factor;
}

/// theta <- theta - lr * g after softmax-layer clipping. Embedding rows are
/// updated only when the table is trainable.
template <typename T>
void sgd_step(ModelParams<T>& params, EmbeddingTable<T>& table, Gradients<T> grads, const TrainConfig& config) {
  std::set<std::string> expected;
  params.for_each([&](const std::string& n, const Tensor<T>&) { expected.insert(n); });
  std::set<std::string> got;
  for (const auto& [n, t] : grads.dense) got.insert(n);
  if (expected != got) throw ConsistencyError("gradient keys do not match the model's trainable parameters");
  if (!table.trainable && !grads.embedding_rows.empty()) {
    throw ConsistencyError("gradients for a frozen embedding table");
  }

  clip_softmax_gradients(grads, config.clip_threshold, config.clip_mode);
  const T lr = static_cast<T>(config.learning_rate);
  params.for_each([&](const std::string& n, Tensor<T>& t) {
    const Tensor<T>& g = grads.dense.at(n);
    if (!g.same_shape(t)) throw ConsistencyError("gradient for '" + n + "' has shape " + g.shape());
    for (std::size_t i = 0; i < t.size(); ++i) t[i] -= lr * g[i];
  });
  for (const auto& [row, g] : grads.embedding_rows) {
    auto dst = table.matrix.row(row);
    if (g.size() != dst.size()) throw ConsistencyError("embedding gradient row has wrong length");
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] -= lr * g[i];
  }
}

template <typename T>
std::vector<std::size_t> predict_classes(const Model<T>& model, const std::vector<EncodedInstance>& data) {
  std::vector<std::size_t> out;
  out.reserve(data.size());
  for (const auto& x : data) out.push_back(predict(model.params, model.embeddings, x).predicted_class);
  return out;
}

template <typename T>
EvalReport evaluate_model(const Model<T>& model, const std::vector<EncodedInstance>& data) {
  std::vector<std::size_t> golds;
  golds.reserve(data.size());
  for (const auto& x : data) golds.push_back(x.gold);
  return evaluate(predict_classes(model, data), golds, model.params.shape.classes);
}

inline std::vector<EncodedInstance> encode_all(const std::vector<Instance>& data, const Vocabulary& vocab) {
  std::vector<EncodedInstance> out;
  out.reserve(data.size());
  for (const auto& inst : data) out.push_back(encode(inst, vocab));
  return out;
}

/// Closed vocabulary over the given corpora, in first-seen order.
inline Vocabulary build_vocabulary(std::initializer_list<const std::vector<Instance>*> corpora, bool lowercase_tokens = true) {
  Vocabulary v(lowercase_tokens);
  for (const auto* corpus : corpora)
    for (const auto& inst : *corpus)
      for (const auto& tok : inst.tokens) v.add(tok);
  return v;
}

/// Fresh model around an existing vocabulary and table; parameters from rng.
template <typename T>
Model<T> initialize_model(const TrainConfig& config, Vocabulary vocab, EmbeddingTable<T> table, Rng& rng) {
  ModelShape shape;
  shape.variant = config.variant;
  shape.combine = config.combine;
  shape.embedding_dim = table.dim();
  shape.hidden = config.hidden == 0 ? table.dim() : config.hidden;
  shape.classes = kNumClasses;
  table.trainable = config.embeddings_trainable;
  return Model<T>{init_params<T>(shape, rng), std::move(vocab), std::move(table)};
}

template <typename T>
struct TrainResult {
  Model<T> model;
  TrainLog log;
};

inline constexpr std::uint64_t kShuffleSalt = 0x53485546464c4531ULL;

/// Called after each epoch; returning false stops training early.
template <typename T>
using EpochCallback = std::function<bool(const EpochRecord&, const Model<T>&)>;

/// Pure SGD (batch size 1): per epoch, shuffle with the run seed, then
/// forward / loss / backward / update for every training example.
template <typename T>
TrainResult<T> train(Model<T> model, const std::vector<EncodedInstance>& train_set,
                     const std::vector<EncodedInstance>& test_set, const TrainConfig& config,
                     const std::type_identity_t<EpochCallback<T>>& on_epoch = {}) {
  config.validate();
  if (train_set.empty()) throw ValidationError("train: empty training set");
  model.embeddings.trainable = config.embeddings_trainable;

  Rng order_rng(config.seed ^ kShuffleSalt);
  std::vector<std::size_t> order(train_set.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  TrainLog log;
  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    order_rng.shuffle(order);
    const auto start = std::chrono::steady_clock::now();
    double total = 0;
    for (std::size_t idx : order) {
      auto step = loss_and_gradients(model.params, model.embeddings, train_set[idx]);
      if (!std::isfinite(static_cast<double>(step.loss))) {
        throw NumericError("non-finite loss at epoch " + std::to_string(epoch) + ", training instance " +
                           std::to_string(idx));
      }
      total += static_cast<double>(step.loss);
      sgd_step(model.params, model.embeddings, std::move(step.gradients), config);
    }
    EpochRecord rec;
    rec.epoch = epoch;
    rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    rec.mean_loss = total / static_cast<double>(train_set.size());
    if (config.eval_train) rec.train_accuracy = evaluate_model(model, train_set).accuracy;
    if (!test_set.empty()) {
      const EvalReport r = evaluate_model(model, test_set);
      rec.test_accuracy = r.accuracy;
      rec.test_macro_f1 = r.macro_f1;
    }
    log.epochs.push_back(rec);
    if (on_epoch && !on_epoch(rec, model)) break;
  }
  return {std::move(model), std::move(log)};
}

}  // namespace tdlstm
