#pragma once

#include <cstddef>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "tdlstm/cells.hpp"
#include "tdlstm/data.hpp"
#include "tdlstm/embeddings.hpp"
#include "tdlstm/random.hpp"
#include "tdlstm/tape.hpp"
#include "tdlstm/tensor.hpp"

namespace tdlstm {

enum class Variant { lstm, td_lstm, tc_lstm, att_td_lstm };

/// How the two directional branch outputs are merged into one feature.
enum class Combine { concat, sum, mean };

inline std::string_view to_string(Variant v) {
  switch (v) {
    case Variant::lstm: return "lstm";
    case Variant::td_lstm: return "td-lstm";
    case Variant::tc_lstm: return "tc-lstm";
    case Variant::att_td_lstm: return "att-td-lstm";
  }
  return "?";
}

inline Variant parse_variant(std::string_view s) {
  for (Variant v : {Variant::lstm, Variant::td_lstm, Variant::tc_lstm, Variant::att_td_lstm}) {
    if (to_string(v) == s) return v;
  }
  throw ValidationError("unknown model variant '" + std::string(s) +
                        "' (expected lstm, td-lstm, tc-lstm or att-td-lstm)");
}

inline std::string_view to_string(Combine c) {
  switch (c) {
    case Combine::concat: return "concat";
    case Combine::sum: return "sum";
    case Combine::mean: return "mean";
  }
  return "?";
}

inline Combine parse_combine(std::string_view s) {
  for (Combine c : {Combine::concat, Combine::sum, Combine::mean}) {
    if (to_string(c) == s) return c;
  }
  throw ValidationError("unknown combine mode '" + std::string(s) + "' (expected concat, sum or mean)");
}

inline constexpr bool is_two_branch(Variant v) noexcept { return v != Variant::lstm; }

/// Forward entry point called with parameters of another variant.
class VariantMismatch : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

template <typename T = double>
struct SoftmaxLayerParams {
  Tensor<T> W;  // C x feature
  Tensor<T> b;  // C x 1
};

/// Feedforward scorer: score(h) = v . tanh(M h + b).
template <typename T = double>
struct AttentionParams {
  Tensor<T> M;  // a x d
  Tensor<T> b;  // a x 1
  Tensor<T> v;  // 1 x a
};

struct ModelShape {
  Variant variant = Variant::td_lstm;
  std::size_t embedding_dim = 100;
  std::size_t hidden = 100;
  std::size_t classes = kNumClasses;
  Combine combine = Combine::concat;

  /// Width of each cell input: word vector, or [word; v_target] for TC-LSTM.
  std::size_t cell_input() const noexcept {
    return variant == Variant::tc_lstm ? 2 * embedding_dim : embedding_dim;
  }
  std::size_t feature_size() const noexcept {
    return is_two_branch(variant) && combine == Combine::concat ? 2 * hidden : hidden;
  }
  std::size_t attention_size() const noexcept { return hidden; }
};

/// Full trainable parameter set of one classifier (word vectors live in
/// the EmbeddingTable and are handled separately).
template <typename T = double>
struct ModelParams {
  ModelShape shape;
  LstmCellParams<T> lstm_l;  // the single cell for the plain LSTM variant
  LstmCellParams<T> lstm_r;
  SoftmaxLayerParams<T> softmax;
  AttentionParams<T> att_l;
  AttentionParams<T> att_r;

  Variant variant() const noexcept { return shape.variant; }

  /// Visits every trainable tensor of this variant with its qualified name,
  /// in a fixed order.
  template <typename F>
  void for_each(F&& f) {
    visit(*this, f);
  }
  template <typename F>
  void for_each(F&& f) const {
    visit(*this, f);
  }

  std::vector<std::string> names() const {
    std::vector<std::string> out;
    for_each([&](const std::string& n, const Tensor<T>&) { out.push_back(n); });
    return out;
  }

  std::size_t parameter_count() const {
    std::size_t n = 0;
    for_each([&](const std::string&, const Tensor<T>& t) { n += t.size(); });
    return n;
  }

  static std::string lstm_prefix(Variant v, bool right) {
    if (!is_two_branch(v)) return "lstm";
    return right ? "lstm_r" : "lstm_l";
  }

 private:
  template <typename Self, typename F>
  static void visit(Self& self, F& f) {
    const Variant v = self.shape.variant;
    const auto cell = [&](auto& c, const std::string& prefix) {
      c.for_each([&](const char* n, auto& t) { f(prefix + "." + n, t); });
    };
    cell(self.lstm_l, lstm_prefix(v, false));
    if (is_two_branch(v)) cell(self.lstm_r, lstm_prefix(v, true));
    if (v == Variant::att_td_lstm) {
      f(std::string("att_l.M"), self.att_l.M);
      f(std::string("att_l.b"), self.att_l.b);
      f(std::string("att_l.v"), self.att_l.v);
      f(std::string("att_r.M"), self.att_r.M);
      f(std::string("att_r.b"), self.att_r.b);
      f(std::string("att_r.v"), self.att_r.v);
    }
    f(std::string("softmax.W"), self.softmax.W);
    f(std::string("softmax.b"), self.softmax.b);
  }
};

/// Zero-filled parameters of the right shapes.
template <typename T = double>
ModelParams<T> zero_params(const ModelShape& shape) {
  if (shape.embedding_dim == 0 || shape.hidden == 0) throw ValidationError("model dimensions must be >= 1");
  if (shape.classes < 2) throw ValidationError("class count must be >= 2");
  ModelParams<T> p;
  p.shape = shape;
  const std::size_t d = shape.hidden;
  const std::size_t k = shape.cell_input();
  p.lstm_l = LstmCellParams<T>(d, k);
  if (is_two_branch(shape.variant)) p.lstm_r = LstmCellParams<T>(d, k);
  if (shape.variant == Variant::att_td_lstm) {
    const std::size_t a = shape.attention_size();
    p.att_l = {Tensor<T>(a, d), Tensor<T>(a, 1), Tensor<T>(1, a)};
    p.att_r = {Tensor<T>(a, d), Tensor<T>(a, 1), Tensor<T>(1, a)};
  }
  p.softmax = {Tensor<T>(shape.classes, shape.feature_size()), Tensor<T>(shape.classes, 1)};
  return p;
}

inline constexpr double kInitRange = 0.003;

/// Every entry i.i.d. U(-0.003, 0.003), drawn in for_each order.
template <typename T = double>
ModelParams<T> init_params(const ModelShape& shape, Rng& rng, double range = kInitRange) {
  ModelParams<T> p = zero_params<T>(shape);
  p.for_each([&](const std::string&, Tensor<T>& t) { rng.fill_uniform(t, -range, range); });
  return p;
}

template <typename T = double>
ModelParams<T> init_params(const ModelShape& shape, std::uint64_t seed) {
  Rng rng(seed);
  return init_params<T>(shape, rng);
}

/// Word indices of the three parts of a split instance.
struct EncodedInstance {
  std::vector<std::size_t> preceding;
  std::vector<std::size_t> target;
  std::vector<std::size_t> following;
  std::size_t gold = 0;

  std::vector<std::size_t> all_tokens() const {
    std::vector<std::size_t> out = preceding;
    out.insert(out.end(), target.begin(), target.end());
    out.insert(out.end(), following.begin(), following.end());
    return out;
  }
};

inline EncodedInstance encode(const SplitInstance& s, const Vocabulary& vocab) {
  EncodedInstance e;
  for (const auto& t : s.preceding) e.preceding.push_back(vocab.index_of(t));
  for (const auto& t : s.target) e.target.push_back(vocab.index_of(t));
  for (const auto& t : s.following) e.following.push_back(vocab.index_of(t));
  e.gold = class_index(s.label);
  return e;
}

inline EncodedInstance encode(const Instance& inst, const Vocabulary& vocab) {
  return encode(split(inst), vocab);
}

template <typename T = double>
struct Prediction {
  Tensor<T> probabilities;
  std::size_t predicted_class = 0;
};

template <typename T>
Prediction<T> make_prediction(const Tensor<T>& logits) {
  Prediction<T> p{softmax(logits), 0};
  p.predicted_class = argmax(p.probabilities);
  return p;
}

template <typename T = double>
struct AttentionResult {
  Tensor<T> weights;  // n x 1, softmax of the scores
  Tensor<T> output;   // d x 1
};

/// Scores each hidden state, normalises over positions and returns the
/// weighted average.
template <typename T>
AttentionResult<T> attention_pool(const AttentionParams<T>& p, const std::vector<Tensor<T>>& hs) {
  if (hs.empty()) throw ValidationError("attention over an empty sequence");
  const std::size_t d = hs.front().rows();
  Tensor<T> scores(hs.size(), 1);
  for (std::size_t t = 0; t < hs.size(); ++t) {
    const Tensor<T> u = tanh(add(matmul(p.M, hs[t]), p.b));
    scores[t] = matmul(p.v, u)[0];
  }
  AttentionResult<T> r{softmax(scores), Tensor<T>(d, 1)};
  for (std::size_t t = 0; t < hs.size(); ++t)
    for (std::size_t i = 0; i < d; ++i) r.output[i] += r.weights[t] * hs[t][i];
  return r;
}

namespace ops {

template <typename T>
struct AttentionVars {
  Var M, b, v;
};

/// Recorded attention pooling (one composite adjoint for the whole branch).
template <typename T>
Var attention_pool(Tape<T>& tape, const AttentionVars<T>& att, const std::vector<Var>& hs) {
  if (hs.empty()) throw ValidationError("attention over an empty sequence");
  const Tensor<T>& M = tape.value(att.M);
  const Tensor<T>& bias = tape.value(att.b);
  const Tensor<T>& v = tape.value(att.v);
  const std::size_t n = hs.size();
  const std::size_t d = tape.value(hs.front()).rows();
  const std::size_t a = M.rows();
  if (M.cols() != d || bias.rows() != a || v.cols() != a || v.rows() != 1) {
    throw DimensionError("attention: M " + M.shape() + ", b " + bias.shape() + ", v " + v.shape() +
                         " for hidden size " + std::to_string(d));
  }
  auto u = std::make_shared<std::vector<Tensor<T>>>();
  Tensor<T> scores(n, 1);
  for (std::size_t t = 0; t < n; ++t) {
    const Tensor<T>& h = tape.value(hs[t]);
    Tensor<T> ut(a, 1);
    for (std::size_t r = 0; r < a; ++r) {
      T acc = bias[r];
      for (std::size_t j = 0; j < d; ++j) acc += M(r, j) * h[j];
      ut[r] = std::tanh(acc);
    }
    T s = 0;
    for (std::size_t r = 0; r < a; ++r) s += v[r] * ut[r];
    scores[t] = s;
    u->push_back(std::move(ut));
  }
  auto alpha = std::make_shared<Tensor<T>>(softmax(scores));
  Tensor<T> out(d, 1);
  for (std::size_t t = 0; t < n; ++t) {
    const Tensor<T>& h = tape.value(hs[t]);
    for (std::size_t i = 0; i < d; ++i) out[i] += (*alpha)[t] * h[i];
  }
  Var res = tape.record(std::move(out));
  tape.on_backward([&tape, att, hs, res, u, alpha, n, d, a] {
    const Tensor<T>& G = tape.grad(res);
    const Tensor<T>& M = tape.value(att.M);
    const Tensor<T>& v = tape.value(att.v);
    // d alpha_t = G . h_t ; d score = alpha * (d alpha - sum alpha d alpha)
    Tensor<T> dalpha(n, 1);
    T mix = 0;
    for (std::size_t t = 0; t < n; ++t) {
      const Tensor<T>& h = tape.value(hs[t]);
      T s = 0;
      for (std::size_t i = 0; i < d; ++i) s += G[i] * h[i];
      dalpha[t] = s;
      mix += (*alpha)[t] * s;
    }
    Tensor<T>& gM = tape.grad(att.M);
    Tensor<T>& gb = tape.grad(att.b);
    Tensor<T>& gv = tape.grad(att.v);
    for (std::size_t t = 0; t < n; ++t) {
      const Tensor<T>& h = tape.value(hs[t]);
      Tensor<T>& gh = tape.grad(hs[t]);
      const T at = (*alpha)[t];
      for (std::size_t i = 0; i < d; ++i) gh[i] += at * G[i];
      const T ds = at * (dalpha[t] - mix);
      const Tensor<T>& ut = (*u)[t];
      for (std::size_t r = 0; r < a; ++r) {
        gv[r] += ds * ut[r];
        const T dpre = ds * v[r] * (T(1) - ut[r] * ut[r]);
        gb[r] += dpre;
        for (std::size_t j = 0; j < d; ++j) {
          gM(r, j) += dpre * h[j];
          gh[j] += M(r, j) * dpre;
        }
      }
    }
  });
  return res;
}

}  // namespace ops

/// Records the classifier's forward pass and returns the C x 1 logits.
/// Word vectors enter as trainable leaves when table.trainable is set.
template <typename T>
Var build_logits(Tape<T>& tape, const ModelParams<T>& params, const EmbeddingTable<T>& table,
                 const EncodedInstance& x) {
  const ModelShape& shape = params.shape;
  if (table.dim() != shape.embedding_dim) {
    throw DimensionError("embedding dimension " + std::to_string(table.dim()) + " does not match model (" +
                         std::to_string(shape.embedding_dim) + ")");
  }
  const auto word = [&](std::size_t id) {
    return table.trainable ? tape.embedding_row(id, table.row(id)) : tape.constant(table.row(id));
  };
  const auto words = [&](const std::vector<std::size_t>& ids) {
    std::vector<Var> out;
    out.reserve(ids.size());
    for (std::size_t id : ids) out.push_back(word(id));
    return out;
  };
  const auto softmax_layer = [&](Var feature) {
    Var W = tape.parameter("softmax.W", params.softmax.W);
    Var b = tape.parameter("softmax.b", params.softmax.b);
    return ops::affine(tape, W, b, feature);
  };

  if (shape.variant == Variant::lstm) {
    const auto all = x.all_tokens();
    if (all.empty()) throw ValidationError("LSTM forward on an empty token sequence");
    const auto cell = bind(tape, params.lstm_l, "lstm");
    const auto states = ops::run_sequence(tape, cell, words(all), Direction::forward);
    return softmax_layer(states.back().h);
  }

  if (x.target.empty()) throw ValidationError("target-dependent forward with an empty target");
  std::vector<Var> tgt = words(x.target);
  std::vector<Var> left = words(x.preceding);
  left.insert(left.end(), tgt.begin(), tgt.end());
  // Right branch runs over target + following, consumed back to front so the
  // target is the last unit it sees.
  std::vector<Var> right = tgt;
  const std::vector<Var> fol = words(x.following);
  right.insert(right.end(), fol.begin(), fol.end());

  if (shape.variant == Variant::tc_lstm) {
    const Var v_target = ops::mean(tape, words(x.target));
    for (auto& w : left) w = ops::concat(tape, w, v_target);
    for (auto& w : right) w = ops::concat(tape, w, v_target);
  }

  const auto cell_l = bind(tape, params.lstm_l, "lstm_l");
  const auto cell_r = bind(tape, params.lstm_r, "lstm_r");
  const auto states_l = ops::run_sequence(tape, cell_l, left, Direction::forward);
  const auto states_r = ops::run_sequence(tape, cell_r, right, Direction::reversed);

  Var feat_l, feat_r;
  if (shape.variant == Variant::att_td_lstm) {
    const auto pool = [&](const std::vector<StateVars<T>>& states, const AttentionParams<T>& p,
                          const std::string& prefix) {
      ops::AttentionVars<T> av{tape.parameter(prefix + ".M", p.M), tape.parameter(prefix + ".b", p.b),
                               tape.parameter(prefix + ".v", p.v)};
      std::vector<Var> hs;
      for (const auto& s : states) hs.push_back(s.h);
      return ops::attention_pool(tape, av, hs);
    };
    feat_l = pool(states_l, params.att_l, "att_l");
    feat_r = pool(states_r, params.att_r, "att_r");
  } else {
    feat_l = states_l.back().h;
    feat_r = states_r.back().h;
  }

  Var feature;
  switch (shape.combine) {
    case Combine::concat: feature = ops::concat(tape, feat_l, feat_r); break;
    case Combine::sum: feature = ops::add(tape, feat_l, feat_r); break;
    case Combine::mean: feature = ops::scale(tape, ops::add(tape, feat_l, feat_r), T(0.5)); break;
  }
  return softmax_layer(feature);
}

template <typename T>
Prediction<T> predict(const ModelParams<T>& params, const EmbeddingTable<T>& table, const EncodedInstance& x) {
  Tape<T> tape;
  return make_prediction(tape.value(build_logits(tape, params, table, x)));
}

namespace detail {
template <typename T>
void require_variant(const ModelParams<T>& p, Variant expected) {
  if (p.variant() != expected) {
    throw VariantMismatch("parameters are for variant '" + std::string(to_string(p.variant())) +
                          "' but '" + std::string(to_string(expected)) + "' forward was requested");
  }
}
}  // namespace detail

/// Plain LSTM over the whole sentence; the target span is ignored.
template <typename T>
Prediction<T> forward_lstm(const ModelParams<T>& params, const EmbeddingTable<T>& table, const Vocabulary& vocab,
                           const Instance& instance) {
  detail::require_variant(params, Variant::lstm);
  if (instance.tokens.empty()) throw ValidationError("forward_lstm: empty token list");
  return predict(params, table, encode(instance, vocab));
}

template <typename T>
Prediction<T> forward_td(const ModelParams<T>& params, const EmbeddingTable<T>& table, const Vocabulary& vocab,
                         const SplitInstance& s) {
  detail::require_variant(params, Variant::td_lstm);
  return predict(params, table, encode(s, vocab));
}

template <typename T>
Prediction<T> forward_tc(const ModelParams<T>& params, const EmbeddingTable<T>& table, const Vocabulary& vocab,
                         const SplitInstance& s) {
  detail::require_variant(params, Variant::tc_lstm);
  if (s.target.empty()) throw ValidationError("forward_tc: empty target");
  return predict(params, table, encode(s, vocab));
}

template <typename T>
Prediction<T> forward_att(const ModelParams<T>& params, const EmbeddingTable<T>& table, const Vocabulary& vocab,
                          const SplitInstance& s) {
  detail::require_variant(params, Variant::att_td_lstm);
  return predict(params, table, encode(s, vocab));
}

}  // namespace tdlstm
