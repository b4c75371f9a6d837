#pragma once

#include <cmath>
#include <cstddef>
#include <deque>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "tdlstm/errors.hpp"
#include "tdlstm/gradients.hpp"
#include "tdlstm/tensor.hpp"

namespace tdlstm {

/// Handle to a value recorded on a Tape.
struct Var {
  std::size_t id = static_cast<std::size_t>(-1);
};

/// Reverse-mode recording context. Operations are composite layers (affine
/// map, LSTM step, attention pooling, softmax cross-entropy, ...): each
/// pushes its output node(s) and one adjoint closure. backward() replays the
/// closures in reverse order, so every node's gradient is complete before the
/// closure that produced it runs.
///
/// One tape per example; not thread-safe.
template <typename T = double>
class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  /// Input that is not differentiated (e.g. a fixed word vector).
  Var constant(Tensor<T> value) { return push(Node{std::move(value), nullptr, {}, {}, {}}); }

  /// Trainable parameter; the tape references `value`, which must outlive it.
  Var parameter(const std::string& name, const Tensor<T>& value) {
    Var v = push(Node{{}, &value, name, {}, {}});
    params_.push_back(v);
    return v;
  }

  /// Row of a trainable embedding table, copied in as a d x 1 leaf.
  Var embedding_row(std::size_t row, Tensor<T> value) {
    Var v = push(Node{std::move(value), nullptr, {}, row, {}});
    embedding_leaves_.push_back(v);
    return v;
  }

  /// Intermediate result; pair with on_backward().
  Var record(Tensor<T> value) { return push(Node{std::move(value), nullptr, {}, {}, {}}); }

  void on_backward(std::function<void()> adjoint) { adjoints_.push_back(std::move(adjoint)); }

  const Tensor<T>& value(Var v) const {
    const Node& n = node(v);
    return n.external ? *n.external : n.value;
  }

  /// Accumulated adjoint of v, allocated as zeros on first access.
  Tensor<T>& grad(Var v) {
    Node& n = node(v);
    if (!n.grad) n.grad = Tensor<T>::zeros_like(value(v));
    return *n.grad;
  }
  bool has_grad(Var v) const { return node(v).grad.has_value(); }

  std::size_t size() const noexcept { return nodes_.size(); }
  std::size_t recorded_ops() const noexcept { return adjoints_.size(); }

  /// Seeds d loss / d loss and propagates to every node.
  void backward(Var loss, T seed = T(1)) {
    if (adjoints_.empty()) throw StateError("backward called before any forward operation was recorded");
    if (backward_done_) throw StateError("backward already ran on this tape");
    Tensor<T>& g = grad(loss);
    if (g.size() != 1) throw DimensionError("backward: loss must be 1x1, got " + g.shape());
    g[0] += seed;
    for (auto it = adjoints_.rbegin(); it != adjoints_.rend(); ++it) (*it)();
    backward_done_ = true;
  }

  /// Gradients of every registered parameter (zeros when unused) and of
  /// every touched embedding row (summed over repeated occurrences).
  Gradients<T> gradients() {
    if (!backward_done_) throw StateError("gradients requested before backward");
    Gradients<T> out;
    for (Var p : params_) {
      Node& n = node(p);
      auto [it, inserted] = out.dense.try_emplace(n.name, grad(p));
      if (!inserted) {
        for (std::size_t i = 0; i < it->second.size(); ++i) it->second[i] += grad(p)[i];
      }
    }
    for (Var e : embedding_leaves_) {
      const std::size_t row = *node(e).embedding_row;
      auto [it, inserted] = out.embedding_rows.try_emplace(row, grad(e));
      if (!inserted) {
        for (std::size_t i = 0; i < it->second.size(); ++i) it->second[i] += grad(e)[i];
      }
    }
    return out;
  }

  /// Test-only negative control: LSTM-step adjoints consult this and
  /// deliberately corrupt the forget-gate path when it is set.
  void set_fault_injection(bool on) noexcept { fault_injection_ = on; }
  bool fault_injection() const noexcept { return fault_injection_; }

 private:
  struct Node {
    Tensor<T> value;
    const Tensor<T>* external;
    std::string name;
    std::optional<std::size_t> embedding_row;
    std::optional<Tensor<T>> grad;
  };

  Var push(Node n) {
    if (backward_done_) throw StateError("cannot record on a tape after backward");
    nodes_.push_back(std::move(n));
    return Var{nodes_.size() - 1};
  }
  Node& node(Var v) {
    if (v.id >= nodes_.size()) throw StateError("invalid tape variable");
    return nodes_[v.id];
  }
  const Node& node(Var v) const {
    if (v.id >= nodes_.size()) throw StateError("invalid tape variable");
    return nodes_[v.id];
  }

  std::deque<Node> nodes_;  // deque: references stay valid while recording
  std::vector<std::function<void()>> adjoints_;
  std::vector<Var> params_;
  std::vector<Var> embedding_leaves_;
  bool backward_done_ = false;
  bool fault_injection_ = false;
};

namespace ops {

template <typename T>
Var matmul(Tape<T>& tape, Var a, Var b) {
  Var out = tape.record(tdlstm::matmul(tape.value(a), tape.value(b)));
  tape.on_backward([&tape, a, b, out] {
    const Tensor<T>& A = tape.value(a);
    const Tensor<T>& B = tape.value(b);
    const Tensor<T>& G = tape.grad(out);
    Tensor<T>& gA = tape.grad(a);
    Tensor<T>& gB = tape.grad(b);
    // gA += G B^T ; gB += A^T G
    for (std::size_t i = 0; i < A.rows(); ++i)
      for (std::size_t j = 0; j < B.cols(); ++j) {
        const T g = G(i, j);
        for (std::size_t k = 0; k < A.cols(); ++k) {
          gA(i, k) += g * B(k, j);
          gB(k, j) += A(i, k) * g;
        }
      }
  });
  return out;
}

template <typename T>
Var add(Tape<T>& tape, Var a, Var b) {
  Var out = tape.record(tdlstm::add(tape.value(a), tape.value(b)));
  tape.on_backward([&tape, a, b, out] {
    const Tensor<T>& G = tape.grad(out);
    Tensor<T>& gA = tape.grad(a);
    for (std::size_t i = 0; i < G.size(); ++i) gA[i] += G[i];
    Tensor<T>& gB = tape.grad(b);
    for (std::size_t i = 0; i < G.size(); ++i) gB[i] += G[i];
  });
  return out;
}

template <typename T>
Var mul(Tape<T>& tape, Var a, Var b) {
  Var out = tape.record(tdlstm::mul(tape.value(a), tape.value(b)));
  tape.on_backward([&tape, a, b, out] {
    const Tensor<T>& G = tape.grad(out);
    const Tensor<T>& A = tape.value(a);
    const Tensor<T>& B = tape.value(b);
    Tensor<T>& gA = tape.grad(a);
    for (std::size_t i = 0; i < G.size(); ++i) gA[i] += G[i] * B[i];
    Tensor<T>& gB = tape.grad(b);
    for (std::size_t i = 0; i < G.size(); ++i) gB[i] += G[i] * A[i];
  });
  return out;
}

template <typename T>
Var tanh(Tape<T>& tape, Var a) {
  Var out = tape.record(tdlstm::tanh(tape.value(a)));
  tape.on_backward([&tape, a, out] {
    const Tensor<T>& G = tape.grad(out);
    const Tensor<T>& Y = tape.value(out);
    Tensor<T>& gA = tape.grad(a);
    for (std::size_t i = 0; i < G.size(); ++i) gA[i] += G[i] * (T(1) - Y[i] * Y[i]);
  });
  return out;
}

template <typename T>
Var sigmoid(Tape<T>& tape, Var a) {
  Var out = tape.record(tdlstm::sigmoid(tape.value(a)));
  tape.on_backward([&tape, a, out] {
    const Tensor<T>& G = tape.grad(out);
    const Tensor<T>& Y = tape.value(out);
    Tensor<T>& gA = tape.grad(a);
    for (std::size_t i = 0; i < G.size(); ++i) gA[i] += G[i] * Y[i] * (T(1) - Y[i]);
  });
  return out;
}

template <typename T>
Var scale(Tape<T>& tape, Var a, T s) {
  Var out = tape.record(tdlstm::scale(tape.value(a), s));
  tape.on_backward([&tape, a, out, s] {
    const Tensor<T>& G = tape.grad(out);
    Tensor<T>& gA = tape.grad(a);
    for (std::size_t i = 0; i < G.size(); ++i) gA[i] += G[i] * s;
  });
  return out;
}

/// [a; b] for column vectors.
template <typename T>
Var concat(Tape<T>& tape, Var a, Var b) {
  Var out = tape.record(tdlstm::concat_rows(tape.value(a), tape.value(b)));
  tape.on_backward([&tape, a, b, out] {
    const Tensor<T>& G = tape.grad(out);
    Tensor<T>& gA = tape.grad(a);
    Tensor<T>& gB = tape.grad(b);
    const std::size_t na = gA.size();
    for (std::size_t i = 0; i < na; ++i) gA[i] += G[i];
    for (std::size_t i = 0; i < gB.size(); ++i) gB[i] += G[na + i];
  });
  return out;
}

/// Sum of all entries, as a 1x1 node.
template <typename T>
Var sum(Tape<T>& tape, Var a) {
  Var out = tape.record(Tensor<T>(1, 1, tdlstm::sum(tape.value(a))));
  tape.on_backward([&tape, a, out] {
    const T g = tape.grad(out)[0];
    for (auto& v : tape.grad(a).data()) v += g;
  });
  return out;
}

/// Arithmetic mean of same-shaped nodes.
template <typename T>
Var mean(Tape<T>& tape, const std::vector<Var>& xs) {
  if (xs.empty()) throw ValidationError("mean of an empty list");
  Tensor<T> acc = tape.value(xs.front());
  for (std::size_t k = 1; k < xs.size(); ++k) {
    const Tensor<T>& x = tape.value(xs[k]);
    detail::require_same_shape(acc, x, "mean");
    for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += x[i];
  }
  const T inv = T(1) / static_cast<T>(xs.size());
  for (auto& v : acc.data()) v *= inv;
  Var out = tape.record(std::move(acc));
  tape.on_backward([&tape, xs, out, inv] {
    const Tensor<T>& G = tape.grad(out);
    for (Var x : xs) {
      Tensor<T>& gx = tape.grad(x);
      for (std::size_t i = 0; i < G.size(); ++i) gx[i] += G[i] * inv;
    }
  });
  return out;
}

/// W x + b with x and b column vectors.
template <typename T>
Var affine(Tape<T>& tape, Var w, Var b, Var x) {
  const Tensor<T>& W = tape.value(w);
  const Tensor<T>& B = tape.value(b);
  const Tensor<T>& X = tape.value(x);
  if (W.cols() != X.rows() || X.cols() != 1 || B.rows() != W.rows() || B.cols() != 1) {
    throw DimensionError("affine: W " + W.shape() + ", b " + B.shape() + ", x " + X.shape());
  }
  Tensor<T> z = B;
  for (std::size_t r = 0; r < W.rows(); ++r) {
    T acc = z[r];
    const auto row = W.row(r);
    for (std::size_t j = 0; j < row.size(); ++j) acc += row[j] * X[j];
    z[r] = acc;
  }
  Var out = tape.record(std::move(z));
  tape.on_backward([&tape, w, b, x, out] {
    const Tensor<T>& G = tape.grad(out);
    const Tensor<T>& W = tape.value(w);
    const Tensor<T>& X = tape.value(x);
    Tensor<T>& gW = tape.grad(w);
    Tensor<T>& gB = tape.grad(b);
    Tensor<T>& gX = tape.grad(x);
    for (std::size_t r = 0; r < W.rows(); ++r) {
      const T g = G[r];
      gB[r] += g;
      auto grow = gW.row(r);
      const auto wrow = W.row(r);
      for (std::size_t j = 0; j < wrow.size(); ++j) {
        grow[j] += g * X[j];
        gX[j] += wrow[j] * g;
      }
    }
  });
  return out;
}

/// -log softmax(logits)[gold], fused so large logits cannot overflow.
template <typename T>
Var softmax_cross_entropy(Tape<T>& tape, Var logits, std::size_t gold) {
  const Tensor<T>& z = tape.value(logits);
  detail::require_column(z, "softmax_cross_entropy");
  if (gold >= z.rows()) {
    throw ValidationError("gold class " + std::to_string(gold) + " out of range for " +
                          std::to_string(z.rows()) + " classes");
  }
  const T loss = log_sum_exp(z) - z[gold];
  Var out = tape.record(Tensor<T>(1, 1, loss));
  tape.on_backward([&tape, logits, gold, out] {
    const T g = tape.grad(out)[0];
    const Tensor<T> p = softmax(tape.value(logits));
    Tensor<T>& gz = tape.grad(logits);
    for (std::size_t i = 0; i < p.size(); ++i) gz[i] += g * (p[i] - (i == gold ? T(1) : T(0)));
  });
  return out;
}

}  // namespace ops
}  // namespace tdlstm
