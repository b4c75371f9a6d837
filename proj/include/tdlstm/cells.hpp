#pragma once

#include <cmath>
#include <cstddef>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "tdlstm/random.hpp"
#include "tdlstm/tape.hpp"
#include "tdlstm/tensor.hpp"

namespace tdlstm {

/// h_t = tanh(W [h_{t-1}; x_t] + b), W is d x (d + k).
template <typename T = double>
struct RnnCellParams {
  Tensor<T> W;
  Tensor<T> b;

  RnnCellParams() = default;
  RnnCellParams(std::size_t hidden, std::size_t input)
      : W(hidden, hidden + input), b(hidden, 1) {}

  std::size_t hidden_size() const noexcept { return b.rows(); }
  std::size_t input_size() const noexcept { return W.cols() - W.rows(); }

  template <typename F>
  void for_each(F&& f) {
    f("W", W);
    f("b", b);
  }
};

/// Gate weights act on [h_{t-1}; x_t]. W_r/b_r parameterise the candidate
/// transform g_t.
template <typename T = double>
struct LstmCellParams {
  Tensor<T> W_i, b_i, W_f, b_f, W_o, b_o, W_r, b_r;

  LstmCellParams() = default;
  LstmCellParams(std::size_t hidden, std::size_t input)
      : W_i(hidden, hidden + input), b_i(hidden, 1),
        W_f(hidden, hidden + input), b_f(hidden, 1),
        W_o(hidden, hidden + input), b_o(hidden, 1),
        W_r(hidden, hidden + input), b_r(hidden, 1) {}

  std::size_t hidden_size() const noexcept { return b_i.rows(); }
  std::size_t input_size() const noexcept { return W_i.cols() - W_i.rows(); }

  template <typename F>
  void for_each(F&& f) {
    f("W_i", W_i); f("b_i", b_i);
    f("W_f", W_f); f("b_f", b_f);
    f("W_o", W_o); f("b_o", b_o);
    f("W_r", W_r); f("b_r", b_r);
  }
  template <typename F>
  void for_each(F&& f) const {
    f("W_i", W_i); f("b_i", b_i);
    f("W_f", W_f); f("b_f", b_f);
    f("W_o", W_o); f("b_o", b_o);
    f("W_r", W_r); f("b_r", b_r);
  }

  void validate() const {
    const std::size_t d = b_i.rows();
    const std::size_t width = W_i.cols();
    for_each([&](const char* name, const Tensor<T>& t) {
      const bool is_bias = name[0] == 'b';
      const bool ok = is_bias ? (t.rows() == d && t.cols() == 1) : (t.rows() == d && t.cols() == width);
      if (!ok || width <= d) {
        throw DimensionError(std::string("LSTM parameter ") + name + " has shape " + t.shape() +
                             " inconsistent with hidden size " + std::to_string(d));
      }
    });
  }
};

template <typename T = double>
struct LstmState {
  Tensor<T> h;
  Tensor<T> c;

  static LstmState zeros(std::size_t hidden) { return {Tensor<T>(hidden, 1), Tensor<T>(hidden, 1)}; }
};

enum class Direction { forward, reversed };

namespace detail {

/// Everything the LSTM adjoint needs from the forward step.
template <typename T>
struct LstmStepCache {
  Tensor<T> z;  // [h_prev; x]
  Tensor<T> c_prev;
  Tensor<T> i, f, o, g;
  Tensor<T> c, tanh_c, h;
};

template <typename T>
void gate_preactivation(const Tensor<T>& W, const Tensor<T>& b, const Tensor<T>& z, Tensor<T>& out) {
  for (std::size_t r = 0; r < W.rows(); ++r) {
    T acc = b[r];
    const auto row = W.row(r);
    for (std::size_t j = 0; j < row.size(); ++j) acc += row[j] * z[j];
    out[r] = acc;
  }
}

template <typename T>
void check_step_shapes(std::size_t d, std::size_t k, const Tensor<T>& h_prev,
                       const Tensor<T>& c_prev, const Tensor<T>& x) {
  if (h_prev.rows() != d || h_prev.cols() != 1 || c_prev.rows() != d || c_prev.cols() != 1) {
    throw DimensionError("lstm_step: state shapes h " + h_prev.shape() + ", c " + c_prev.shape() +
                         " do not match hidden size " + std::to_string(d));
  }
  if (x.rows() != k || x.cols() != 1) {
    throw DimensionError("lstm_step: input " + x.shape() + " does not match input size " +
                         std::to_string(k));
  }
}

template <typename T>
LstmStepCache<T> lstm_forward(const LstmCellParams<T>& p, const Tensor<T>& h_prev,
                              const Tensor<T>& c_prev, const Tensor<T>& x) {
  const std::size_t d = p.hidden_size();
  check_step_shapes(d, p.input_size(), h_prev, c_prev, x);
  LstmStepCache<T> s;
  s.z = concat_rows(h_prev, x);
  s.c_prev = c_prev;
  s.i = Tensor<T>(d, 1);
  s.f = Tensor<T>(d, 1);
  s.o = Tensor<T>(d, 1);
  s.g = Tensor<T>(d, 1);
  gate_preactivation(p.W_i, p.b_i, s.z, s.i);
  gate_preactivation(p.W_f, p.b_f, s.z, s.f);
  gate_preactivation(p.W_o, p.b_o, s.z, s.o);
  gate_preactivation(p.W_r, p.b_r, s.z, s.g);
  s.c = Tensor<T>(d, 1);
  s.tanh_c = Tensor<T>(d, 1);
  s.h = Tensor<T>(d, 1);
  for (std::size_t r = 0; r < d; ++r) {
    s.i[r] = sigmoid(s.i[r]);
    s.f[r] = sigmoid(s.f[r]);
    s.o[r] = sigmoid(s.o[r]);
    s.g[r] = std::tanh(s.g[r]);
    s.c[r] = s.i[r] * s.g[r] + s.f[r] * c_prev[r];
    s.tanh_c[r] = std::tanh(s.c[r]);
    s.h[r] = s.o[r] * s.tanh_c[r];
  }
  return s;
}

}  // namespace detail

template <typename T>
Tensor<T> rnn_step(const RnnCellParams<T>& p, const Tensor<T>& h_prev, const Tensor<T>& x) {
  const std::size_t d = p.hidden_size();
  if (h_prev.rows() != d || h_prev.cols() != 1 || x.cols() != 1 || x.rows() != p.input_size()) {
    throw DimensionError("rnn_step: h " + h_prev.shape() + ", x " + x.shape() + " vs W " + p.W.shape());
  }
  const Tensor<T> z = concat_rows(h_prev, x);
  Tensor<T> h(d, 1);
  detail::gate_preactivation(p.W, p.b, z, h);
  for (auto& v : h.data()) v = std::tanh(v);
  return h;
}

template <typename T>
LstmState<T> lstm_step(const LstmCellParams<T>& p, const LstmState<T>& state, const Tensor<T>& x) {
  auto s = detail::lstm_forward(p, state.h, state.c, x);
  return {std::move(s.h), std::move(s.c)};
}

/// Folds lstm_step over `inputs`; reversed walks them back to front. States
/// are returned in traversal order.
template <typename T>
std::vector<LstmState<T>> run_sequence(const LstmCellParams<T>& p, const LstmState<T>& initial,
                                       const std::vector<Tensor<T>>& inputs,
                                       Direction direction = Direction::forward) {
  std::vector<LstmState<T>> states;
  states.reserve(inputs.size());
  const std::size_t n = inputs.size();
  for (std::size_t t = 0; t < n; ++t) {
    const Tensor<T>& x = inputs[direction == Direction::forward ? t : n - 1 - t];
    if (!x.same_shape(inputs.front())) {
      throw DimensionError("run_sequence: input " + x.shape() + " differs from " + inputs.front().shape());
    }
    states.push_back(lstm_step(p, states.empty() ? initial : states.back(), x));
  }
  return states;
}

// ---- recorded (differentiable) versions --------------------------------

template <typename T>
struct LstmCellVars {
  const LstmCellParams<T>* params = nullptr;
  Var W_i, b_i, W_f, b_f, W_o, b_o, W_r, b_r;
};

/// Registers the cell's eight tensors on the tape as "<prefix>.W_i" etc.
template <typename T>
LstmCellVars<T> bind(Tape<T>& tape, const LstmCellParams<T>& p, const std::string& prefix) {
  LstmCellVars<T> v;
  v.params = &p;
  v.W_i = tape.parameter(prefix + ".W_i", p.W_i);
  v.b_i = tape.parameter(prefix + ".b_i", p.b_i);
  v.W_f = tape.parameter(prefix + ".W_f", p.W_f);
  v.b_f = tape.parameter(prefix + ".b_f", p.b_f);
  v.W_o = tape.parameter(prefix + ".W_o", p.W_o);
  v.b_o = tape.parameter(prefix + ".b_o", p.b_o);
  v.W_r = tape.parameter(prefix + ".W_r", p.W_r);
  v.b_r = tape.parameter(prefix + ".b_r", p.b_r);
  return v;
}

template <typename T>
struct StateVars {
  Var h;
  Var c;
};

namespace ops {

template <typename T>
StateVars<T> lstm_step(Tape<T>& tape, const LstmCellVars<T>& cell, StateVars<T> prev, Var x) {
  auto cache = std::make_shared<detail::LstmStepCache<T>>(
      detail::lstm_forward(*cell.params, tape.value(prev.h), tape.value(prev.c), tape.value(x)));
  StateVars<T> next{tape.record(cache->h), tape.record(cache->c)};
  tape.on_backward([&tape, cell, prev, next, x, cache] {
    const auto& s = *cache;
    const std::size_t d = s.h.rows();
    const Tensor<T>& dh = tape.grad(next.h);
    const Tensor<T>& dc_in = tape.grad(next.c);
    const bool fault = tape.fault_injection();

    Tensor<T> dzi(d, 1), dzf(d, 1), dzo(d, 1), dzg(d, 1);
    Tensor<T>& dc_prev = tape.grad(prev.c);
    for (std::size_t r = 0; r < d; ++r) {
      const T d_o = dh[r] * s.tanh_c[r];
      const T dc = dc_in[r] + dh[r] * s.o[r] * (T(1) - s.tanh_c[r] * s.tanh_c[r]);
      const T d_i = dc * s.g[r];
      const T d_g = dc * s.i[r];
      const T d_f = (fault ? -dc : dc) * s.c_prev[r];
      dc_prev[r] += dc * s.f[r];
      dzi[r] = d_i * s.i[r] * (T(1) - s.i[r]);
      dzf[r] = d_f * s.f[r] * (T(1) - s.f[r]);
      dzo[r] = d_o * s.o[r] * (T(1) - s.o[r]);
      dzg[r] = d_g * (T(1) - s.g[r] * s.g[r]);
    }

    Tensor<T> dz(s.z.rows(), 1);
    const auto gate = [&](Var wv, Var bv, const Tensor<T>& W, const Tensor<T>& dpre) {
      Tensor<T>& gW = tape.grad(wv);
      Tensor<T>& gB = tape.grad(bv);
      for (std::size_t r = 0; r < d; ++r) {
        const T g = dpre[r];
        gB[r] += g;
        if (g == T(0)) continue;
        auto grow = gW.row(r);
        const auto wrow = W.row(r);
        for (std::size_t j = 0; j < wrow.size(); ++j) {
          grow[j] += g * s.z[j];
          dz[j] += wrow[j] * g;
        }
      }
    };
    const auto& p = *cell.params;
    gate(cell.W_i, cell.b_i, p.W_i, dzi);
    gate(cell.W_f, cell.b_f, p.W_f, dzf);
    gate(cell.W_o, cell.b_o, p.W_o, dzo);
    gate(cell.W_r, cell.b_r, p.W_r, dzg);

    Tensor<T>& dh_prev = tape.grad(prev.h);
    for (std::size_t r = 0; r < d; ++r) dh_prev[r] += dz[r];
    Tensor<T>& dx = tape.grad(x);
    for (std::size_t j = 0; j < dx.size(); ++j) dx[j] += dz[d + j];
  });
  return next;
}

/// Recorded fold; returns the state after each input, in traversal order.
template <typename T>
std::vector<StateVars<T>> run_sequence(Tape<T>& tape, const LstmCellVars<T>& cell,
                                       const std::vector<Var>& inputs,
                                       Direction direction = Direction::forward) {
  const std::size_t d = cell.params->hidden_size();
  StateVars<T> state{tape.constant(Tensor<T>(d, 1)), tape.constant(Tensor<T>(d, 1))};
  std::vector<StateVars<T>> states;
  states.reserve(inputs.size());
  const std::size_t n = inputs.size();
  for (std::size_t t = 0; t < n; ++t) {
    state = lstm_step(tape, cell, state, inputs[direction == Direction::forward ? t : n - 1 - t]);
    states.push_back(state);
  }
  return states;
}

template <typename T>
Var rnn_step(Tape<T>& tape, Var w, Var b, Var h_prev, Var x) {
  Var z = concat(tape, h_prev, x);
  return tanh(tape, affine(tape, w, b, z));
}

}  // namespace ops

}  // namespace tdlstm
