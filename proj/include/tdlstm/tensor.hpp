#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "tdlstm/errors.hpp"

namespace tdlstm {

/// Dense row-major 2-D array. Column vectors (n x 1) carry every hidden
/// state, gate and input in the models.
template <typename T = double>
class Tensor {
 public:
  using value_type = T;

  Tensor() = default;
  Tensor(std::size_t rows, std::size_t cols, T fill = T(0))
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
  Tensor(std::size_t rows, std::size_t cols, std::vector<T> data)
      : rows_(rows), cols_(cols), data_(std::move(data)) {
    if (data_.size() != rows_ * cols_) {
      throw DimensionError("tensor data length " + std::to_string(data_.size()) +
                           " does not match shape " + shape_string(rows_, cols_));
    }
  }

  /// Matrix literal: {{1, 2}, {3, 4}}.
  Tensor(std::initializer_list<std::initializer_list<T>> rows) : rows_(rows.size()) {
    cols_ = rows.size() == 0 ? 0 : rows.begin()->size();
    data_.reserve(rows_ * cols_);
    for (const auto& r : rows) {
      if (r.size() != cols_) throw DimensionError("ragged matrix literal");
      data_.insert(data_.end(), r.begin(), r.end());
    }
  }

  static Tensor column(std::vector<T> values) {
    const std::size_t n = values.size();
    return Tensor(n, 1, std::move(values));
  }
  static Tensor column(std::initializer_list<T> values) {
    return column(std::vector<T>(values));
  }
  static Tensor zeros_like(const Tensor& t) { return Tensor(t.rows_, t.cols_); }

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }
  bool same_shape(const Tensor& o) const noexcept { return rows_ == o.rows_ && cols_ == o.cols_; }

  T& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  const T& operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }
  T& operator[](std::size_t i) { return data_[i]; }
  const T& operator[](std::size_t i) const { return data_[i]; }

  std::span<T> data() noexcept { return data_; }
  std::span<const T> data() const noexcept { return data_; }
  std::span<const T> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }
  std::span<T> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }

  std::string shape() const { return shape_string(rows_, cols_); }

  void fill(T v) { std::fill(data_.begin(), data_.end(), v); }

  bool all_finite() const {
    return std::all_of(data_.begin(), data_.end(), [](T v) { return std::isfinite(v); });
  }

  friend bool operator==(const Tensor& a, const Tensor& b) {
    return a.rows_ == b.rows_ && a.cols_ == b.cols_ && a.data_ == b.data_;
  }

  static std::string shape_string(std::size_t r, std::size_t c) {
    return "(" + std::to_string(r) + "x" + std::to_string(c) + ")";
  }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<T> data_;
};

namespace detail {

template <typename T>
void require_same_shape(const Tensor<T>& a, const Tensor<T>& b, const char* op) {
  if (!a.same_shape(b)) {
    throw DimensionError(std::string(op) + ": shape mismatch " + a.shape() + " vs " + b.shape());
  }
}

template <typename T>
void require_column(const Tensor<T>& x, const char* op) {
  if (x.cols() != 1 || x.rows() == 0) {
    throw DimensionError(std::string(op) + ": expected non-empty column vector, got " + x.shape());
  }
}

template <typename T>
T sigmoid(T x) {
  // Split on sign so exp never overflows.
  if (x >= T(0)) return T(1) / (T(1) + std::exp(-x));
  const T e = std::exp(x);
  return e / (T(1) + e);
}

}  // namespace detail

template <typename T>
Tensor<T> matmul(const Tensor<T>& a, const Tensor<T>& b) {
  if (a.cols() != b.rows()) {
    throw DimensionError("matmul: cannot multiply " + a.shape() + " by " + b.shape());
  }
  Tensor<T> out(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const T aik = a(i, k);
      for (std::size_t j = 0; j < b.cols(); ++j) out(i, j) += aik * b(k, j);
    }
  }
  return out;
}

enum class Elementwise { add, mul, tanh, sigmoid };

template <typename T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b) {
  detail::require_same_shape(a, b, "add");
  Tensor<T> out = a;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += b[i];
  return out;
}

template <typename T>
Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b) {
  detail::require_same_shape(a, b, "mul");
  Tensor<T> out = a;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= b[i];
  return out;
}

template <typename T>
Tensor<T> tanh(const Tensor<T>& a) {
  Tensor<T> out = a;
  for (auto& v : out.data()) v = std::tanh(v);
  return out;
}

template <typename T>
Tensor<T> sigmoid(const Tensor<T>& a) {
  Tensor<T> out = a;
  for (auto& v : out.data()) v = detail::sigmoid(v);
  return out;
}

/// Dispatching form; unary ops ignore the second argument.
template <typename T>
Tensor<T> elementwise(Elementwise op, const Tensor<T>& a, const Tensor<T>& b = {}) {
  switch (op) {
    case Elementwise::add: return add(a, b);
    case Elementwise::mul: return mul(a, b);
    case Elementwise::tanh: return tanh(a);
    case Elementwise::sigmoid: return sigmoid(a);
  }
  throw ValidationError("elementwise: unknown op");
}

template <typename T>
Tensor<T> scale(const Tensor<T>& a, T s) {
  Tensor<T> out = a;
  for (auto& v : out.data()) v *= s;
  return out;
}

/// Stacks column vectors vertically: [a; b].
template <typename T>
Tensor<T> concat_rows(const Tensor<T>& a, const Tensor<T>& b) {
  if (a.cols() != b.cols()) {
    throw DimensionError("concat: column mismatch " + a.shape() + " vs " + b.shape());
  }
  std::vector<T> data(a.data().begin(), a.data().end());
  data.insert(data.end(), b.data().begin(), b.data().end());
  return Tensor<T>(a.rows() + b.rows(), a.cols(), std::move(data));
}

template <typename T>
T sum(const Tensor<T>& a) {
  T s = 0;
  for (T v : a.data()) s += v;
  return s;
}

/// Numerically stable softmax over a column vector (max-subtracted).
template <typename T>
Tensor<T> softmax(const Tensor<T>& x) {
  detail::require_column(x, "softmax");
  const T mx = *std::max_element(x.data().begin(), x.data().end());
  Tensor<T> out(x.rows(), 1);
  T z = 0;
  for (std::size_t i = 0; i < x.rows(); ++i) {
    out[i] = std::exp(x[i] - mx);
    z += out[i];
  }
  for (auto& v : out.data()) v /= z;
  return out;
}

/// log(sum(exp(x))) with max subtraction.
template <typename T>
T log_sum_exp(const Tensor<T>& x) {
  detail::require_column(x, "log_sum_exp");
  const T mx = *std::max_element(x.data().begin(), x.data().end());
  T z = 0;
  for (T v : x.data()) z += std::exp(v - mx);
  return mx + std::log(z);
}

template <typename T>
std::size_t argmax(const Tensor<T>& x) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < x.size(); ++i) {
    if (x[i] > x[best]) best = i;  // strict: lowest index wins ties
  }
  return best;
}

template <typename T>
T l2_norm_squared(const Tensor<T>& a) {
  T s = 0;
  for (T v : a.data()) s += v * v;
  return s;
}

template <typename To, typename From>
Tensor<To> cast(const Tensor<From>& t) {
  std::vector<To> data(t.data().begin(), t.data().end());
  return Tensor<To>(t.rows(), t.cols(), std::move(data));
}

}  // namespace tdlstm
