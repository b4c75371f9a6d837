#pragma once

#include <cstddef>
#include <map>
#include <string>

#include "tdlstm/tensor.hpp"

namespace tdlstm {

/// d loss / d theta for one recorded computation. Dense parameters are keyed
/// by their qualified name ("lstm_l.W_i", "softmax.b", ...). Embedding rows
/// are kept sparse: only rows touched by the example appear, each d x 1.
template <typename T = double>
struct Gradients {
  std::map<std::string, Tensor<T>> dense;
  std::map<std::size_t, Tensor<T>> embedding_rows;

  const Tensor<T>& at(const std::string& name) const {
    auto it = dense.find(name);
    if (it == dense.end()) throw ConsistencyError("no gradient for parameter '" + name + "'");
    return it->second;
  }
};

}  // namespace tdlstm
