#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <set>
#include <string>
#include <vector>

#include "tdlstm/models.hpp"
#include "tdlstm/random.hpp"
#include "tdlstm/training.hpp"

namespace tdlstm {

struct ParamCheck {
  std::string name;
  std::size_t entries = 0;
  double max_rel_error = 0;
  double max_abs_error = 0;
  bool pass = true;
};

struct GradCheckResult {
  std::vector<ParamCheck> params;
  double loss = 0;

  bool pass() const {
    return std::all_of(params.begin(), params.end(), [](const ParamCheck& p) { return p.pass; });
  }
};

struct GradCheckOptions {
  double epsilon = 1e-5;
  double tolerance = 1e-4;
  double floor = 1e-8;  // denominator floor of the relative error
  bool inject_fault = false;
  /// Evaluate the finite-difference losses in long double. In 64-bit the
  /// oracle cannot resolve entries much below 1e-7 (one ulp of the loss over
  /// 2 eps is about 1e-11).
  bool extended_oracle = true;
};

inline double relative_error(double analytic, double numeric, double floor = 1e-8) {
  return std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), floor});
}

/// Compares reverse-mode gradients with central differences
/// (L(theta+eps) - L(theta-eps)) / 2eps for every entry of every trainable
/// tensor, and for every embedding row the example touches when the table
/// is trainable (reported as "embedding").
namespace detail {

template <typename To, typename From>
ModelParams<To> cast_params(const ModelParams<From>& p) {
  ModelParams<To> out = zero_params<To>(p.shape);
  std::vector<const Tensor<From>*> src;
  p.for_each([&](const std::string&, const Tensor<From>& t) { src.push_back(&t); });
  std::size_t i = 0;
  out.for_each([&](const std::string&, Tensor<To>& t) { t = cast<To>(*src[i++]); });
  return out;
}

template <typename O, typename T>
GradCheckResult run_gradient_check(ModelParams<O> params, EmbeddingTable<O> table, const EncodedInstance& x,
                                   const LossAndGradients<T>& analytic, const GradCheckOptions& opt) {
  GradCheckResult result;
  result.loss = static_cast<double>(analytic.loss);
  const O eps = static_cast<O>(opt.epsilon);

  const auto check_entry = [&](ParamCheck& pc, O& slot, double a) {
    const O saved = slot;
    slot = saved + eps;
    const O up = loss_only(params, table, x);
    slot = saved - eps;
    const O down = loss_only(params, table, x);
    slot = saved;
    const double numeric = static_cast<double>((up - down) / (2 * eps));
    pc.max_rel_error = std::max(pc.max_rel_error, relative_error(a, numeric, opt.floor));
    pc.max_abs_error = std::max(pc.max_abs_error, std::abs(a - numeric));
    ++pc.entries;
  };

  std::vector<std::pair<std::string, Tensor<O>*>> slots;
  params.for_each([&](const std::string& n, Tensor<O>& t) { slots.emplace_back(n, &t); });
  for (auto& [name, tensor] : slots) {
    ParamCheck pc{name};
    const auto& g = analytic.gradients.at(name);
    for (std::size_t i = 0; i < tensor->size(); ++i) check_entry(pc, (*tensor)[i], static_cast<double>(g[i]));
    pc.pass = pc.max_rel_error < opt.tolerance;
    result.params.push_back(pc);
  }

  if (table.trainable) {
    ParamCheck pc{"embedding"};
    std::set<std::size_t> rows;
    for (const auto* part : {&x.preceding, &x.target, &x.following}) rows.insert(part->begin(), part->end());
    for (std::size_t row : rows) {
      auto it = analytic.gradients.embedding_rows.find(row);
      auto dst = table.matrix.row(row);
      for (std::size_t j = 0; j < dst.size(); ++j) {
        const double a = it == analytic.gradients.embedding_rows.end() ? 0.0 : static_cast<double>(it->second[j]);
        check_entry(pc, dst[j], a);
      }
    }
    pc.pass = pc.max_rel_error < opt.tolerance;
    result.params.push_back(pc);
  }
  return result;
}

}  // namespace detail

/// Compares reverse-mode gradients (computed in T) with central differences
/// (L(theta+eps) - L(theta-eps)) / 2eps for every entry of every trainable
/// tensor, and for every embedding row the example touches when the table
/// is trainable (reported as "embedding").
template <typename T>
GradCheckResult gradient_check(const ModelParams<T>& params, const EmbeddingTable<T>& table,
                               const EncodedInstance& x, const GradCheckOptions& opt = {}) {
  const auto analytic = loss_and_gradients(params, table, x, opt.inject_fault);
  if (opt.extended_oracle) {
    EmbeddingTable<long double> wide{cast<long double>(table.matrix), table.trainable};
    return detail::run_gradient_check(detail::cast_params<long double>(params), std::move(wide), x, analytic, opt);
  }
  return detail::run_gradient_check(params, table, x, analytic, opt);
}

/// A random tiny problem for gradient checking: vocabulary of `vocab_size`
/// synthetic words, word vectors and parameters drawn from
/// U(-scale, scale), and an instance with the requested part lengths.
template <typename T = double>
struct GradCheckCase {
  ModelParams<T> params;
  EmbeddingTable<T> table;
  EncodedInstance instance;
};

template <typename T = double>
GradCheckCase<T> make_gradcheck_case(const ModelShape& shape, std::size_t preceding, std::size_t target,
                                     std::size_t following, std::uint64_t seed, double scale = 0.5,
                                     std::size_t vocab_size = 12) {
  Rng rng(seed);
  GradCheckCase<T> c;
  c.params = init_params<T>(shape, rng, scale);
  c.table.matrix = Tensor<T>(vocab_size, shape.embedding_dim);
  rng.fill_uniform(c.table.matrix, -1.0, 1.0);
  c.table.trainable = true;
  const auto draw = [&](std::size_t n) {
    std::vector<std::size_t> ids(n);
    for (auto& id : ids) id = static_cast<std::size_t>(rng.below(vocab_size));
    return ids;
  };
  c.instance.preceding = draw(preceding);
  c.instance.target = draw(target);
  c.instance.following = draw(following);
  c.instance.gold = static_cast<std::size_t>(rng.below(shape.classes));
  return c;
}

}  // namespace tdlstm
