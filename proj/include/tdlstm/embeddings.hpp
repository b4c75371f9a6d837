#pragma once

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstddef>
#include <cmath>
#include <fstream>
#include <limits>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "tdlstm/errors.hpp"
#include "tdlstm/random.hpp"
#include "tdlstm/tensor.hpp"

namespace tdlstm {

inline constexpr std::string_view kUnknownToken = "<unk>";

/// ASCII lowercasing; bytes outside ASCII (UTF-8 continuation etc.) pass through.
inline std::string lowercase(std::string_view s) {
  std::string out(s);
  for (auto& ch : out) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
  return out;
}

/// Token <-> index map. Index 0 is always the unknown token.
class Vocabulary {
 public:
  explicit Vocabulary(bool lowercase_tokens = true) : lowercase_(lowercase_tokens) {
    tokens_.emplace_back(kUnknownToken);
    index_.emplace(tokens_.back(), 0);
  }

  bool lowercases() const noexcept { return lowercase_; }

  std::string normalize(std::string_view token) const {
    return lowercase_ ? lowercase(token) : std::string(token);
  }

  /// Adds (the normalized form of) token if new; returns its index.
  std::size_t add(std::string_view token) {
    std::string key = normalize(token);
    auto it = index_.find(key);
    if (it != index_.end()) return it->second;
    const std::size_t id = tokens_.size();
    index_.emplace(key, id);
    tokens_.push_back(std::move(key));
    return id;
  }

  /// Index of token, or 0 (unknown) when absent.
  std::size_t index_of(std::string_view token) const {
    auto it = index_.find(normalize(token));
    return it == index_.end() ? 0 : it->second;
  }
  bool contains(std::string_view token) const { return index_.count(normalize(token)) != 0; }

  const std::string& token(std::size_t i) const { return tokens_.at(i); }
  const std::vector<std::string>& tokens() const noexcept { return tokens_; }
  std::size_t size() const noexcept { return tokens_.size(); }

  /// One token per line, index order.
  void save(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write vocabulary to '" + path + "'");
    for (const auto& t : tokens_) out << t << '\n';
  }

  static Vocabulary load(const std::string& path, bool lowercase_tokens = true) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read vocabulary '" + path + "'");
    std::vector<std::string> tokens;
    for (std::string line; std::getline(in, line);) {
      if (!line.empty() && line.back() == '\r') line.pop_back();
      tokens.push_back(line);
    }
    return from_tokens(tokens, lowercase_tokens);
  }

  /// Rebuilds a vocabulary from its serialized token list (first entry must
  /// be the unknown token).
  static Vocabulary from_tokens(const std::vector<std::string>& tokens, bool lowercase_tokens) {
    if (tokens.empty() || tokens.front() != kUnknownToken) {
      throw FormatError("vocabulary must start with the unknown token " + std::string(kUnknownToken));
    }
    Vocabulary v(lowercase_tokens);
    for (std::size_t i = 1; i < tokens.size(); ++i) {
      if (v.index_.count(tokens[i])) throw FormatError("duplicate vocabulary token '" + tokens[i] + "'");
      v.index_.emplace(tokens[i], v.tokens_.size());
      v.tokens_.push_back(tokens[i]);
    }
    return v;
  }

 private:
  bool lowercase_;
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, std::size_t> index_;
};

/// |V| x d matrix; row i is the vector of vocabulary entry i.
template <typename T = double>
struct EmbeddingTable {
  Tensor<T> matrix;
  bool trainable = true;

  std::size_t dim() const noexcept { return matrix.cols(); }
  std::size_t rows() const noexcept { return matrix.rows(); }

  Tensor<T> row(std::size_t i) const {
    if (i >= matrix.rows()) throw ValidationError("embedding row " + std::to_string(i) + " out of range");
    const auto r = matrix.row(i);
    return Tensor<T>(r.size(), 1, std::vector<T>(r.begin(), r.end()));
  }
};

/// Range used for rows with no pre-trained vector.
inline constexpr double kOovInitRange = 0.003;

struct PretrainedLoadReport {
  std::size_t file_lines = 0;
  std::size_t matched = 0;  // vocabulary entries copied from the file
};

namespace detail {

inline std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    std::size_t j = i;
    while (j < line.size() && !std::isspace(static_cast<unsigned char>(line[j]))) ++j;
    if (j > i) out.push_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

inline bool is_integer(std::string_view s) {
  return !s.empty() && std::all_of(s.begin(), s.end(), [](char c) { return c >= '0' && c <= '9'; });
}

inline double parse_real(std::string_view s, const std::string& where) {
  double v = 0;
  const char* first = s.data();
  if (!s.empty() && s.front() == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v)) {
    throw FormatError(where + ": invalid real value '" + std::string(s) + "'");
  }
  return v;
}

}  // namespace detail

/// Every entry drawn from U(-range, range).
template <typename T = double>
EmbeddingTable<T> random_embeddings(const Vocabulary& vocab, std::size_t dim, Rng& rng,
                                    double range = kOovInitRange) {
  if (dim == 0) throw ValidationError("embedding dimension must be positive");
  EmbeddingTable<T> table{Tensor<T>(vocab.size(), dim), true};
  rng.fill_uniform(table.matrix, -range, range);
  return table;
}

/// Reads whitespace-separated "token v1 ... vd" lines (GloVe / SSWE text
/// format). A leading "<count> <dim>" header is skipped. Vocabulary rows with
/// no vector in the file, and the unknown row, are sampled from
/// U(-0.003, 0.003) in index order.
template <typename T = double>
EmbeddingTable<T> load_pretrained(const std::string& path, const Vocabulary& vocab, Rng& rng,
                                  PretrainedLoadReport* report = nullptr) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read embeddings '" + path + "'");

  std::size_t dim = 0;
  std::vector<bool> found(vocab.size(), false);
  std::vector<std::vector<double>> rows(vocab.size());
  std::size_t line_no = 0;
  std::size_t data_lines = 0;
  for (std::string line; std::getline(in, line);) {
    ++line_no;
    const auto fields = detail::split_ws(line);
    if (fields.empty()) continue;
    if (line_no == 1 && fields.size() == 2 && detail::is_integer(fields[0]) && detail::is_integer(fields[1])) {
      continue;
    }
    const std::string where = path + ":" + std::to_string(line_no);
    if (fields.size() < 2) throw FormatError(where + ": expected a token followed by a vector");
    const std::size_t n = fields.size() - 1;
    if (dim == 0) {
      dim = n;
    } else if (n != dim) {
      throw FormatError(where + ": vector has " + std::to_string(n) + " values, expected " +
                        std::to_string(dim));
    }
    ++data_lines;
    if (!vocab.contains(fields[0])) continue;
    const std::size_t id = vocab.index_of(fields[0]);
    if (id == 0 || found[id]) continue;  // first occurrence wins
    std::vector<double> v(dim);
    for (std::size_t j = 0; j < dim; ++j) v[j] = detail::parse_real(fields[j + 1], where);
    rows[id] = std::move(v);
    found[id] = true;
  }
  if (dim == 0) throw FormatError(path + ": no embedding vectors found");

  EmbeddingTable<T> table{Tensor<T>(vocab.size(), dim), true};
  std::size_t matched = 0;
  for (std::size_t i = 0; i < vocab.size(); ++i) {
    auto dst = table.matrix.row(i);
    if (found[i]) {
      ++matched;
      for (std::size_t j = 0; j < dim; ++j) dst[j] = static_cast<T>(rows[i][j]);
    } else {
      for (auto& v : dst) v = static_cast<T>(rng.uniform(-kOovInitRange, kOovInitRange));
    }
  }
  if (report) *report = {data_lines, matched};
  return table;
}

/// Vector of token, falling back to the unknown row.
template <typename T>
Tensor<T> lookup(const EmbeddingTable<T>& table, const Vocabulary& vocab, std::string_view token) {
  return table.row(vocab.index_of(token));
}

/// Mean of the target words' vectors.
template <typename T>
Tensor<T> target_vector(const EmbeddingTable<T>& table, const Vocabulary& vocab,
                        const std::vector<std::string>& target_tokens) {
  if (target_tokens.empty()) throw ValidationError("target_vector: empty target");
  Tensor<T> acc(table.dim(), 1);
  for (const auto& tok : target_tokens) {
    const Tensor<T> v = lookup(table, vocab, tok);
    for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += v[i];
  }
  const T inv = T(1) / static_cast<T>(target_tokens.size());
  for (auto& v : acc.data()) v *= inv;
  return acc;
}

/// Writes the table in the same text format load_pretrained reads (no
/// header, max_digits10 precision).
template <typename T>
void save_text_embeddings(const std::string& path, const EmbeddingTable<T>& table, const Vocabulary& vocab,
                          bool include_unknown = false) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write embeddings to '" + path + "'");
  out.precision(std::numeric_limits<T>::max_digits10);
  for (std::size_t i = include_unknown ? 0 : 1; i < vocab.size(); ++i) {
    out << vocab.token(i);
    for (T v : table.matrix.row(i)) out << ' ' << v;
    out << '\n';
  }
}

}  // namespace tdlstm
