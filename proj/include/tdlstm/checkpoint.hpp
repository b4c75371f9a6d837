#pragma once

// Binary checkpoint container. Layout (all integers little-endian):
//
//   "TDLSTMCK"                      8-byte magic
//   u32  format version             (kCheckpointVersion)
//   u8   scalar width in bytes      (8 = double, 4 = float)
//   str  variant tag                ("lstm", "td-lstm", ...)
//   str  combine mode               ("concat", "sum", "mean")
//   u64  embedding dim, hidden size, class count
//   u8   vocabulary lowercases tokens
//   u8   embeddings trainable
//   u64  vocabulary size, then that many str tokens (index order)
//   u64  tensor count, then per tensor: str name, u64 rows, u64 cols,
//        rows*cols raw IEEE-754 scalars (row-major)
//   u64  FNV-1a 64 hash of every preceding byte
//
// str = u32 byte length followed by the bytes. The embedding table is
// stored as the tensor named "embedding".

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <type_traits>
#include <vector>

#include "tdlstm/embeddings.hpp"
#include "tdlstm/errors.hpp"
#include "tdlstm/models.hpp"

namespace tdlstm {

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

inline constexpr char kCheckpointMagic[8] = {'T', 'D', 'L', 'S', 'T', 'M', 'C', 'K'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

/// Everything needed to classify new text: parameters, vocabulary and
/// word vectors.
template <typename T = double>
struct Model {
  ModelParams<T> params;
  Vocabulary vocab;
  EmbeddingTable<T> embeddings;

  Prediction<T> predict(const Instance& inst) const {
    return tdlstm::predict(params, embeddings, encode(inst, vocab));
  }
};

namespace detail {

class ByteWriter {
 public:
  template <typename U>
  void pod(const U& v) {
    static_assert(std::is_trivially_copyable_v<U>);
    const auto* p = reinterpret_cast<const char*>(&v);
    buf_.append(p, sizeof(U));
  }
  void str(const std::string& s) {
    pod(static_cast<std::uint32_t>(s.size()));
    buf_.append(s);
  }
  void raw(const void* p, std::size_t n) { buf_.append(static_cast<const char*>(p), n); }
  const std::string& bytes() const noexcept { return buf_; }

 private:
  std::string buf_;
};

class ByteReader {
 public:
  explicit ByteReader(std::string_view bytes) : bytes_(bytes) {}

  template <typename U>
  U pod() {
    U v;
    need(sizeof(U));
    std::memcpy(&v, bytes_.data() + pos_, sizeof(U));
    pos_ += sizeof(U);
    return v;
  }
  std::string str() {
    const auto n = pod<std::uint32_t>();
    need(n);
    std::string s(bytes_.substr(pos_, n));
    pos_ += n;
    return s;
  }
  void raw(void* dst, std::size_t n) {
    need(n);
    std::memcpy(dst, bytes_.data() + pos_, n);
    pos_ += n;
  }
  std::size_t remaining() const noexcept { return bytes_.size() - pos_; }

 private:
  void need(std::size_t n) const {
    if (bytes_.size() - pos_ < n) throw LoadError("checkpoint is truncated");
  }
  std::string_view bytes_;
  std::size_t pos_ = 0;
};

inline std::uint64_t fnv1a(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

template <typename T>
void write_tensor(ByteWriter& w, const std::string& name, const Tensor<T>& t) {
  w.str(name);
  w.pod(static_cast<std::uint64_t>(t.rows()));
  w.pod(static_cast<std::uint64_t>(t.cols()));
  w.raw(t.data().data(), t.size() * sizeof(T));
}

}  // namespace detail

template <typename T>
std::string serialize_model(const Model<T>& m) {
  static_assert(std::is_same_v<T, double> || std::is_same_v<T, float>);
  detail::ByteWriter w;
  w.raw(kCheckpointMagic, sizeof kCheckpointMagic);
  w.pod(kCheckpointVersion);
  w.pod(static_cast<std::uint8_t>(sizeof(T)));
  const ModelShape& s = m.params.shape;
  w.str(std::string(to_string(s.variant)));
  w.str(std::string(to_string(s.combine)));
  w.pod(static_cast<std::uint64_t>(s.embedding_dim));
  w.pod(static_cast<std::uint64_t>(s.hidden));
  w.pod(static_cast<std::uint64_t>(s.classes));
  w.pod(static_cast<std::uint8_t>(m.vocab.lowercases()));
  w.pod(static_cast<std::uint8_t>(m.embeddings.trainable));
  w.pod(static_cast<std::uint64_t>(m.vocab.size()));
  for (const auto& tok : m.vocab.tokens()) w.str(tok);
  const auto names = m.params.names();
  w.pod(static_cast<std::uint64_t>(names.size() + 1));
  m.params.for_each([&](const std::string& name, const Tensor<T>& t) { detail::write_tensor(w, name, t); });
  detail::write_tensor(w, "embedding", m.embeddings.matrix);
  std::string bytes = w.bytes();
  const std::uint64_t h = detail::fnv1a(bytes);
  bytes.append(reinterpret_cast<const char*>(&h), sizeof h);
  return bytes;
}

template <typename T>
Model<T> deserialize_model(std::string_view bytes) {
  if (bytes.size() < sizeof kCheckpointMagic + sizeof(std::uint64_t) ||
      std::memcmp(bytes.data(), kCheckpointMagic, sizeof kCheckpointMagic) != 0) {
    throw LoadError("not a checkpoint file (bad magic)");
  }
  detail::ByteReader r(bytes);
  char magic[8];
  r.raw(magic, sizeof magic);
  const auto version = r.pod<std::uint32_t>();
  if (version != kCheckpointVersion) {
    throw LoadError("checkpoint format version " + std::to_string(version) + " is not supported (expected " +
                    std::to_string(kCheckpointVersion) + ")");
  }
  {
    std::uint64_t stored;
    std::memcpy(&stored, bytes.data() + bytes.size() - sizeof stored, sizeof stored);
    if (stored != detail::fnv1a(bytes.substr(0, bytes.size() - sizeof stored))) {
      throw LoadError("checkpoint is corrupt or truncated (checksum mismatch)");
    }
  }
  const auto width = r.pod<std::uint8_t>();
  if (width != 4 && width != 8) throw LoadError("unsupported scalar width " + std::to_string(width));

  ModelShape shape;
  try {
    shape.variant = parse_variant(r.str());
    shape.combine = parse_combine(r.str());
  } catch (const ValidationError& e) {
    throw LoadError(std::string("checkpoint header: ") + e.what());
  }
  shape.embedding_dim = r.pod<std::uint64_t>();
  shape.hidden = r.pod<std::uint64_t>();
  shape.classes = r.pod<std::uint64_t>();
  const bool lower = r.pod<std::uint8_t>() != 0;
  const bool trainable = r.pod<std::uint8_t>() != 0;
  const auto vocab_size = r.pod<std::uint64_t>();
  if (vocab_size > r.remaining()) throw LoadError("checkpoint is truncated");
  std::vector<std::string> tokens;
  tokens.reserve(vocab_size);
  for (std::uint64_t i = 0; i < vocab_size; ++i) tokens.push_back(r.str());

  Model<T> m{ModelParams<T>{}, Vocabulary(lower), EmbeddingTable<T>{}};
  try {
    m.params = zero_params<T>(shape);
    m.vocab = Vocabulary::from_tokens(tokens, lower);
  } catch (const Error& e) {
    throw LoadError(std::string("checkpoint header: ") + e.what());
  }
  m.embeddings = {Tensor<T>(m.vocab.size(), shape.embedding_dim), trainable};

  std::map<std::string, Tensor<T>*> slots;
  m.params.for_each([&](const std::string& name, Tensor<T>& t) { slots[name] = &t; });
  slots["embedding"] = &m.embeddings.matrix;

  const auto count = r.pod<std::uint64_t>();
  if (count != slots.size()) {
    throw LoadError("checkpoint holds " + std::to_string(count) + " tensors, variant '" +
                    std::string(to_string(shape.variant)) + "' needs " + std::to_string(slots.size()));
  }
  std::set<std::string> seen;
  for (std::uint64_t i = 0; i < count; ++i) {
    const std::string name = r.str();
    const auto rows = r.pod<std::uint64_t>();
    const auto cols = r.pod<std::uint64_t>();
    auto it = slots.find(name);
    if (it == slots.end() || !seen.insert(name).second) {
      throw LoadError("unexpected tensor '" + name + "' in checkpoint");
    }
    Tensor<T>& dst = *it->second;
    if (rows != dst.rows() || cols != dst.cols()) {
      throw LoadError("tensor '" + name + "' has shape " + Tensor<T>::shape_string(rows, cols) + ", expected " +
                      dst.shape());
    }
    if (width == sizeof(T)) {
      r.raw(dst.data().data(), dst.size() * sizeof(T));
    } else if (width == 8) {
      for (auto& v : dst.data()) v = static_cast<T>(r.pod<double>());
    } else {
      for (auto& v : dst.data()) v = static_cast<T>(r.pod<float>());
    }
  }
  if (r.remaining() != sizeof(std::uint64_t)) throw LoadError("trailing bytes after checkpoint tensors");
  return m;
}

template <typename T>
void save_model(const std::string& path, const Model<T>& m) {
  const std::string bytes = serialize_model(m);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write checkpoint '" + path + "'");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("failed writing checkpoint '" + path + "'");
}

template <typename T = double>
Model<T> load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read checkpoint '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return deserialize_model<T>(ss.str());
}

/// Loads a checkpoint and insists on its variant.
template <typename T = double>
Model<T> load_model(const std::string& path, Variant expected) {
  Model<T> m = load_model<T>(path);
  if (m.params.variant() != expected) {
    throw VariantMismatch("checkpoint '" + path + "' holds a " + std::string(to_string(m.params.variant())) +
                          " model, not " + std::string(to_string(expected)));
  }
  return m;
}

}  // namespace tdlstm
