#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "tdlstm/tdlstm.hpp"

using namespace tdlstm;
namespace fs = std::filesystem;

namespace {

Model<double> sample_model(Variant v, std::uint64_t seed) {
  Vocabulary vocab;
  for (const char* t : {"i", "love", "harry", "potter", "today"}) vocab.add(t);
  Rng rng(seed);
  auto table = random_embeddings<double>(vocab, 3, rng, 1.0);
  ModelShape shape;
  shape.variant = v;
  shape.embedding_dim = 3;
  shape.hidden = 4;
  return Model<double>{init_params<double>(shape, rng, 0.5), vocab, table};
}

std::string path_for(const std::string& name) { return (fs::temp_directory_path() / ("tdlstm_ck_" + name)).string(); }

}  // namespace

TEST(Checkpoint, RoundTripIsBitExactForEveryVariant) {
  for (Variant v : {Variant::lstm, Variant::td_lstm, Variant::tc_lstm, Variant::att_td_lstm}) {
    const auto m = sample_model(v, 3);
    const auto path = path_for(std::string(to_string(v)));
    save_model(path, m);
    const auto back = load_model<double>(path, v);
    EXPECT_EQ(back.vocab.tokens(), m.vocab.tokens());
    EXPECT_EQ(back.embeddings.matrix, m.embeddings.matrix);
    EXPECT_EQ(back.params.names(), m.params.names());
    std::vector<Tensor<double>> a, b;
    m.params.for_each([&](const std::string&, const Tensor<double>& t) { a.push_back(t); });
    back.params.for_each([&](const std::string&, const Tensor<double>& t) { b.push_back(t); });
    EXPECT_EQ(a, b);
    EXPECT_EQ(serialize_model(back), serialize_model(m));

    const auto inst = make_instance("i love $T$ today", "harry potter", Polarity::positive);
    EXPECT_EQ(back.predict(inst).probabilities, m.predict(inst).probabilities);
  }
}

TEST(Checkpoint, TruncatedAndCorruptedFilesFailToLoad) {
  const std::string bytes = serialize_model(sample_model(Variant::td_lstm, 4));
  EXPECT_THROW(deserialize_model<double>(bytes.substr(0, bytes.size() / 2)), LoadError);
  EXPECT_THROW(deserialize_model<double>(bytes.substr(0, 5)), LoadError);
  std::string flipped = bytes;
  flipped[flipped.size() / 2] ^= 0x01;
  EXPECT_THROW(deserialize_model<double>(flipped), LoadError);
  std::string bad_magic = bytes;
  bad_magic[0] = 'X';
  EXPECT_THROW(deserialize_model<double>(bad_magic), LoadError);
}

TEST(Checkpoint, VersionMismatch) {
  std::string bytes = serialize_model(sample_model(Variant::lstm, 5));
  bytes[8] = 2;
  try {
    deserialize_model<double>(bytes);
    FAIL();
  } catch (const LoadError& e) {
    EXPECT_NE(std::string(e.what()).find("version"), std::string::npos);
  }
}

TEST(Checkpoint, VariantMismatchOnLoad) {
  const auto path = path_for("td_as_tc");
  save_model(path, sample_model(Variant::td_lstm, 6));
  EXPECT_THROW(load_model<double>(path, Variant::tc_lstm), VariantMismatch);
  EXPECT_THROW(load_model<double>(path_for("does_not_exist")), IoError);
}

TEST(Checkpoint, FloatModelsReloadAsDouble) {
  Vocabulary vocab;
  vocab.add("a");
  ModelShape shape;
  shape.variant = Variant::td_lstm;
  shape.embedding_dim = 2;
  shape.hidden = 2;
  Model<float> m{init_params<float>(shape, 7), vocab, EmbeddingTable<float>{Tensor<float>(2, 2, 0.25f), true}};
  const auto back = deserialize_model<double>(serialize_model(m));
  EXPECT_EQ(back.params.softmax.W[0], static_cast<double>(m.params.softmax.W[0]));
}
