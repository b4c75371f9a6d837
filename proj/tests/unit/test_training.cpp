#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "tdlstm/tdlstm.hpp"

using namespace tdlstm;

namespace {

Model<double> toy_model(Variant v, const std::vector<Instance>& data, std::size_t dim, std::uint64_t seed,
                        double emb_range = 0.5) {
  Vocabulary vocab = build_vocabulary({&data});
  Rng rng(seed);
  auto table = random_embeddings<double>(vocab, dim, rng, emb_range);
  TrainConfig cfg;
  cfg.variant = v;
  return initialize_model(cfg, vocab, table, rng);
}

Gradients<double> zero_grads(const ModelParams<double>& p) {
  Gradients<double> g;
  p.for_each([&](const std::string& n, const Tensor<double>& t) { g.dense[n] = Tensor<double>::zeros_like(t); });
  return g;
}

std::vector<Instance> synthetic(std::size_t bases, std::uint64_t seed) {
  SyntheticOptions opt;
  opt.base_sentences = bases;
  Rng rng(seed);
  return generate_target_pairs(opt, rng);
}

}  // namespace

TEST(CrossEntropy, UniformAndDirectFormula) {
  const auto uniform = make_prediction(Tensor<double>::column({0.3, 0.3, 0.3}));
  EXPECT_NEAR(cross_entropy(uniform, 1), std::log(3.0), 1e-15);
  EXPECT_NEAR(std::log(3.0), 1.0986, 1e-4);

  const auto logits = Tensor<double>::column({2, 1, 0});
  const double p0 = std::exp(2.0) / (std::exp(2.0) + std::exp(1.0) + std::exp(0.0));
  EXPECT_NEAR(cross_entropy(make_prediction(logits), 0), -std::log(p0), 1e-15);
  EXPECT_NEAR(cross_entropy_from_logits(logits, 0), -std::log(p0), 1e-15);

  EXPECT_NEAR(cross_entropy_from_logits(Tensor<double>::column({60, 0, 0}), 0), 0.0, 1e-20);
  EXPECT_NEAR(cross_entropy_from_logits(Tensor<double>::column({1000, 0, 0}), 1), 1000.0, 1e-9);
  EXPECT_THROW(cross_entropy(uniform, 3), ValidationError);
  EXPECT_THROW(cross_entropy_from_logits(logits, 7), ValidationError);
}

TEST(SgdStep, ZeroGradientsLeaveParametersUnchanged) {
  const auto data = synthetic(2, 1);
  auto m = toy_model(Variant::att_td_lstm, data, 4, 1);
  const auto before = serialize_model(m);
  sgd_step(m.params, m.embeddings, zero_grads(m.params), TrainConfig{});
  EXPECT_EQ(serialize_model(m), before);
}

TEST(SgdStep, ArithmeticAndClipping) {
  const auto data = synthetic(2, 1);
  auto m = toy_model(Variant::td_lstm, data, 2, 2);
  m.params.lstm_l.b_i[0] = 1.0;
  auto g = zero_grads(m.params);
  g.dense["lstm_l.b_i"][0] = 0.5;
  sgd_step(m.params, m.embeddings, g, TrainConfig{});
  EXPECT_DOUBLE_EQ(m.params.lstm_l.b_i[0], 0.995);

  // Softmax gradient of norm 400: only the softmax block is halved.
  m.params.softmax.b.fill(0);
  m.params.lstm_l.b_f[0] = 0;
  auto big = zero_grads(m.params);
  big.dense["softmax.b"] = Tensor<double>::column({240, 0, 320});
  big.dense["lstm_l.b_f"][0] = 400;
  sgd_step(m.params, m.embeddings, big, TrainConfig{});
  EXPECT_DOUBLE_EQ(m.params.softmax.b[0], -0.01 * 120);
  EXPECT_DOUBLE_EQ(m.params.softmax.b[2], -0.01 * 160);
  EXPECT_DOUBLE_EQ(m.params.lstm_l.b_f[0], -4.0);
}

TEST(SgdStep, ClippingPreservesDirection) {
  Rng rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    Gradients<double> g;
    g.dense["softmax.W"] = Tensor<double>(3, 4);
    g.dense["softmax.b"] = Tensor<double>(3, 1);
    g.dense["lstm.W_i"] = Tensor<double>(2, 2);
    for (auto& [n, t] : g.dense) rng.fill_uniform(t, -300, 300);
    const auto before = g;
    const double factor = clip_softmax_gradients(g, 200, ClipMode::norm);
    EXPECT_GT(factor, 0.0);
    EXPECT_LE(factor, 1.0);
    double norm = 0;
    for (const char* n : {"softmax.W", "softmax.b"}) {
      for (std::size_t i = 0; i < g.at(n).size(); ++i) {
        EXPECT_NEAR(g.at(n)[i], factor * before.at(n)[i], 1e-12);
        norm += g.at(n)[i] * g.at(n)[i];
      }
    }
    EXPECT_LE(std::sqrt(norm), 200 + 1e-9);
    EXPECT_EQ(g.at("lstm.W_i"), before.at("lstm.W_i"));
  }
  Gradients<double> v;
  v.dense["softmax.b"] = Tensor<double>::column({500, -500, 3});
  clip_softmax_gradients(v, 200, ClipMode::value);
  EXPECT_EQ(v.at("softmax.b"), Tensor<double>::column({200, -200, 3}));
  clip_softmax_gradients(v, 1, ClipMode::off);
  EXPECT_EQ(v.at("softmax.b")[0], 200);
}

TEST(SgdStep, KeyMismatchIsConsistencyError) {
  const auto data = synthetic(2, 1);
  auto m = toy_model(Variant::td_lstm, data, 2, 2);
  auto g = zero_grads(m.params);
  g.dense.erase("softmax.b");
  EXPECT_THROW(sgd_step(m.params, m.embeddings, g, TrainConfig{}), ConsistencyError);
  auto extra = zero_grads(m.params);
  extra.dense["att_l.M"] = Tensor<double>(2, 2);
  EXPECT_THROW(sgd_step(m.params, m.embeddings, extra, TrainConfig{}), ConsistencyError);
}

TEST(SgdStep, SmallStepsDescendLocally) {
  Rng rng(4);
  const auto data = synthetic(50, 5);
  for (Variant v : {Variant::lstm, Variant::td_lstm, Variant::tc_lstm, Variant::att_td_lstm}) {
    auto m = toy_model(v, data, 4, 6);
    TrainConfig cfg;
    cfg.learning_rate = 1e-4;
    const auto encoded = encode_all(data, m.vocab);
    for (int trial = 0; trial < 25; ++trial) {
      Model<double> probe = m;
      probe.params.for_each([&](const std::string&, Tensor<double>& t) { rng.fill_uniform(t, -0.5, 0.5); });
      const auto& x = encoded[rng.below(encoded.size())];
      const auto step = loss_and_gradients(probe.params, probe.embeddings, x);
      sgd_step(probe.params, probe.embeddings, step.gradients, cfg);
      EXPECT_LE(loss_only(probe.params, probe.embeddings, x), step.loss + 1e-8) << to_string(v);
    }
  }
}

TEST(Train, SingleExampleOverfits) {
  const auto data = synthetic(1, 7);
  const std::vector<Instance> one{data[0]};
  for (Variant v : {Variant::lstm, Variant::td_lstm, Variant::tc_lstm, Variant::att_td_lstm}) {
    auto m = toy_model(v, one, 8, 8);
    TrainConfig cfg;
    cfg.variant = v;
    cfg.epochs = 200;
    cfg.learning_rate = 0.5;
    const auto enc = encode_all(one, m.vocab);
    const auto r = train(m, enc, {}, cfg);
    EXPECT_LT(r.log.epochs.back().mean_loss, 0.01) << to_string(v);
    EXPECT_LT(loss_only(r.model.params, r.model.embeddings, enc[0]), 0.01) << to_string(v);
  }
}

TEST(Train, DeterministicGivenSeed) {
  const auto data = synthetic(10, 9);
  auto m = toy_model(Variant::tc_lstm, data, 5, 9);
  const auto enc = encode_all(data, m.vocab);
  TrainConfig cfg;
  cfg.variant = Variant::tc_lstm;
  cfg.epochs = 3;
  cfg.seed = 77;
  const auto a = train(m, enc, enc, cfg);
  const auto b = train(m, enc, enc, cfg);
  ASSERT_EQ(a.log.epochs.size(), 3u);
  for (std::size_t e = 0; e < 3; ++e) {
    EXPECT_EQ(a.log.epochs[e].mean_loss, b.log.epochs[e].mean_loss);
    EXPECT_EQ(a.log.epochs[e].train_accuracy, b.log.epochs[e].train_accuracy);
    EXPECT_EQ(a.log.epochs[e].test_macro_f1, b.log.epochs[e].test_macro_f1);
  }
  EXPECT_EQ(serialize_model(a.model), serialize_model(b.model));
  cfg.seed = 78;
  EXPECT_NE(serialize_model(train(m, enc, enc, cfg).model), serialize_model(a.model));
}

TEST(Train, TwentyInstanceCorpusReachesFullTrainingAccuracy) {
  const auto data = synthetic(10, 10);
  ASSERT_EQ(data.size(), 20u);
  for (Variant v : {Variant::td_lstm, Variant::tc_lstm}) {
    auto m = toy_model(v, data, 10, 11);
    TrainConfig cfg;
    cfg.variant = v;
    cfg.epochs = 300;
    cfg.learning_rate = 0.05;
    const auto enc = encode_all(data, m.vocab);
    std::size_t reached = 0;
    train(m, enc, {}, cfg, [&](const EpochRecord& rec, const Model<double>&) {
      if (*rec.train_accuracy == 1.0) reached = rec.epoch;
      return reached == 0;
    });
    EXPECT_GT(reached, 0u) << to_string(v);
  }
}

TEST(Train, NonFiniteLossAborts) {
  const auto data = synthetic(3, 12);
  auto m = toy_model(Variant::td_lstm, data, 3, 12);
  m.params.softmax.b[0] = std::numeric_limits<double>::quiet_NaN();
  const auto enc = encode_all(data, m.vocab);
  TrainConfig cfg;
  try {
    train(m, enc, {}, cfg);
    FAIL();
  } catch (const NumericError& e) {
    EXPECT_NE(std::string(e.what()).find("epoch 1"), std::string::npos) << e.what();
  }
}

TEST(Train, ConfigValidation) {
  TrainConfig cfg;
  cfg.learning_rate = 0;
  EXPECT_THROW(cfg.validate(), ValidationError);
  cfg = {};
  cfg.epochs = 0;
  EXPECT_THROW(cfg.validate(), ValidationError);
  cfg = {};
  cfg.clip_threshold = -1;
  EXPECT_THROW(cfg.validate(), ValidationError);
  const auto data = synthetic(1, 1);
  EXPECT_THROW(train(toy_model(Variant::td_lstm, data, 2, 1), {}, {}, TrainConfig{}), ValidationError);
  EXPECT_EQ(parse_clip_mode("value"), ClipMode::value);
  EXPECT_THROW(parse_clip_mode("bogus"), ValidationError);
}

TEST(Synthetic, PairsShareSentenceAndDisagree) {
  const auto data = synthetic(100, 13);
  ASSERT_EQ(data.size(), 200u);
  for (std::size_t i = 0; i < data.size(); i += 2) {
    EXPECT_EQ(data[i].tokens, data[i + 1].tokens);
    EXPECT_NE(data[i].label, data[i + 1].label);
    EXPECT_NE(data[i].label, Polarity::neutral);
    EXPECT_NE(data[i].target_begin, data[i + 1].target_begin);
  }
}
