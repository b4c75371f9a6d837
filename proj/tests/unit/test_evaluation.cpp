#include <gtest/gtest.h>

#include "tdlstm/evaluation.hpp"
#include "tdlstm/random.hpp"

using namespace tdlstm;

TEST(Evaluate, PerfectPredictions) {
  const auto r = evaluate({0, 1, 2, 2}, {0, 1, 2, 2});
  EXPECT_EQ(r.accuracy, 1.0);
  EXPECT_EQ(r.macro_f1, 1.0);
  EXPECT_EQ(r.errors, 0u);
  EXPECT_EQ(r.neutral_error_fraction, 0.0);
}

TEST(Evaluate, HandCountedExample) {
  const auto r = evaluate({0, 1, 1, 2}, {0, 0, 1, 2});
  EXPECT_DOUBLE_EQ(r.accuracy, 0.75);
  EXPECT_DOUBLE_EQ(r.per_class[0].f1, 2.0 / 3.0);
  EXPECT_DOUBLE_EQ(r.per_class[1].f1, 2.0 / 3.0);
  EXPECT_DOUBLE_EQ(r.per_class[2].f1, 1.0);
  EXPECT_DOUBLE_EQ(r.macro_f1, 7.0 / 9.0);
  EXPECT_EQ(r.confusion[0][1], 1u);
  EXPECT_EQ(r.errors, 1u);
  EXPECT_EQ(r.neutral_error_fraction, 1.0);
}

TEST(Evaluate, SingleClassPredictor) {
  const auto r = evaluate({1, 1, 1, 1, 1, 1}, {0, 1, 2, 0, 1, 2});
  EXPECT_DOUBLE_EQ(r.per_class[1].f1, 0.5);
  EXPECT_EQ(r.per_class[0].f1, 0.0);
  EXPECT_EQ(r.per_class[2].f1, 0.0);
  EXPECT_DOUBLE_EQ(r.macro_f1, 1.0 / 6.0);
}

TEST(Evaluate, InputErrors) {
  EXPECT_THROW(evaluate({0}, {0, 1}), ValidationError);
  EXPECT_THROW(evaluate({}, {}), ValidationError);
  EXPECT_THROW(evaluate({3}, {0}), ValidationError);
}

// Brute-force oracle: per class, count tp / fp / fn directly.
TEST(Evaluate, MatchesBruteForceOnRandomCases) {
  Rng rng(99);
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n = 1 + rng.below(40);
    std::vector<std::size_t> p(n), g(n);
    for (std::size_t i = 0; i < n; ++i) {
      p[i] = rng.below(3);
      g[i] = rng.below(3);
    }
    const auto r = evaluate(p, g);
    double correct = 0, f1 = 0, neutral = 0, wrong = 0;
    for (std::size_t i = 0; i < n; ++i) {
      correct += p[i] == g[i];
      if (p[i] != g[i]) {
        ++wrong;
        neutral += (p[i] == 1 || g[i] == 1);
      }
    }
    for (std::size_t c = 0; c < 3; ++c) {
      double tp = 0, fp = 0, fn = 0;
      for (std::size_t i = 0; i < n; ++i) {
        tp += p[i] == c && g[i] == c;
        fp += p[i] == c && g[i] != c;
        fn += p[i] != c && g[i] == c;
      }
      f1 += (2 * tp + fp + fn) == 0 ? 0 : 2 * tp / (2 * tp + fp + fn);
    }
    EXPECT_EQ(r.accuracy, correct / n);
    EXPECT_NEAR(r.macro_f1, f1 / 3, 1e-12);
    EXPECT_EQ(r.errors, static_cast<std::size_t>(wrong));
    EXPECT_EQ(r.neutral_error_fraction, wrong == 0 ? 0.0 : neutral / wrong);

    // Invariance under a joint permutation.
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    rng.shuffle(order);
    std::vector<std::size_t> p2(n), g2(n);
    for (std::size_t i = 0; i < n; ++i) {
      p2[i] = p[order[i]];
      g2[i] = g[order[i]];
    }
    const auto r2 = evaluate(p2, g2);
    EXPECT_EQ(r2.accuracy, r.accuracy);
    EXPECT_EQ(r2.confusion, r.confusion);
    EXPECT_NEAR(r2.macro_f1, r.macro_f1, 1e-15);
  }
}

TEST(ErrorCases, ListsMisclassifiedAndDiffsAgainstReference) {
  std::vector<Instance> data;
  for (Polarity p : {Polarity::negative, Polarity::neutral, Polarity::positive, Polarity::positive})
    data.push_back(make_instance("$T$ x", "t", p));
  const std::vector<std::size_t> preds{0, 2, 1, 2};
  const auto errs = error_cases(data, preds);
  ASSERT_EQ(errs.size(), 2u);
  EXPECT_EQ(errs[0].index, 1u);
  EXPECT_EQ(errs[0].gold, 1u);
  EXPECT_EQ(errs[0].predicted, 2u);
  EXPECT_EQ(errs[1].index, 2u);

  const std::vector<std::size_t> reference{0, 1, 0, 2};  // right on 1, wrong on 2
  const auto fixed = error_cases(data, preds, &reference);
  ASSERT_EQ(fixed.size(), 1u);
  EXPECT_EQ(fixed[0].index, 1u);
  EXPECT_THROW(error_cases(data, {0}), ValidationError);
}

TEST(FormatReport, ContainsMetricsAndConfusion) {
  const auto text = format_report(evaluate({0, 1, 1, 2}, {0, 0, 1, 2}));
  EXPECT_NE(text.find("accuracy            0.7500"), std::string::npos) << text;
  EXPECT_NE(text.find("confusion"), std::string::npos);
  EXPECT_NE(text.find("neutral"), std::string::npos);
}
