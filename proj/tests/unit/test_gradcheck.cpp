#include <gtest/gtest.h>

#include <algorithm>
#include <set>

#include "tdlstm/gradcheck.hpp"

using namespace tdlstm;

namespace {

ModelShape make_shape(Variant v, std::size_t d, Combine c = Combine::concat) {
  ModelShape s;
  s.variant = v;
  s.embedding_dim = d;
  s.hidden = d;
  s.combine = c;
  return s;
}

}  // namespace

class GradCheckAll : public ::testing::TestWithParam<std::tuple<Variant, std::size_t, std::size_t>> {};

TEST_P(GradCheckAll, AnalyticMatchesFiniteDifferences) {
  // len is the sentence length: target of 1 or 2 words, rest split around it,
  // then again with all context before and all context after the target.
  const auto [variant, d, len] = GetParam();
  const std::size_t target = len >= 3 ? 2 : 1;
  const std::size_t rest = len - target;
  for (std::size_t pre : {rest / 2, std::size_t{0}, rest}) {
    const auto c = make_gradcheck_case<double>(make_shape(variant, d), pre, target, rest - pre, 100 + d + len + pre);
    const auto r = gradient_check(c.params, c.table, c.instance);
    for (const auto& p : r.params) EXPECT_TRUE(p.pass) << p.name << " rel=" << p.max_rel_error << " pre=" << pre;
  }
}

INSTANTIATE_TEST_SUITE_P(Variants, GradCheckAll,
                         ::testing::Combine(::testing::Values(Variant::lstm, Variant::td_lstm, Variant::tc_lstm,
                                                              Variant::att_td_lstm),
                                            ::testing::Values<std::size_t>(2, 8),
                                            ::testing::Values<std::size_t>(1, 3, 10)),
                         [](const auto& info) {
                           std::string v(to_string(std::get<0>(info.param)));
                           std::replace(v.begin(), v.end(), '-', '_');
                           return v + "_d" +
                                  std::to_string(std::get<1>(info.param)) + "_len" +
                                  std::to_string(std::get<2>(info.param));
                         });

TEST(GradCheck, CombineModes) {
  for (Variant v : {Variant::td_lstm, Variant::tc_lstm, Variant::att_td_lstm}) {
    for (Combine cm : {Combine::concat, Combine::sum, Combine::mean}) {
      const auto c = make_gradcheck_case<double>(make_shape(v, 3, cm), 4, 2, 4, 7);
      EXPECT_TRUE(gradient_check(c.params, c.table, c.instance).pass()) << to_string(v) << " " << to_string(cm);
    }
  }
}

TEST(GradCheck, FrozenEmbeddingsAreNotChecked) {
  auto c = make_gradcheck_case<double>(make_shape(Variant::td_lstm, 3), 2, 1, 2, 8);
  c.table.trainable = false;
  const auto r = gradient_check(c.params, c.table, c.instance);
  EXPECT_TRUE(r.pass());
  for (const auto& p : r.params) EXPECT_NE(p.name, "embedding");
}

TEST(GradCheck, InjectedFaultIsDetected) {
  for (Variant v : {Variant::lstm, Variant::td_lstm, Variant::tc_lstm, Variant::att_td_lstm}) {
    const auto c = make_gradcheck_case<double>(make_shape(v, 4), 3, 1, 3, 9);
    GradCheckOptions opt;
    opt.inject_fault = true;
    EXPECT_FALSE(gradient_check(c.params, c.table, c.instance, opt).pass()) << to_string(v);
  }
}

TEST(GradCheck, EveryParameterReportedOnce) {
  const auto c = make_gradcheck_case<double>(make_shape(Variant::att_td_lstm, 3), 2, 1, 2, 10);
  const auto r = gradient_check(c.params, c.table, c.instance);
  std::set<std::string> names;
  for (const auto& p : r.params) EXPECT_TRUE(names.insert(p.name).second) << p.name;
  for (const auto& n : c.params.names()) EXPECT_EQ(names.count(n), 1u) << n;
  EXPECT_EQ(names.count("embedding"), 1u);
}

TEST(GradCheck, SixtyFourBitOracleAgreesWhereItCanResolve) {
  // Same check with the finite differences in double. Entries above 1e-6
  // are well inside the 64-bit oracle's resolution.
  const auto c = make_gradcheck_case<double>(make_shape(Variant::td_lstm, 4), 2, 1, 2, 11);
  GradCheckOptions plain;
  plain.extended_oracle = false;
  plain.floor = 1e-6;
  EXPECT_TRUE(gradient_check(c.params, c.table, c.instance, plain).pass());
}

TEST(GradCheck, RelativeErrorFloor) {
  EXPECT_EQ(relative_error(0.0, 0.0), 0.0);
  EXPECT_NEAR(relative_error(1.0, 1.1), 0.1 / 1.1, 1e-15);
}
