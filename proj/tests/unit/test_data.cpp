#include <gtest/gtest.h>

#include <sstream>

#include "tdlstm/data.hpp"
#include "tdlstm/random.hpp"

using namespace tdlstm;

namespace {

std::vector<std::string> words(const char* s) { return tokenize(s); }

}  // namespace

TEST(ParseCorpus, PaperTable3Row) {
  std::istringstream in(
      "i hate my $T$ look at my last tweet before the argh one that 's for you\nipod\n-1\n");
  const auto data = parse_corpus(in);
  ASSERT_EQ(data.size(), 1u);
  const auto& inst = data[0];
  EXPECT_EQ(inst.label, Polarity::negative);
  EXPECT_EQ(inst.gold_class(), 0u);
  EXPECT_EQ(inst.target_begin, 3u);
  EXPECT_EQ(inst.target_end, 4u);
  EXPECT_EQ(inst.tokens[3], "ipod");

  const auto s = split(inst);
  EXPECT_EQ(s.preceding, words("i hate my"));
  EXPECT_EQ(s.target, words("ipod"));
  EXPECT_EQ(s.following, words("look at my last tweet before the argh one that 's for you"));
}

TEST(ParseCorpus, MultipleRecordsLabelsAndCrlf) {
  std::istringstream in("$T$ rocks\r\nharry potter\r\n1\r\nmeh $T$\r\nx\r\n0\r\nugh $T$\r\ny\r\n+1\r\n\r\n");
  const auto data = parse_corpus(in);
  ASSERT_EQ(data.size(), 3u);
  EXPECT_EQ(data[0].tokens, words("harry potter rocks"));
  EXPECT_EQ(data[0].target_begin, 0u);
  EXPECT_EQ(data[0].target_end, 2u);
  EXPECT_EQ(data[1].label, Polarity::neutral);
  EXPECT_EQ(data[2].label, Polarity::positive);
}

TEST(ParseCorpus, InvalidLabelIsFormatErrorWithRecordIndex) {
  std::istringstream in("a $T$\nx\n1\nb $T$\ny\n2\n");
  try {
    parse_corpus(in, "f");
    FAIL();
  } catch (const FormatError& e) {
    EXPECT_NE(std::string(e.what()).find("record 1"), std::string::npos) << e.what();
  }
}

TEST(ParseCorpus, IncompleteRecordAndMissingPlaceholder) {
  std::istringstream a("a $T$\nx\n1\nb $T$\n");
  EXPECT_THROW(parse_corpus(a), FormatError);
  std::istringstream b("no placeholder here\nx\n1\n");
  EXPECT_THROW(parse_corpus(b), FormatError);
  std::istringstream c("a $T$\n   \n1\n");
  EXPECT_THROW(parse_corpus(c), FormatError);
  EXPECT_THROW(parse_corpus(std::string("/nonexistent/corpus.txt")), IoError);
}

TEST(MakeInstance, GluedAndRepeatedPlaceholders) {
  const auto inst = make_instance("#$T$'s new song , $T$ again", "taylor swift", Polarity::positive);
  EXPECT_EQ(inst.tokens, words("# taylor swift 's new song , taylor swift again"));
  EXPECT_EQ(inst.target_begin, 1u);
  EXPECT_EQ(inst.target_end, 3u);
}

TEST(Split, BoundariesAndReconstruction) {
  const auto start = split(make_instance("$T$ is great", "google", Polarity::positive));
  EXPECT_TRUE(start.preceding.empty());
  EXPECT_EQ(start.following, words("is great"));
  const auto end = split(make_instance("i love $T$", "google", Polarity::positive));
  EXPECT_TRUE(end.following.empty());

  Rng rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    std::string sentence;
    const auto pre = rng.below(4), fol = rng.below(4), tgt = 1 + rng.below(3);
    for (std::uint64_t i = 0; i < pre; ++i) sentence += "p" + std::to_string(i) + " ";
    sentence += "$T$";
    for (std::uint64_t i = 0; i < fol; ++i) sentence += " f" + std::to_string(i);
    std::string target;
    for (std::uint64_t i = 0; i < tgt; ++i) target += "t" + std::to_string(i) + " ";
    const auto inst = make_instance(sentence, target, Polarity::neutral);
    const auto s = split(inst);
    std::vector<std::string> joined = s.preceding;
    joined.insert(joined.end(), s.target.begin(), s.target.end());
    joined.insert(joined.end(), s.following.begin(), s.following.end());
    EXPECT_EQ(joined, inst.tokens);
    EXPECT_EQ(s.preceding.size(), pre);
    EXPECT_EQ(s.target.size(), tgt);
    EXPECT_EQ(s.following.size(), fol);
  }
}

TEST(WriteRecord, RoundTripsThroughParser) {
  const auto inst = make_instance("so $T$ today", "harry potter", Polarity::negative);
  std::ostringstream out;
  write_record(out, inst);
  std::istringstream in(out.str());
  const auto back = parse_corpus(in);
  ASSERT_EQ(back.size(), 1u);
  EXPECT_EQ(back[0].tokens, inst.tokens);
  EXPECT_EQ(back[0].target_begin, inst.target_begin);
  EXPECT_EQ(back[0].target_end, inst.target_end);
  EXPECT_EQ(back[0].label, inst.label);
}

TEST(ClassDistribution, Counts) {
  const auto mk = [](Polarity p) { return make_instance("$T$", "x", p); };
  const auto d = class_distribution({mk(Polarity::positive), mk(Polarity::positive), mk(Polarity::negative),
                                     mk(Polarity::neutral)});
  EXPECT_DOUBLE_EQ(d[class_index(Polarity::positive)], 0.5);
  EXPECT_DOUBLE_EQ(d[class_index(Polarity::negative)], 0.25);
  EXPECT_DOUBLE_EQ(d[class_index(Polarity::neutral)], 0.25);

  const auto all = class_distribution({mk(Polarity::neutral), mk(Polarity::neutral)});
  EXPECT_DOUBLE_EQ(all[kNeutralClass], 1.0);
  EXPECT_DOUBLE_EQ(all[0] + all[2], 0.0);
  EXPECT_THROW(class_distribution({}), ValidationError);
}

TEST(ClassMapping, FixedIndices) {
  EXPECT_EQ(class_index(Polarity::negative), 0u);
  EXPECT_EQ(class_index(Polarity::neutral), 1u);
  EXPECT_EQ(class_index(Polarity::positive), 2u);
  for (std::size_t c = 0; c < kNumClasses; ++c) EXPECT_EQ(class_index(polarity_of_class(c)), c);
}
