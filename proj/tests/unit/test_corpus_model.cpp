#include <gtest/gtest.h>

#include <random>

#include "test_support.hpp"

using namespace gigafilter;
using namespace testing_support;

namespace {

SentencePair pair(const std::string& id, std::string cs = "Ahoj", std::string en = "Hello") {
  return {parse_pair_id(id), std::move(cs), std::move(en), {}};
}

Errc code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no Error thrown";
  return Errc::Io;
}

}  // namespace

TEST(PairId, ParsesLiteralId) {
  const auto id = parse_pair_id("paracrawl-b16598886-f0-s1");
  EXPECT_EQ(id.source, "paracrawl");
  EXPECT_EQ(id.doc, "b16598886");
  EXPECT_EQ(id.file, 0u);
  EXPECT_EQ(id.sent, 1u);
  EXPECT_EQ(format_pair_id(id), "paracrawl-b16598886-f0-s1");
}

TEST(PairId, ParsesDottedSourceAndLargeIndices) {
  const auto id = parse_pair_id("news_commentary.v14-ab.C_9-f18446744073709551615-s42");
  EXPECT_EQ(id.source, "news_commentary.v14");
  EXPECT_EQ(id.doc, "ab.C_9");
  EXPECT_EQ(id.file, 18446744073709551615ull);
  EXPECT_EQ(id.sent, 42u);
}

TEST(PairId, RejectsMalformedIds) {
  for (const char* bad : {"", "paracrawl", "paracrawl-b1-f0", "paracrawl-b1-f0-s0", "paracrawl-b1-f01-s1",
                          "paracrawl-b1-f0-s01", "Paracrawl-b1-f0-s1", "para crawl-b1-f0-s1", "para-crawl-b1-f0-s1",
                          "paracrawl-b-1-f0-s1", "paracrawl--f0-s1", "paracrawl-b1-0-s1", "paracrawl-b1-f0-1",
                          "paracrawl-b1-f-s1", "paracrawl-b1-f0-s", "paracrawl-b1-f0-s+1", "paracrawl-b1-f0-s1-",
                          "paracrawl-b1-f18446744073709551616-s1", "paracrawl-b1-fx-s1", "paracrawl-b\xC3\xA1-f0-s1"}) {
    EXPECT_EQ(code_of([&] { parse_pair_id(bad); }), Errc::MalformedId) << bad;
  }
}

TEST(PairId, RoundTripsRandomIds) {
  std::mt19937_64 rng(7);
  for (int i = 0; i < 1000; ++i) {
    PairId id{random_source(rng), random_doc_name(rng), random_index(rng), std::max<std::uint64_t>(1, random_index(rng))};
    EXPECT_EQ(parse_pair_id(format_pair_id(id)), id);
  }
}

TEST(PairId, OrdersBySourceDocFileSent) {
  EXPECT_LT(parse_pair_id("a-b-f0-s2"), parse_pair_id("a-b-f1-s1"));
  EXPECT_LT(parse_pair_id("a-b-f3-s9"), parse_pair_id("a-c-f0-s1"));
  EXPECT_LT(parse_pair_id("a-b-f0-s2"), parse_pair_id("a-b-f0-s10"));
}

TEST(DocumentKey, NamesDocument) {
  EXPECT_EQ(DocumentKey::of(parse_pair_id("europarl-d7-f3-s15")).str(), "europarl-d7-f3");
}

TEST(Document, AcceptsOrderedSameKeyPairs) {
  Document d({pair("a-b-f0-s1"), pair("a-b-f0-s2"), pair("a-b-f0-s9")});
  EXPECT_EQ(d.size(), 3u);
  EXPECT_EQ(d.key().str(), "a-b-f0");
}

TEST(Document, RejectsMixedKeys) {
  EXPECT_EQ(code_of([] { Document({pair("a-b-f0-s1"), pair("a-b-f1-s2")}); }), Errc::MixedDocumentBlock);
  EXPECT_EQ(code_of([] { Document({pair("a-b-f0-s1"), pair("a-c-f0-s2")}); }), Errc::MixedDocumentBlock);
  EXPECT_EQ(code_of([] { Document(std::vector<SentencePair>{}); }), Errc::MixedDocumentBlock);
}

TEST(Document, RejectsUnorderedOrRepeatedSentences) {
  EXPECT_EQ(code_of([] { Document({pair("a-b-f0-s2"), pair("a-b-f0-s1")}); }), Errc::UnorderedSentences);
  EXPECT_EQ(code_of([] { Document({pair("a-b-f0-s2"), pair("a-b-f0-s2")}); }), Errc::UnorderedSentences);
}

TEST(Document, AllowsLongDocuments) {
  std::vector<SentencePair> pairs;
  for (int i = 1; i <= 40; ++i) pairs.push_back(pair("synth-x-f0-s" + std::to_string(i)));
  EXPECT_EQ(Document(pairs).size(), 40u);
}

TEST(Document, ValidatesTextAndScores) {
  EXPECT_EQ(code_of([] { Document({pair("a-b-f0-s1", "", "x")}); }), Errc::InvalidText);
  EXPECT_EQ(code_of([] { Document({pair("a-b-f0-s1", "a\tb", "x")}); }), Errc::InvalidText);
  EXPECT_EQ(code_of([] { Document({pair("a-b-f0-s1", "x", "a\nb")}); }), Errc::InvalidText);
  EXPECT_EQ(code_of([] { Document({pair("a-b-f0-s1", "x", "a\rb")}); }), Errc::InvalidText);
  Document d({pair("a-b-f0-s1")});
  EXPECT_EQ(code_of([&] { d.set_scores(0, {1.5, 1.0, 1.0}); }), Errc::ScoreOutOfRange);
  EXPECT_EQ(code_of([&] { d.set_scores(0, {-0.1, 1.0, 1.0}); }), Errc::ScoreOutOfRange);
  EXPECT_EQ(code_of([&] { d.set_scores(0, {std::nan(""), 1.0, 1.0}); }), Errc::ScoreOutOfRange);
  d.set_scores(0, {0.0, 1.0, std::nullopt});
  EXPECT_FALSE(d[0].scores.complete());
}

TEST(Document, RelabelsSource) {
  Document d({pair("a-b-f0-s1"), pair("a-b-f0-s2")});
  d.relabel_source("backtrans");
  EXPECT_EQ(format_pair_id(d[1].id), "backtrans-b-f0-s2");
  EXPECT_EQ(d.key().source, "backtrans");
  EXPECT_EQ(code_of([&] { d.relabel_source("Bad-Source"); }), Errc::InvalidSource);
}

TEST(ScoreTriple, SyntheticIsAllOnes) {
  const auto s = ScoreTriple::synthetic();
  EXPECT_EQ(*s.adq, 1.0);
  EXPECT_EQ(*s.cs_lang, 1.0);
  EXPECT_EQ(*s.en_lang, 1.0);
  EXPECT_TRUE(s.complete());
  EXPECT_TRUE(ScoreTriple{}.empty());
}

TEST(CrossEntropyPair, RejectsNegativeOrNonFinite) {
  EXPECT_EQ(code_of([] { validate_cross_entropy({-1e-12, 0.0}); }), Errc::NegativeInput);
  EXPECT_EQ(code_of([] { validate_cross_entropy({0.0, INFINITY}); }), Errc::NegativeInput);
  EXPECT_EQ(code_of([] { validate_cross_entropy({std::nan(""), 0.0}); }), Errc::NegativeInput);
  validate_cross_entropy({0.0, 3.5});
}

TEST(LangDistribution, ValidatesAndBreaksTies) {
  LangDistribution d({{"en", 0.3}, {"cs", 0.3}, {"de", 0.4}});
  EXPECT_EQ(d.argmax(), "de");
  EXPECT_DOUBLE_EQ(d.probability("cs"), 0.3);
  EXPECT_EQ(d.probability("xx"), 0.0);
  LangDistribution tie({{"sk", 0.5}, {"cs", 0.5}});
  EXPECT_EQ(tie.argmax(), "cs");
  EXPECT_EQ(code_of([] { LangDistribution({}); }), Errc::EmptyProfileSet);
  EXPECT_EQ(code_of([] { LangDistribution({{"cs", 0.5}, {"cs", 0.5}}); }), Errc::MalformedProfile);
  EXPECT_EQ(code_of([] { LangDistribution({{"cs", 0.5}, {"en", 0.6}}); }), Errc::ScoreOutOfRange);
  EXPECT_EQ(code_of([] { LangDistribution({{"cs", 1.2}, {"en", -0.2}}); }), Errc::ScoreOutOfRange);
}

TEST(Errors, CarryLineAndClass) {
  const Error e = Error(Errc::MalformedLine, "bad").at_line(12);
  EXPECT_EQ(e.line(), 12u);
  EXPECT_STREQ(e.what(), "MalformedLine at line 12: bad");
  EXPECT_EQ(classify_errc(Errc::MalformedId), ErrorClass::Parse);
  EXPECT_EQ(classify_errc(Errc::MalformedConfig), ErrorClass::Config);
  EXPECT_EQ(classify_errc(Errc::UnscoredPair), ErrorClass::Stage);
}

TEST(Text, SplitsWordsOnUnicodeWhitespace) {
  EXPECT_EQ(text::count_words("Ahoj světe ."), 3u);
  EXPECT_EQ(text::count_words("  a b　c  "), 3u);
  EXPECT_EQ(text::count_words("   "), 0u);
  EXPECT_EQ(text::count_words(""), 0u);
  const auto w = text::split_words("Žluťoučký  kůň");
  ASSERT_EQ(w.size(), 2u);
  EXPECT_EQ(w[0], "Žluťoučký");
  EXPECT_EQ(w[1], "kůň");
}

TEST(Text, CountsCodePoints) {
  EXPECT_EQ(text::count_code_points("kůň"), 3u);
  EXPECT_EQ(text::count_code_points("😀a"), 2u);
}

TEST(Text, FindsInvalidUtf8) {
  EXPECT_FALSE(text::find_invalid_utf8("Příliš žluťoučký kůň 😀"));
  EXPECT_EQ(text::find_invalid_utf8("ab\xC3"), 2u);
  EXPECT_EQ(text::find_invalid_utf8("a\xC0\xAF"), 1u);          // overlong
  EXPECT_EQ(text::find_invalid_utf8("a\xED\xA0\x80"), 1u);      // surrogate
  EXPECT_EQ(text::find_invalid_utf8("\xF4\x90\x80\x80"), 0u);   // above U+10FFFF
  EXPECT_EQ(text::find_invalid_utf8("ok\x80"), 2u);
}

TEST(Text, DecodeEncodeRoundTrip) {
  const std::string s = "Příliš 語 😀 ß";
  EXPECT_EQ(text::encode(text::decode(s)), s);
}
