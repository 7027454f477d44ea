#include <gtest/gtest.h>

#include <boost/multiprecision/cpp_int.hpp>
#include <cmath>
#include <random>
#include <set>
#include <sstream>

#include "test_support.hpp"

using namespace gigafilter;
using namespace testing_support;

namespace {

Errc code_of(const std::function<void()>& fn, std::uint64_t* line = nullptr) {
  try {
    fn();
  } catch (const Error& e) {
    if (line) *line = e.line();
    return e.code();
  }
  ADD_FAILURE() << "no Error thrown";
  return Errc::Io;
}

// Exact decimal rounding of a double to six places, ties to even, computed
// from the double's exact binary value with big integers.
std::string six_decimals_oracle(double v) {
  using boost::multiprecision::cpp_int;
  int exp = 0;
  const double mant = std::frexp(v, &exp);  // v = mant * 2^exp, mant in [0.5, 1)
  const auto m = static_cast<std::uint64_t>(std::ldexp(mant, 53));
  exp -= 53;  // v = m * 2^exp
  cpp_int num = cpp_int(m) * 1000000;
  cpp_int den = 1;
  if (exp >= 0) num <<= exp;
  else den <<= -exp;
  cpp_int q = num / den;
  const cpp_int r = num % den;
  if (r * 2 > den || (r * 2 == den && (q & 1) != 0)) ++q;
  std::string digits = q.convert_to<std::string>();
  while (digits.size() < 7) digits.insert(digits.begin(), '0');
  return digits.substr(0, digits.size() - 6) + "." + digits.substr(digits.size() - 6);
}

std::string doc_line(const std::string& id, const std::string& scores = "0.5\t1\t1") {
  return id + "\t" + scores + "\tAhoj světe .\tHello world .\n";
}

}  // namespace

TEST(FormatScore, FixedSixDecimals) {
  EXPECT_EQ(format_score(1.0), "1.000000");
  EXPECT_EQ(format_score(0.0), "0.000000");
  EXPECT_EQ(format_score(std::exp(-4.0)), "0.018316");
  EXPECT_EQ(format_score(0.02), "0.020000");
  EXPECT_EQ(format_score(0.9), "0.900000");
}

TEST(FormatScore, MatchesExactDecimalRoundingOracle) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 20000; ++i) {
    double v = u(rng);
    if (i % 4 == 0) v = std::round(v * 2e6) / 2e6;  // near six-decimal half-way points
    if (v == 0.0) continue;
    EXPECT_EQ(format_score(v), six_decimals_oracle(v)) << v;
  }
  // Exact binary ties: k / 2^7 has seven decimals ending in 5 when k is odd.
  for (int k = 1; k < 128; k += 2) {
    const double v = k / 128.0;
    EXPECT_EQ(format_score(v), six_decimals_oracle(v)) << v;
  }
  EXPECT_EQ(six_decimals_oracle(0.0078125), "0.007812");  // 0.0078125, tie goes to even
  EXPECT_EQ(format_score(0.0078125), "0.007812");
  EXPECT_EQ(format_score(0.0234375), "0.023438");
}

TEST(ParseScore, AcceptsAnyDecimalInUnitInterval) {
  EXPECT_EQ(*parse_score("1"), 1.0);
  EXPECT_EQ(*parse_score("0.9"), 0.9);
  EXPECT_EQ(*parse_score("0.018316"), 0.018316);
  EXPECT_EQ(*parse_score("1e-3"), 0.001);
  EXPECT_FALSE(parse_score("-").has_value());
  for (const char* bad : {"1.5", "-0.1", "", "abc", "0.5x", "nan", "inf", " 0.5"})
    EXPECT_EQ(code_of([&] { parse_score(bad); }), Errc::ScoreOutOfRange) << bad;
}

TEST(ParseCorpus, SingleLineCorpus) {
  const auto docs = parse_corpus("paracrawl-b16598886-f0-s1\t0.9\t1\t1\tAhoj světe .\tHello world .\n\n");
  ASSERT_EQ(docs.size(), 1u);
  ASSERT_EQ(docs[0].size(), 1u);
  EXPECT_EQ(*docs[0][0].scores.adq, 0.9);
  EXPECT_EQ(docs[0][0].cs, "Ahoj světe .");
  EXPECT_EQ(docs[0][0].en, "Hello world .");
}

TEST(ParseCorpus, BlankLineSeparatesDocuments) {
  const auto docs = parse_corpus(doc_line("a-b-f0-s1") + doc_line("a-b-f0-s2") + "\n" + doc_line("a-b-f1-s1"));
  ASSERT_EQ(docs.size(), 2u);
  EXPECT_EQ(docs[0].size(), 2u);
  EXPECT_EQ(docs[1].key().str(), "a-b-f1");
}

TEST(ParseCorpus, RunsOfBlankLinesAreOneSeparator) {
  const auto docs = parse_corpus("\n\n" + doc_line("a-b-f0-s1") + "\n\n\n" + doc_line("a-b-f1-s1") + "\n\n");
  EXPECT_EQ(docs.size(), 2u);
}

TEST(ParseCorpus, SameKeyAfterSeparatorIsANewDocument) {
  const auto docs = parse_corpus(doc_line("a-b-f0-s1") + "\n" + doc_line("a-b-f0-s2"));
  EXPECT_EQ(docs.size(), 2u);
}

TEST(ParseCorpus, ErrorsCarryLineNumbers) {
  std::uint64_t line = 0;
  EXPECT_EQ(code_of([&] { parse_corpus(doc_line("a-b-f0-s1") + "a-b-f0-s2\t1\t1\t1\tonly five\n"); }, &line),
            Errc::MalformedLine);
  EXPECT_EQ(line, 2u);
  EXPECT_EQ(code_of([&] { parse_corpus(doc_line("a-b-f0-s1") + "\n" + doc_line("a-b-f0-s01")); }, &line),
            Errc::MalformedId);
  EXPECT_EQ(line, 3u);
  EXPECT_EQ(code_of([&] { parse_corpus(doc_line("a-b-f0-s1", "1.2\t1\t1")); }, &line), Errc::ScoreOutOfRange);
  EXPECT_EQ(line, 1u);
  EXPECT_EQ(code_of([&] { parse_corpus(doc_line("a-b-f0-s1") + doc_line("a-b-f1-s2")); }, &line),
            Errc::MixedDocumentBlock);
  EXPECT_EQ(line, 2u);
  EXPECT_EQ(code_of([&] { parse_corpus(doc_line("a-b-f0-s2") + doc_line("a-b-f0-s1")); }, &line),
            Errc::UnorderedSentences);
  EXPECT_EQ(line, 2u);
  EXPECT_EQ(code_of([&] { parse_corpus(doc_line("a-b-f0-s1") + "a-b-f0-s2\t1\t1\t1\t\t\n"); }, &line),
            Errc::InvalidText);
  EXPECT_EQ(line, 2u);
}

TEST(ParseCorpus, InvalidUtf8ReportsByteOffset) {
  const std::string first = doc_line("a-b-f0-s1");
  try {
    parse_corpus(first + "a-b-f0-s2\t1\t1\t1\tbad\xFF\tx\n");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::InvalidUtf8);
    EXPECT_EQ(e.line(), 2u);
    const std::size_t offset = first.size() + std::string("a-b-f0-s2\t1\t1\t1\tbad").size();
    EXPECT_NE(std::string(e.what()).find("byte offset " + std::to_string(offset)), std::string::npos) << e.what();
  }
}

TEST(WriteCorpus, ExactBytes) {
  std::vector<SentencePair> p1{{parse_pair_id("paracrawl-b16598886-f0-s1"), "Ahoj světe .", "Hello world .",
                                ScoreTriple::synthetic()}};
  std::vector<SentencePair> p2{{parse_pair_id("paracrawl-b16598886-f1-s1"), "Kůň", "Horse", {std::exp(-4.0), 0.5, 1.0}}};
  const std::vector<Document> docs{Document(p1), Document(p2)};
  EXPECT_EQ(write_corpus(docs),
            "paracrawl-b16598886-f0-s1\t1.000000\t1.000000\t1.000000\tAhoj světe .\tHello world .\n"
            "\n"
            "paracrawl-b16598886-f1-s1\t0.018316\t0.500000\t1.000000\tKůň\tHorse\n");
  EXPECT_EQ(write_corpus({}), "");
}

TEST(WriteCorpus, RequiresScoresUnlessAllowed) {
  std::vector<SentencePair> p{{parse_pair_id("a-b-f0-s1"), "x", "y", {0.5, std::nullopt, 1.0}}};
  const std::vector<Document> docs{Document(p)};
  EXPECT_EQ(code_of([&] { write_corpus(docs); }), Errc::UnscoredPair);
  EXPECT_EQ(write_corpus(docs, true), "a-b-f0-s1\t0.500000\t-\t1.000000\tx\ty\n");
  EXPECT_EQ(write_corpus(parse_corpus(write_corpus(docs, true)), true), write_corpus(docs, true));
}

TEST(RoundTrip, WriteThenParseIsIdentity) {
  std::mt19937_64 rng(3);
  for (int i = 0; i < 200; ++i) {
    const auto docs = random_corpus(rng, 12, i % 2 == 1);
    const auto text = write_corpus(docs, true);
    EXPECT_EQ(parse_corpus(text), docs);
    EXPECT_EQ(write_corpus(parse_corpus(text), true), text);
  }
}

TEST(RoundTrip, ParseThenWriteIsIdentityOnCanonicalFiles) {
  std::mt19937_64 rng(5);
  for (int i = 0; i < 100; ++i) {
    const auto canonical = write_corpus(random_corpus(rng, 10));
    EXPECT_EQ(write_corpus(parse_corpus(canonical)), canonical);
  }
}

TEST(RoundTrip, ScoreQuantizationIsIdempotent) {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 5000; ++i) {
    const auto once = format_score(u(rng));
    EXPECT_EQ(format_score(*parse_score(once)), once);
  }
}

TEST(Reader, StreamsOneDocumentAtATime) {
  std::istringstream in(doc_line("a-b-f0-s1") + "\n" + doc_line("a-b-f1-s1") + "\n" + doc_line("a-c-f0-s1"));
  CorpusReader reader(in);
  ASSERT_TRUE(reader.next());
  EXPECT_EQ(reader.line_number(), 2u);
  ASSERT_TRUE(reader.next());
  ASSERT_TRUE(reader.next());
  EXPECT_FALSE(reader.next());
}

// --- raw bitext, segmentation, IDs ---------------------------------------

namespace {

RawBitext raw_of(std::size_t n, std::vector<std::size_t> breaks = {}) {
  RawBitext raw;
  for (std::size_t i = 0; i < n; ++i) {
    raw.cs_lines.push_back("cs " + std::to_string(i));
    raw.en_lines.push_back("en " + std::to_string(i));
  }
  raw.doc_breaks = std::move(breaks);
  return raw;
}

std::vector<std::size_t> sizes(const std::vector<Segment>& segs) {
  std::vector<std::size_t> out;
  for (const auto& s : segs) out.push_back(s.count);
  return out;
}

}  // namespace

TEST(Segment, ThirtyOneLines) {
  EXPECT_EQ(sizes(segment_documents(raw_of(31))), (std::vector<std::size_t>{15, 15, 1}));
}

TEST(Segment, FifteenLinesIsOneFile) {
  const auto segs = segment_documents(raw_of(15));
  ASSERT_EQ(segs.size(), 1u);
  EXPECT_EQ(segs[0].file_index, 0u);
}

TEST(Segment, FiftyNineLinesIsFourFiles) { EXPECT_EQ(segment_documents(raw_of(59)).size(), 4u); }

TEST(Segment, PartitionPropertyOverLengthsAndBreaks) {
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t n = rng() % 120;
    const std::size_t max_len = 1 + rng() % 20;
    std::set<std::size_t> b;
    for (std::size_t k = rng() % 6; k > 0 && n > 0; --k) b.insert(rng() % n);
    auto raw = raw_of(n, {b.begin(), b.end()});
    const auto segs = segment_documents(raw, max_len);
    std::size_t next_line = 0;
    for (std::size_t i = 0; i < segs.size(); ++i) {
      const auto& s = segs[i];
      EXPECT_GT(s.count, 0u);
      EXPECT_EQ(s.first_line, next_line);
      next_line += s.count;
      const bool last_of_doc = i + 1 == segs.size() || segs[i + 1].doc_index != s.doc_index;
      if (!last_of_doc) { EXPECT_EQ(s.count, max_len); }
      if (i > 0 && segs[i - 1].doc_index == s.doc_index) EXPECT_EQ(s.file_index, segs[i - 1].file_index + 1);
      else EXPECT_EQ(s.file_index, 0u);
    }
    EXPECT_EQ(next_line, n);
  }
}

TEST(Segment, RejectsZeroMaxLenAndMismatch) {
  EXPECT_EQ(code_of([] { segment_documents(raw_of(3), 0); }), Errc::MalformedConfig);
  auto raw = raw_of(3);
  raw.en_lines.pop_back();
  EXPECT_EQ(code_of([&] { segment_documents(raw); }), Errc::LengthMismatch);
}

TEST(AssignIds, NumbersDocumentsFilesAndSentences) {
  const auto raw = raw_of(20, {0, 17});
  const auto segs = segment_documents(raw);
  const auto docs = assign_ids("europarl", raw, segs);
  ASSERT_EQ(docs.size(), 3u);
  EXPECT_EQ(format_pair_id(docs[0][0].id), "europarl-d0-f0-s1");
  EXPECT_EQ(format_pair_id(docs[1][0].id), "europarl-d0-f1-s1");
  EXPECT_EQ(format_pair_id(docs[1][1].id), "europarl-d0-f1-s2");
  EXPECT_EQ(format_pair_id(docs[2][2].id), "europarl-d1-f0-s3");
  EXPECT_EQ(docs[2][2].cs, "cs 19");
  EXPECT_EQ(code_of([&] { assign_ids("Euro-parl", raw, segs); }), Errc::InvalidSource);
}

TEST(AssignIds, IdsArePairwiseDistinct) {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 1 + rng() % 200;
    std::set<std::size_t> b;
    for (std::size_t k = rng() % 10; k > 0; --k) b.insert(rng() % n);
    const auto raw = raw_of(n, {b.begin(), b.end()});
    std::set<std::string> ids;
    std::size_t count = 0;
    for (const auto& d : assign_ids("src", raw, segment_documents(raw, 1 + rng() % 16)))
      for (const auto& p : d) {
        ids.insert(format_pair_id(p.id));
        ++count;
      }
    EXPECT_EQ(ids.size(), count);
    EXPECT_EQ(count, n);
  }
}

TEST(ReadRawBitext, BlankLinesAndBreakFile) {
  std::istringstream cs("a1\na2\n\nb1\nb2\nb3\nb4\n");
  std::istringstream en("A1\nA2\n\nB1\nB2\nB3\nB4\n");
  std::istringstream br("5\tspeaker_2\n");
  const auto raw = read_raw_bitext(cs, en, &br);
  EXPECT_EQ(raw.cs_lines.size(), 6u);
  EXPECT_EQ(raw.doc_breaks, (std::vector<std::size_t>{0, 2, 4}));
  EXPECT_EQ(raw.doc_names, (std::vector<std::string>{"", "", "speaker_2"}));
  const auto docs = assign_ids("ep", raw, segment_documents(raw));
  ASSERT_EQ(docs.size(), 3u);
  EXPECT_EQ(format_pair_id(docs[1][0].id), "ep-d1-f0-s1");
  EXPECT_EQ(format_pair_id(docs[2][1].id), "ep-speaker_2-f0-s2");
  EXPECT_EQ(docs[2][1].en, "B4");
}

TEST(ReadRawBitext, Errors) {
  std::uint64_t line = 0;
  {
    std::istringstream cs("a\nb\n"), en("A\n");
    EXPECT_EQ(code_of([&] { read_raw_bitext(cs, en); }, &line), Errc::LengthMismatch);
    EXPECT_EQ(line, 2u);
  }
  {
    std::istringstream cs("a\n\n"), en("A\nB\n");
    EXPECT_EQ(code_of([&] { read_raw_bitext(cs, en); }, &line), Errc::InvalidText);
    EXPECT_EQ(line, 2u);
  }
  {
    std::istringstream cs("a\nb\xC3\n"), en("A\nB\n");
    EXPECT_EQ(code_of([&] { read_raw_bitext(cs, en); }, &line), Errc::InvalidUtf8);
    EXPECT_EQ(line, 2u);
  }
  {
    std::istringstream cs("a\nb\n"), en("A\nB\n"), br("x\n");
    EXPECT_EQ(code_of([&] { read_raw_bitext(cs, en, &br); }), Errc::MalformedLine);
  }
  {
    std::istringstream cs("a\nb\n"), en("A\nB\n"), br("0\tdup\n1\tdup\n");
    const auto raw = read_raw_bitext(cs, en, &br);
    EXPECT_EQ(code_of([&] { assign_ids("s", raw, segment_documents(raw)); }), Errc::MalformedId);
  }
}
