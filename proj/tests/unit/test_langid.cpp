#include <gtest/gtest.h>

#include <random>
#include <set>
#include <sstream>

#include "test_support.hpp"

using namespace gigafilter;
using namespace testing_support;

namespace {

Errc code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no Error thrown";
  return Errc::Io;
}

const LanguageProfile& profile(const std::string& lang) {
  for (const auto& p : fixture_profiles())
    if (p.lang() == lang) return p;
  throw std::runtime_error("no profile " + lang);
}

std::vector<LanguageProfile> subset(std::initializer_list<const char*> langs) {
  std::vector<LanguageProfile> out;
  for (const char* l : langs) out.push_back(profile(l));
  return out;
}

double average_ll(const LanguageProfile& p, const std::vector<std::string>& texts) {
  double ll = 0;
  std::size_t n = 0;
  for (const auto& t : texts) {
    std::size_t k = 0;
    ll += p.log_likelihood(t, k);
    n += k;
  }
  return ll / static_cast<double>(n);
}

}  // namespace

TEST(TrainProfile, IsDeterministic) {
  const auto samples = read_lines(data_path("langid/cs_train.txt"));
  const auto a = train_profile(samples, "cs");
  const auto b = train_profile(samples, "cs");
  EXPECT_TRUE(a == b);
  std::ostringstream sa, sb;
  a.save(sa);
  b.save(sb);
  EXPECT_EQ(sa.str(), sb.str());
}

TEST(TrainProfile, RequiresEnoughText) {
  EXPECT_EQ(code_of([] { train_profile(std::vector<std::string>{"krátký text"}, "cs"); }), Errc::InsufficientData);
  EXPECT_EQ(code_of([] { train_profile(std::vector<std::string>{}, "cs"); }), Errc::InsufficientData);
  EXPECT_EQ(code_of([] { train_profile(std::vector<std::string>{std::string(999, 'a')}, "cs"); }),
            Errc::InsufficientData);
  train_profile(std::vector<std::string>{std::string(1000, 'a')}, "cs");
}

TEST(TrainProfile, ConditionalsSumToOnePerContext) {
  for (const auto& p : fixture_profiles()) {
    const auto& alpha = p.alphabet();
    double uni = 0;
    for (char32_t c : alpha) uni += p.order_probability(std::u32string{c});
    EXPECT_NEAR(uni, 1.0, 1e-6) << p.lang();
    // Every bigram context, and a sample of trigram contexts (seen and unseen).
    for (char32_t b : alpha) {
      double s = 0;
      for (char32_t c : alpha) s += p.order_probability(std::u32string{b, c});
      EXPECT_NEAR(s, 1.0, 1e-6) << p.lang();
    }
    std::mt19937_64 rng(1);
    for (int i = 0; i < 300; ++i) {
      const char32_t a = alpha[rng() % alpha.size()], b = alpha[rng() % alpha.size()];
      double s = 0, mixed = 0;
      for (char32_t c : alpha) {
        s += p.order_probability(std::u32string{a, b, c});
        mixed += p.conditional(a, b, c);
      }
      EXPECT_NEAR(s, 1.0, 1e-6) << p.lang();
      EXPECT_NEAR(mixed, 1.0, 1e-6) << p.lang();
    }
    // Contexts observed in training.
    for (const auto& [ctx, lp] : p.context_log_unseen()) {
      if (ctx.size() != 2) continue;
      double s = 0;
      for (char32_t c : alpha) s += p.order_probability(ctx + c);
      EXPECT_NEAR(s, 1.0, 1e-6) << p.lang();
    }
  }
}

TEST(TrainProfile, SingleCharacterAlphabet) {
  const auto p = train_profile(std::vector<std::string>{std::string(2000, 'a')}, "aa");
  EXPECT_EQ(p.alphabet().size(), 3u);  // a, boundary, unknown
  EXPECT_NEAR(p.order_probability(U"aaa"), 1.0, 1e-3);
  EXPECT_NEAR(p.conditional('a', 'a', 'a'), 1.0, 1e-3);
}

TEST(TrainProfile, CzechProfilePrefersHeldOutCzech) {
  const auto cs = heldout("cs");
  EXPECT_GT(average_ll(profile("cs"), cs), average_ll(profile("en"), cs));
  const auto en = heldout("en");
  EXPECT_GT(average_ll(profile("en"), en), average_ll(profile("cs"), en));
}

TEST(Profile, SaveLoadRoundTripsExactly) {
  for (const auto& p : fixture_profiles()) {
    std::stringstream buf;
    p.save(buf);
    const auto loaded = LanguageProfile::load(buf);
    EXPECT_TRUE(loaded == p);
    std::ostringstream again;
    loaded.save(again);
    EXPECT_EQ(again.str(), buf.str());
    const std::string text = "Příliš žluťoučký kůň úpěl ďábelské ódy a quick brown fox";
    std::size_t n1 = 0, n2 = 0;
    EXPECT_EQ(p.log_likelihood(text, n1), loaded.log_likelihood(text, n2));
  }
}

TEST(Profile, LoadRejectsMalformedInput) {
  for (const char* bad : {"", "nonsense\n", "gigafilter-langid-profile\t1\nlang\tcs\n",
                          "gigafilter-langid-profile\t1\nlang\tcs\nsmoothing\t0.1\nweights\t0.1\t0.3\t0.6\ng\tzz\t-1\n",
                          "gigafilter-langid-profile\t1\nlang\tcs\nsmoothing\t0.1\nweights\t0.2\t0.2\t0.6\n",
                          "gigafilter-langid-profile\t1\nlang\tcs\nsmoothing\t0.1\nweights\t0.1\t0.3\t0.6\ng\t61\t0.5\n",
                          "gigafilter-langid-profile\t1\nlang\tcs\nsmoothing\t0.1\nweights\t0.1\t0.3\t0.6\ng\t61\t-1\n"}) {
    std::istringstream in(bad);
    EXPECT_EQ(code_of([&] { LanguageProfile::load(in); }), Errc::MalformedProfile) << bad;
  }
}

TEST(Classify, SingleProfileGivesCertainty) {
  const auto one = subset({"en"});
  const auto d = classify("Žluťoučký kůň", one);
  ASSERT_EQ(d.entries().size(), 1u);
  EXPECT_EQ(d.probability("en"), 1.0);
}

TEST(Classify, CzechPangram) {
  const auto ps = subset({"cs", "en"});
  EXPECT_EQ(classify("Žluťoučký kůň úpěl ďábelské ódy", ps).argmax(), "cs");
}

TEST(Classify, DuplicatingTextKeepsDistribution) {
  const auto& ps = fixture_profiles();
  for (const auto& lang : fixture_languages()) {
    for (const auto& t : heldout(lang)) {
      const auto a = classify(t, ps);
      const auto b = classify(t + " " + t, ps);
      for (const auto& [code, p] : a.entries()) EXPECT_NEAR(p, b.probability(code), 1e-6);
    }
  }
}

TEST(Classify, OutputIsAValidDistribution) {
  std::mt19937_64 rng(2);
  const auto& ps = fixture_profiles();
  for (int i = 0; i < 500; ++i) {
    const auto t = random_text(rng, 12);
    const auto d = classify(t, ps);
    double sum = 0;
    for (const auto& [code, p] : d.entries()) {
      EXPECT_GE(p, 0.0);
      EXPECT_LE(p, 1.0);
      sum += p;
    }
    EXPECT_NEAR(sum, 1.0, 1e-9);
  }
}

TEST(Classify, Errors) {
  EXPECT_EQ(code_of([] { classify("text", std::span<const LanguageProfile>{}); }), Errc::EmptyProfileSet);
  const auto ps = subset({"cs", "en"});
  EXPECT_EQ(code_of([&] { classify("", ps); }), Errc::EmptyText);
  EXPECT_EQ(code_of([&] { classify("  　 ", ps); }), Errc::EmptyText);
  EXPECT_EQ(code_of([] { NgramLanguageIdentifier(subset({"cs", "cs"})); }), Errc::MalformedConfig);
  EXPECT_EQ(code_of([] { NgramLanguageIdentifier(std::vector<LanguageProfile>{}); }), Errc::EmptyProfileSet);
}

TEST(Classify, HeldOutAccuracyPerLanguage) {
  const auto& id = fixture_identifier();
  for (const auto& lang : fixture_languages()) {
    std::size_t ok = 0;
    const auto texts = heldout(lang);
    ASSERT_GE(texts.size(), 100u);
    for (const auto& t : texts) {
      EXPECT_GE(text::count_words(t), 10u) << t;
      ok += id.classify(t).argmax() == lang;
    }
    EXPECT_GE(static_cast<double>(ok) / texts.size(), 0.9) << lang;
  }
}

TEST(ScaledLangScore, Examples) {
  EXPECT_EQ(scaled_lang_score(LangDistribution({{"cs", 0.9}, {"en", 0.1}}), "cs"), 1.0);
  EXPECT_NEAR(scaled_lang_score(LangDistribution({{"sk", 0.6}, {"cs", 0.3}, {"en", 0.1}}), "cs"), 0.5, 1e-12);
  EXPECT_EQ(scaled_lang_score(LangDistribution({{"cs", 0.5}, {"en", 0.5}}), "en"), 1.0);
  EXPECT_EQ(scaled_lang_score(LangDistribution({{"cs", 0.5}, {"en", 0.5}}), "de"), 0.0);
}

TEST(ScaledLangScore, DependsOnlyOnRatios) {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(0.01, 1.0);
  for (int i = 0; i < 1000; ++i) {
    std::vector<double> w{u(rng), u(rng), u(rng)};
    const double scale = u(rng) * 10;
    auto dist = [&](double k) {
      double z = 0;
      for (double x : w) z += x * k;
      return LangDistribution({{"cs", w[0] * k / z}, {"en", w[1] * k / z}, {"sk", w[2] * k / z}});
    };
    EXPECT_NEAR(scaled_lang_score(dist(1.0), "cs"), scaled_lang_score(dist(scale), "cs"), 1e-12);
    const auto d = dist(1.0);
    EXPECT_EQ(scaled_lang_score(d, d.argmax()), 1.0);
  }
}

TEST(SideLanguage, DetectsGermanCzechSide) {
  const auto ps = subset({"cs", "de", "en"});
  const NgramLanguageIdentifier id(ps);
  const auto de = heldout("de");
  const auto cs = heldout("cs");
  const auto en = heldout("en");
  std::vector<SentencePair> pairs;
  for (int i = 0; i < 5; ++i) pairs.push_back({PairId{"t", "d", 0, std::uint64_t(i + 1)}, de[i], en[i], {}});
  EXPECT_EQ(side_language(Document(pairs), Side::Cs, id), "de");
  EXPECT_EQ(side_language(Document(pairs), Side::En, id), "en");
  for (int i = 0; i < 5; ++i) pairs[i].cs = cs[i];
  EXPECT_EQ(side_language(Document(pairs), Side::Cs, id), "cs");
  const NgramLanguageIdentifier only_cs(subset({"cs"}));
  EXPECT_EQ(side_language(Document(pairs), Side::En, only_cs), "cs");
}
