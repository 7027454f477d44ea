#pragma once

// Sentence-level filters: pure per-pair predicates.

#include <absl/container/flat_hash_set.h>

#include <cmath>
#include <cstddef>
#include <string>
#include <string_view>

#include "gigafilter/corpus_model.hpp"
#include "gigafilter/error.hpp"
#include "gigafilter/langid.hpp"
#include "gigafilter/text.hpp"
#include "gigafilter/tsv_io.hpp"
#include "gigafilter/verdict.hpp"

namespace gigafilter {

/// Drop when either side has more than `min_words` words and either scaled
/// language score is below `min_score`.
struct LangScoreRule {
  std::size_t min_words = 10;
  double min_score = 0.5;
};

struct SentFilterConfig {
  std::size_t max_words = 200;
  std::size_t max_chars = 1600;
  LangScoreRule lang_rule;
  double adq_threshold = 0.02;
  /// Raw classifier probability; 0 disables the pre-filter.
  double prefilter_min_prob = 0.5;
  std::string expected_cs = "cs";
  std::string expected_en = "en";

  void validate() const {
    if (max_words == 0 || max_chars == 0) throw Error(Errc::MalformedConfig, "length limits must be positive");
    if (lang_rule.min_words == 0) throw Error(Errc::MalformedConfig, "language-score word guard must be positive");
    if (!(lang_rule.min_score > 0.0 && lang_rule.min_score <= 1.0))
      throw Error(Errc::MalformedConfig, "language-score threshold must be in (0, 1]");
    if (!(adq_threshold > 0.0 && adq_threshold < 1.0))
      throw Error(Errc::MalformedConfig, "adq threshold must be in (0, 1)");
    if (!(prefilter_min_prob >= 0.0 && prefilter_min_prob <= 1.0))
      throw Error(Errc::MalformedConfig, "pre-filter probability must be in [0, 1]");
    if (expected_cs.empty() || expected_en.empty())
      throw Error(Errc::MalformedConfig, "expected language codes must be non-empty");
  }
};

/// Reasons: `cs_words=N`, `cs_chars=N`, `en_words=N`, `en_chars=N`.
inline Verdict filter_length(const SentencePair& pair, const SentFilterConfig& cfg) {
  for (const auto& [side, s] : {std::pair{"cs", std::string_view(pair.cs)}, std::pair{"en", std::string_view(pair.en)}}) {
    if (const auto w = text::count_words(s); w > cfg.max_words)
      return Verdict::drop(std::string(side) + "_words=" + std::to_string(w));
    if (const auto c = text::count_code_points(s); c > cfg.max_chars)
      return Verdict::drop(std::string(side) + "_chars=" + std::to_string(c));
  }
  return Verdict::kept();
}

/// Reasons: `cs_lang_score=X`, `en_lang_score=X`.
inline Verdict filter_lang_score(const SentencePair& pair, const SentFilterConfig& cfg) {
  if (!pair.scores.cs_lang || !pair.scores.en_lang)
    throw Error(Errc::UnscoredPair, format_pair_id(pair.id) + " has no language scores");
  const auto guard = cfg.lang_rule.min_words;
  if (text::count_words(pair.cs) <= guard && text::count_words(pair.en) <= guard) return Verdict::kept();
  if (*pair.scores.cs_lang < cfg.lang_rule.min_score)
    return Verdict::drop("cs_lang_score=" + format_score(*pair.scores.cs_lang));
  if (*pair.scores.en_lang < cfg.lang_rule.min_score)
    return Verdict::drop("en_lang_score=" + format_score(*pair.scores.en_lang));
  return Verdict::kept();
}

/// Reason: `adq_score=X`.
inline Verdict filter_adq(const SentencePair& pair, const SentFilterConfig& cfg) {
  if (!pair.scores.adq) throw Error(Errc::UnscoredPair, format_pair_id(pair.id) + " has no adq score");
  if (*pair.scores.adq < cfg.adq_threshold) return Verdict::drop("adq_score=" + format_score(*pair.scores.adq));
  return Verdict::kept();
}

/// Raw-probability language check with no length guard.
/// Reasons: `cs_prob=X`, `en_prob=X`.
inline Verdict prefilter_strict(const SentencePair& pair, const LanguageIdentifier& id, const SentFilterConfig& cfg) {
  try {
    if (const double p = id.classify(pair.cs).probability(cfg.expected_cs); p < cfg.prefilter_min_prob)
      return Verdict::drop("cs_prob=" + format_score(p));
    if (const double p = id.classify(pair.en).probability(cfg.expected_en); p < cfg.prefilter_min_prob)
      return Verdict::drop("en_prob=" + format_score(p));
  } catch (const Error& e) {
    throw e.with_context(format_pair_id(pair.id));
  }
  return Verdict::kept();
}

/// Exact (cs, en) text set of a reference corpus. Read-only once built.
class CorpusSubtractor {
 public:
  void add(const SentencePair& p) { keys_.insert(key(p)); }
  void add(const Document& d) {
    for (const auto& p : d) add(p);
  }

  bool contains(const SentencePair& p) const { return keys_.contains(key(p)); }

  /// Reason: `in_reference`.
  Verdict check(const SentencePair& p) const { return contains(p) ? Verdict::drop("in_reference") : Verdict::kept(); }

  std::size_t size() const noexcept { return keys_.size(); }

 private:
  static std::string key(const SentencePair& p) {
    std::string k;
    k.reserve(p.cs.size() + p.en.size() + 1);
    k += p.cs;
    k += '\t';
    k += p.en;
    return k;
  }

  absl::flat_hash_set<std::string> keys_;
};

}  // namespace gigafilter
