#pragma once

// Character n-gram language identification.
//
// Each whitespace-delimited word is scored as its code points followed by a
// word-boundary symbol, with the two-symbol context starting at the boundary.
// Three additively smoothed models (unigram, bigram, trigram) over the
// training alphabet plus an unknown-character bucket are mixed with fixed
// weights. A text's score under a profile is the average log-probability per
// symbol; the distribution over languages is the softmax of those averages.

#include <absl/container/flat_hash_map.h>

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <istream>
#include <map>
#include <memory>
#include <ostream>
#include <set>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "gigafilter/corpus_model.hpp"
#include "gigafilter/error.hpp"
#include "gigafilter/text.hpp"

namespace gigafilter {

/// Word boundary: context padding and end-of-word symbol.
inline constexpr char32_t kBoundarySymbol = 0x110000;
/// Stands in for any character outside a profile's alphabet.
inline constexpr char32_t kUnknownSymbol = 0x110001;

inline constexpr double kDefaultSmoothing = 0.1;
/// Mixture weights for the unigram, bigram and trigram estimates.
inline constexpr std::array<double, 3> kInterpolationWeights = {0.1, 0.3, 0.6};

namespace detail {

inline std::uint64_t pack(char32_t a) { return a; }
inline std::uint64_t pack(char32_t a, char32_t b) { return (std::uint64_t{a} << 21) | b; }
inline std::uint64_t pack(char32_t a, char32_t b, char32_t c) {
  return (std::uint64_t{a} << 42) | (std::uint64_t{b} << 21) | c;
}

inline std::string format_double(double v) {
  std::array<char, 64> buf{};
  const auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), ptr);
}

inline bool parse_double(std::string_view s, double& out) {
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc{} && ptr == s.data() + s.size() && !s.empty();
}

inline std::string format_symbols(std::u32string_view symbols) {
  std::string out;
  for (std::size_t i = 0; i < symbols.size(); ++i) {
    if (i > 0) out += ',';
    std::array<char, 16> buf{};
    const auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), std::uint32_t{symbols[i]}, 16);
    out.append(buf.data(), ptr);
  }
  return out;
}

inline std::u32string parse_symbols(std::string_view s) {
  std::u32string out;
  for (auto part : text::split(s, ',')) {
    std::uint32_t cp = 0;
    const auto [ptr, ec] = std::from_chars(part.data(), part.data() + part.size(), cp, 16);
    if (ec != std::errc{} || ptr != part.data() + part.size() || part.empty() || cp > kUnknownSymbol)
      throw Error(Errc::MalformedProfile, "bad symbol '" + std::string(part) + "'");
    out.push_back(static_cast<char32_t>(cp));
  }
  return out;
}

// Calls fn(prev2, prev1, symbol) for every scored symbol of `s`, with
// characters already mapped through `map`.
template <typename Map, typename Fn>
void for_each_event(std::string_view s, Map&& map, Fn&& fn) {
  text::for_each_word(s, [&](std::string_view word) {
    char32_t prev2 = kBoundarySymbol, prev1 = kBoundarySymbol;
    for (std::size_t pos = 0; pos < word.size();) {
      const char32_t cp = map(text::next_code_point(word, pos));
      fn(prev2, prev1, cp);
      prev2 = prev1;
      prev1 = cp;
    }
    fn(prev2, prev1, kBoundarySymbol);
  });
}

}  // namespace detail

class LanguageProfile {
 public:
  /// `ngram_log_probs` holds log P(last | rest) for every observed n-gram,
  /// n = 1..3 (all alphabet symbols appear as unigrams). `context_log_unseen`
  /// holds, per observed 1- or 2-symbol context, the log-probability of a
  /// continuation never seen after it.
  LanguageProfile(std::string lang, double smoothing_mass, std::map<std::u32string, double> ngram_log_probs,
                  std::map<std::u32string, double> context_log_unseen)
      : lang_(std::move(lang)),
        smoothing_mass_(smoothing_mass),
        ngram_log_probs_(std::move(ngram_log_probs)),
        context_log_unseen_(std::move(context_log_unseen)) {
    build_tables();
  }

  const std::string& lang() const noexcept { return lang_; }
  double smoothing_mass() const noexcept { return smoothing_mass_; }
  const std::map<std::u32string, double>& ngram_log_probs() const noexcept { return ngram_log_probs_; }
  const std::map<std::u32string, double>& context_log_unseen() const noexcept { return context_log_unseen_; }

  /// Alphabet including the boundary and unknown symbols.
  const std::vector<char32_t>& alphabet() const noexcept { return alphabet_; }

  char32_t map_symbol(char32_t cp) const {
    return unigram_.contains(detail::pack(cp)) ? cp : kUnknownSymbol;
  }

  /// Smoothed single-order estimate P(ngram.back() | ngram.prefix) for
  /// n = 1..3; symbols must already be mapped into the alphabet.
  double order_probability(std::u32string_view ngram) const {
    switch (ngram.size()) {
      case 1: return lookup1(ngram[0]);
      case 2: return lookup2(ngram[0], ngram[1]);
      case 3: return lookup3(ngram[0], ngram[1], ngram[2]);
      default: throw Error(Errc::MalformedProfile, "n-gram order must be 1..3");
    }
  }

  /// Interpolated P(c | a b) on mapped symbols.
  double conditional(char32_t a, char32_t b, char32_t c) const {
    return kInterpolationWeights[0] * lookup1(c) + kInterpolationWeights[1] * lookup2(b, c) +
           kInterpolationWeights[2] * lookup3(a, b, c);
  }

  /// Sum of log-probabilities over every symbol of `s`; `symbols` receives
  /// the number of scored symbols.
  double log_likelihood(std::string_view s, std::size_t& symbols) const {
    double total = 0.0;
    symbols = 0;
    detail::for_each_event(
        s, [this](char32_t cp) { return map_symbol(cp); },
        [&](char32_t a, char32_t b, char32_t c) {
          total += std::log(conditional(a, b, c));
          ++symbols;
        });
    return total;
  }

  /// Text dump, exact round trip through load().
  void save(std::ostream& out) const {
    out << "gigafilter-langid-profile\t1\n";
    out << "lang\t" << lang_ << '\n';
    out << "smoothing\t" << detail::format_double(smoothing_mass_) << '\n';
    out << "weights";
    for (double w : kInterpolationWeights) out << '\t' << detail::format_double(w);
    out << '\n';
    for (const auto& [g, lp] : ngram_log_probs_)
      out << "g\t" << detail::format_symbols(g) << '\t' << detail::format_double(lp) << '\n';
    for (const auto& [c, lp] : context_log_unseen_)
      out << "c\t" << detail::format_symbols(c) << '\t' << detail::format_double(lp) << '\n';
    if (!out) throw Error(Errc::Io, "failed to write profile");
  }

  static LanguageProfile load(std::istream& in) {
    std::string line;
    std::uint64_t line_no = 0;
    auto next = [&]() -> bool {
      if (!std::getline(in, line)) return false;
      ++line_no;
      return true;
    };
    auto fail = [&](const std::string& msg) { return Error(Errc::MalformedProfile, msg, line_no); };
    if (!next() || line != "gigafilter-langid-profile\t1") throw fail("missing profile header");
    std::string lang;
    double smoothing = -1.0;
    std::map<std::u32string, double> grams, contexts;
    bool weights_seen = false;
    while (next()) {
      if (line.empty()) continue;
      const auto f = text::split(line, '\t');
      if (f[0] == "lang" && f.size() == 2) {
        lang = std::string(f[1]);
      } else if (f[0] == "smoothing" && f.size() == 2) {
        if (!detail::parse_double(f[1], smoothing)) throw fail("bad smoothing value");
      } else if (f[0] == "weights" && f.size() == 4) {
        for (std::size_t i = 0; i < 3; ++i) {
          double w = 0;
          if (!detail::parse_double(f[i + 1], w) || w != kInterpolationWeights[i])
            throw fail("unsupported interpolation weights");
        }
        weights_seen = true;
      } else if ((f[0] == "g" || f[0] == "c") && f.size() == 3) {
        double lp = 0;
        if (!detail::parse_double(f[2], lp) || !(lp <= 0.0)) throw fail("bad log-probability");
        std::u32string key;
        try {
          key = detail::parse_symbols(f[1]);
        } catch (const Error& e) {
          throw e.at_line(line_no);
        }
        auto& target = f[0] == "g" ? grams : contexts;
        if (key.empty() || key.size() > (f[0] == "g" ? 3u : 2u)) throw fail("bad n-gram length");
        if (!target.emplace(std::move(key), lp).second) throw fail("duplicate n-gram");
      } else {
        throw fail("unrecognized profile line");
      }
    }
    if (lang.empty() || smoothing <= 0.0 || !weights_seen || grams.empty()) throw fail("incomplete profile");
    try {
      return LanguageProfile(std::move(lang), smoothing, std::move(grams), std::move(contexts));
    } catch (const Error& e) {
      throw Error(Errc::MalformedProfile, e.detail());
    }
  }

  friend bool operator==(const LanguageProfile& a, const LanguageProfile& b) {
    return a.lang_ == b.lang_ && a.smoothing_mass_ == b.smoothing_mass_ &&
           a.ngram_log_probs_ == b.ngram_log_probs_ && a.context_log_unseen_ == b.context_log_unseen_;
  }

 private:
  void build_tables() {
    for (const auto& [g, lp] : ngram_log_probs_) {
      const double p = std::exp(lp);
      switch (g.size()) {
        case 1:
          unigram_[detail::pack(g[0])] = p;
          alphabet_.push_back(g[0]);
          break;
        case 2: bigram_[detail::pack(g[0], g[1])] = p; break;
        case 3: trigram_[detail::pack(g[0], g[1], g[2])] = p; break;
        default: throw Error(Errc::MalformedProfile, "n-gram order must be 1..3");
      }
    }
    if (!unigram_.contains(detail::pack(kBoundarySymbol)) || !unigram_.contains(detail::pack(kUnknownSymbol)))
      throw Error(Errc::MalformedProfile, "alphabet lacks the boundary or unknown symbol");
    for (const auto& [c, lp] : context_log_unseen_) {
      const double p = std::exp(lp);
      if (c.size() == 1) {
        unseen2_[detail::pack(c[0])] = p;
      } else if (c.size() == 2) {
        unseen3_[detail::pack(c[0], c[1])] = p;
      } else {
        throw Error(Errc::MalformedProfile, "context length must be 1 or 2");
      }
    }
    uniform_ = 1.0 / static_cast<double>(alphabet_.size());
  }

  double lookup1(char32_t c) const {
    const auto it = unigram_.find(detail::pack(c));
    return it == unigram_.end() ? 0.0 : it->second;
  }
  double lookup2(char32_t b, char32_t c) const {
    if (const auto it = bigram_.find(detail::pack(b, c)); it != bigram_.end()) return it->second;
    if (const auto it = unseen2_.find(detail::pack(b)); it != unseen2_.end()) return it->second;
    return uniform_;
  }
  double lookup3(char32_t a, char32_t b, char32_t c) const {
    if (const auto it = trigram_.find(detail::pack(a, b, c)); it != trigram_.end()) return it->second;
    if (const auto it = unseen3_.find(detail::pack(a, b)); it != unseen3_.end()) return it->second;
    return uniform_;
  }

  std::string lang_;
  double smoothing_mass_;
  std::map<std::u32string, double> ngram_log_probs_;
  std::map<std::u32string, double> context_log_unseen_;

  std::vector<char32_t> alphabet_;
  absl::flat_hash_map<std::uint64_t, double> unigram_, bigram_, trigram_, unseen2_, unseen3_;
  double uniform_ = 0.0;
};

/// Trains a profile from sample texts. Deterministic for a given input.
inline LanguageProfile train_profile(std::span<const std::string> samples, const std::string& lang,
                                     double smoothing = kDefaultSmoothing) {
  if (lang.empty() || lang.find_first_of("\t\n ") != std::string::npos)
    throw Error(Errc::MalformedConfig, "invalid language code '" + lang + "'");
  if (!(smoothing > 0.0)) throw Error(Errc::MalformedConfig, "smoothing mass must be positive");
  std::size_t chars = 0;
  for (const auto& s : samples) {
    if (text::find_invalid_utf8(s)) throw Error(Errc::InvalidUtf8, "training sample is not valid UTF-8");
    chars += text::count_code_points(s);
  }
  if (samples.empty() || chars < 1000)
    throw Error(Errc::InsufficientData,
                "need at least 1000 characters of training text for '" + lang + "', got " + std::to_string(chars));

  std::map<char32_t, double> uni;
  std::map<std::u32string, double> bi, tri, ctx1, ctx2;
  double total = 0;
  for (const auto& s : samples) {
    detail::for_each_event(
        s, [](char32_t cp) { return cp; },
        [&](char32_t a, char32_t b, char32_t c) {
          uni[c] += 1;
          bi[std::u32string{b, c}] += 1;
          tri[std::u32string{a, b, c}] += 1;
          ctx1[std::u32string{b}] += 1;
          ctx2[std::u32string{a, b}] += 1;
          total += 1;
        });
  }
  uni.try_emplace(kBoundarySymbol, 0.0);
  uni.try_emplace(kUnknownSymbol, 0.0);
  const double alpha = smoothing;
  const double k = static_cast<double>(uni.size());

  std::map<std::u32string, double> grams, unseen;
  for (const auto& [c, n] : uni) grams[std::u32string{c}] = std::log((n + alpha) / (total + alpha * k));
  for (const auto& [g, n] : bi) grams[g] = std::log((n + alpha) / (ctx1[g.substr(0, 1)] + alpha * k));
  for (const auto& [g, n] : tri) grams[g] = std::log((n + alpha) / (ctx2[g.substr(0, 2)] + alpha * k));
  for (const auto& [c, n] : ctx1) unseen[c] = std::log(alpha / (n + alpha * k));
  for (const auto& [c, n] : ctx2) unseen[c] = std::log(alpha / (n + alpha * k));
  return LanguageProfile(lang, smoothing, std::move(grams), std::move(unseen));
}

/// Pluggable source of p(lang = .) for a text.
class LanguageIdentifier {
 public:
  virtual ~LanguageIdentifier() = default;
  virtual LangDistribution classify(std::string_view text) const = 0;
};

/// Softmax over per-symbol average log-likelihoods.
inline LangDistribution classify(std::string_view text, std::span<const LanguageProfile> profiles) {
  if (profiles.empty()) throw Error(Errc::EmptyProfileSet, "no language profiles");
  std::vector<double> avg(profiles.size());
  for (std::size_t i = 0; i < profiles.size(); ++i) {
    std::size_t symbols = 0;
    const double ll = profiles[i].log_likelihood(text, symbols);
    if (symbols == 0) throw Error(Errc::EmptyText, "text has no words to classify");
    avg[i] = ll / static_cast<double>(symbols);
  }
  const double top = *std::max_element(avg.begin(), avg.end());
  double z = 0.0;
  for (double& a : avg) {
    a = std::exp(a - top);
    z += a;
  }
  std::vector<LangDistribution::Entry> entries;
  entries.reserve(profiles.size());
  for (std::size_t i = 0; i < profiles.size(); ++i) entries.emplace_back(profiles[i].lang(), avg[i] / z);
  return LangDistribution(std::move(entries));
}

class NgramLanguageIdentifier final : public LanguageIdentifier {
 public:
  explicit NgramLanguageIdentifier(std::vector<LanguageProfile> profiles) : profiles_(std::move(profiles)) {
    if (profiles_.empty()) throw Error(Errc::EmptyProfileSet, "no language profiles");
    std::set<std::string> codes;
    for (const auto& p : profiles_)
      if (!codes.insert(p.lang()).second) throw Error(Errc::MalformedConfig, "duplicate profile for '" + p.lang() + "'");
  }

  LangDistribution classify(std::string_view text) const override { return gigafilter::classify(text, profiles_); }

  const std::vector<LanguageProfile>& profiles() const noexcept { return profiles_; }

 private:
  std::vector<LanguageProfile> profiles_;
};

/// p(target) / p(most probable language); 1 exactly when target attains the
/// maximum, 0 when target is absent.
inline double scaled_lang_score(const LangDistribution& dist, std::string_view target) {
  const double top = dist.top().second;
  const double p = dist.probability(target);
  if (p >= top) return 1.0;
  return p / top;
}

enum class Side { Cs, En };

inline std::string_view side_text(const SentencePair& p, Side side) { return side == Side::Cs ? p.cs : p.en; }

/// Most probable language of one side of a document, classified as the
/// side's sentences joined by single spaces.
inline std::string side_language(const Document& doc, Side side, const LanguageIdentifier& id) {
  std::string joined;
  for (const auto& p : doc) {
    if (!joined.empty()) joined += ' ';
    joined += side_text(p, side);
  }
  return id.classify(joined).argmax();
}

}  // namespace gigafilter
