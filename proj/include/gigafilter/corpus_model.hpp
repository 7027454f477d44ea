#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "gigafilter/error.hpp"

namespace gigafilter {

inline bool is_valid_source(std::string_view s) {
  return !s.empty() && std::all_of(s.begin(), s.end(), [](char c) {
    return (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '_' || c == '.';
  });
}

inline bool is_valid_doc_name(std::string_view s) {
  return !s.empty() && std::all_of(s.begin(), s.end(), [](char c) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '_' ||
           c == '.';
  });
}

/// Identifies one sentence pair: `<source>-<doc>-f<file>-s<sent>`.
struct PairId {
  std::string source;
  std::string doc;
  std::uint64_t file = 0;
  std::uint64_t sent = 1;

  friend auto operator<=>(const PairId&, const PairId&) = default;
};

/// The (source, doc, file) triple shared by all pairs of a document.
struct DocumentKey {
  std::string source;
  std::string doc;
  std::uint64_t file = 0;

  friend auto operator<=>(const DocumentKey&, const DocumentKey&) = default;

  static DocumentKey of(const PairId& id) { return {id.source, id.doc, id.file}; }

  /// `<source>-<doc>-f<file>`, the document's name in reports.
  std::string str() const { return source + "-" + doc + "-f" + std::to_string(file); }
};

namespace detail {

// Decimal index without sign or leading zeros ("0" itself is fine).
inline std::optional<std::uint64_t> parse_index(std::string_view digits) {
  if (digits.empty() || (digits.size() > 1 && digits[0] == '0')) return std::nullopt;
  std::uint64_t value = 0;
  const auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), value);
  if (ec != std::errc{} || ptr != digits.data() + digits.size()) return std::nullopt;
  return value;
}

}  // namespace detail

inline void validate_pair_id(const PairId& id) {
  if (!is_valid_source(id.source))
    throw Error(Errc::MalformedId, "invalid source component '" + id.source + "'");
  if (!is_valid_doc_name(id.doc))
    throw Error(Errc::MalformedId, "invalid document component '" + id.doc + "'");
  if (id.sent == 0) throw Error(Errc::MalformedId, "sentence index must be positive");
}

inline std::string format_pair_id(const PairId& id) {
  std::string out;
  out.reserve(id.source.size() + id.doc.size() + 24);
  out += id.source;
  out += '-';
  out += id.doc;
  out += "-f";
  out += std::to_string(id.file);
  out += "-s";
  out += std::to_string(id.sent);
  return out;
}

/// Inverse of format_pair_id. Components are read right to left: `s<n>`,
/// `f<n>`, then the source and the document name, neither containing `-`.
inline PairId parse_pair_id(std::string_view text) {
  std::vector<std::string_view> parts;
  std::size_t start = 0;
  while (true) {
    const auto dash = text.find('-', start);
    parts.push_back(text.substr(start, dash == std::string_view::npos ? dash : dash - start));
    if (dash == std::string_view::npos) break;
    start = dash + 1;
  }
  const std::string shown(text);
  if (parts.size() != 4)
    throw Error(Errc::MalformedId, "expected 4 dash-separated components in '" + shown + "', got " +
                                       std::to_string(parts.size()));
  const auto sent_part = parts[3];
  const auto file_part = parts[2];
  if (sent_part.empty() || sent_part[0] != 's')
    throw Error(Errc::MalformedId, "sentence component must start with 's' in '" + shown + "'");
  if (file_part.empty() || file_part[0] != 'f')
    throw Error(Errc::MalformedId, "file component must start with 'f' in '" + shown + "'");
  const auto sent = detail::parse_index(sent_part.substr(1));
  const auto file = detail::parse_index(file_part.substr(1));
  if (!sent || !file) throw Error(Errc::MalformedId, "non-numeric index in '" + shown + "'");
  if (*sent == 0) throw Error(Errc::MalformedId, "sentence index must be positive in '" + shown + "'");
  PairId id{std::string(parts[0]), std::string(parts[1]), *file, *sent};
  validate_pair_id(id);
  return id;
}

/// adq, cs_lang and en_lang scores. A field may be absent until the stage
/// that computes it has run; every present value lies in [0, 1].
struct ScoreTriple {
  std::optional<double> adq;
  std::optional<double> cs_lang;
  std::optional<double> en_lang;

  static ScoreTriple synthetic() { return {1.0, 1.0, 1.0}; }
  bool complete() const { return adq && cs_lang && en_lang; }
  bool empty() const { return !adq && !cs_lang && !en_lang; }

  friend bool operator==(const ScoreTriple&, const ScoreTriple&) = default;
};

inline bool is_unit_score(double v) { return std::isfinite(v) && v >= 0.0 && v <= 1.0; }

inline void validate_scores(const ScoreTriple& s) {
  for (const auto* v : {&s.adq, &s.cs_lang, &s.en_lang}) {
    if (*v && !is_unit_score(**v))
      throw Error(Errc::ScoreOutOfRange, "score " + std::to_string(**v) + " outside [0, 1]");
  }
}

/// Sentence text must be non-empty and free of tabs and line breaks.
inline void validate_sentence_text(std::string_view s, const char* side) {
  if (s.empty()) throw Error(Errc::InvalidText, std::string(side) + " sentence is empty");
  if (s.find_first_of("\t\n\r") != std::string_view::npos)
    throw Error(Errc::InvalidText, std::string(side) + " sentence contains a tab or line break");
}

struct SentencePair {
  PairId id;
  std::string cs;
  std::string en;
  ScoreTriple scores;

  friend bool operator==(const SentencePair&, const SentencePair&) = default;
};

inline void validate_pair(const SentencePair& p) {
  validate_pair_id(p.id);
  validate_sentence_text(p.cs, "cs");
  validate_sentence_text(p.en, "en");
  validate_scores(p.scores);
}

/// Ordered, non-empty run of pairs sharing one (source, doc, file) key with
/// strictly increasing sentence indices. There is no cap on length.
class Document {
 public:
  explicit Document(std::vector<SentencePair> pairs) : pairs_(std::move(pairs)) {
    if (pairs_.empty()) throw Error(Errc::MixedDocumentBlock, "document has no sentence pairs");
    key_ = DocumentKey::of(pairs_.front().id);
    for (std::size_t i = 0; i < pairs_.size(); ++i) {
      validate_pair(pairs_[i]);
      if (DocumentKey::of(pairs_[i].id) != key_)
        throw Error(Errc::MixedDocumentBlock, format_pair_id(pairs_[i].id) +
                                                  " does not belong to document " + key_.str());
      if (i > 0 && pairs_[i].id.sent <= pairs_[i - 1].id.sent)
        throw Error(Errc::UnorderedSentences, format_pair_id(pairs_[i].id) + " follows " +
                                                  format_pair_id(pairs_[i - 1].id));
    }
  }

  const DocumentKey& key() const noexcept { return key_; }
  const std::vector<SentencePair>& pairs() const noexcept { return pairs_; }
  std::size_t size() const noexcept { return pairs_.size(); }
  const SentencePair& operator[](std::size_t i) const { return pairs_[i]; }
  auto begin() const noexcept { return pairs_.begin(); }
  auto end() const noexcept { return pairs_.end(); }

  /// Scores are the one mutable part of a document.
  void set_scores(std::size_t i, const ScoreTriple& scores) {
    validate_scores(scores);
    pairs_.at(i).scores = scores;
  }

  /// Replaces the source component of every ID.
  void relabel_source(const std::string& source) {
    if (!is_valid_source(source)) throw Error(Errc::InvalidSource, "invalid source '" + source + "'");
    for (auto& p : pairs_) p.id.source = source;
    key_.source = source;
  }

  friend bool operator==(const Document& a, const Document& b) { return a.pairs_ == b.pairs_; }

 private:
  DocumentKey key_;
  std::vector<SentencePair> pairs_;
};

/// Word-normalized conditional cross-entropies in nats per word:
/// h_a = -log P_A(en|cs) / |en|, h_b = -log P_B(cs|en) / |cs|.
struct CrossEntropyPair {
  double h_a = 0.0;
  double h_b = 0.0;
};

inline void validate_cross_entropy(const CrossEntropyPair& h) {
  for (double v : {h.h_a, h.h_b}) {
    if (!std::isfinite(v) || v < 0.0)
      throw Error(Errc::NegativeInput, "cross-entropy must be finite and non-negative, got " +
                                           std::to_string(v));
  }
}

/// Probability per language code, sorted by code.
class LangDistribution {
 public:
  using Entry = std::pair<std::string, double>;

  explicit LangDistribution(std::vector<Entry> entries) : entries_(std::move(entries)) {
    if (entries_.empty()) throw Error(Errc::EmptyProfileSet, "language distribution has no entries");
    std::sort(entries_.begin(), entries_.end());
    double sum = 0.0;
    for (std::size_t i = 0; i < entries_.size(); ++i) {
      if (i > 0 && entries_[i].first == entries_[i - 1].first)
        throw Error(Errc::MalformedProfile, "duplicate language '" + entries_[i].first + "'");
      if (!is_unit_score(entries_[i].second))
        throw Error(Errc::ScoreOutOfRange, "probability outside [0, 1] for '" + entries_[i].first + "'");
      sum += entries_[i].second;
    }
    if (std::abs(sum - 1.0) > 1e-9)
      throw Error(Errc::ScoreOutOfRange, "probabilities sum to " + std::to_string(sum));
  }

  const std::vector<Entry>& entries() const noexcept { return entries_; }

  /// 0 for languages not in the distribution.
  double probability(std::string_view lang) const {
    for (const auto& [code, p] : entries_)
      if (code == lang) return p;
    return 0.0;
  }

  /// Most probable language; ties go to the lexicographically smallest code.
  const Entry& top() const {
    const Entry* best = &entries_.front();
    for (const auto& e : entries_)
      if (e.second > best->second) best = &e;
    return *best;
  }

  const std::string& argmax() const { return top().first; }

 private:
  std::vector<Entry> entries_;
};

}  // namespace gigafilter
