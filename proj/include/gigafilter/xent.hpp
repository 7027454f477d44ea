#pragma once

// Dual conditional cross-entropy scoring.
//
//   crossent = |h_a - h_b| + (h_a + h_b) / 2
//   adq      = exp(-crossent)
//
// where h_a = -log P_A(en | cs) / |en| and h_b = -log P_B(cs | en) / |cs|,
// both in nats per word.

#include <absl/container/flat_hash_map.h>
#include <absl/container/flat_hash_set.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <istream>
#include <memory>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <tuple>
#include <utility>
#include <vector>

#include "gigafilter/corpus_model.hpp"
#include "gigafilter/error.hpp"
#include "gigafilter/langid.hpp"
#include "gigafilter/text.hpp"

namespace gigafilter {

inline double crossent_score(const CrossEntropyPair& h) {
  validate_cross_entropy(h);
  return std::abs(h.h_a - h.h_b) + 0.5 * (h.h_a + h.h_b);
}

inline double adq_score(double crossent) {
  if (!(crossent >= 0.0)) throw Error(Errc::NegativeInput, "cross-entropy score must be >= 0");
  return std::exp(-crossent);
}

enum class Direction { CsToEn, EnToCs };

inline std::string_view direction_name(Direction d) { return d == Direction::CsToEn ? "cs-en" : "en-cs"; }

inline Direction parse_direction(std::string_view s) {
  if (s == "cs-en") return Direction::CsToEn;
  if (s == "en-cs") return Direction::EnToCs;
  throw Error(Errc::MalformedConfig, "direction must be cs-en or en-cs, got '" + std::string(s) + "'");
}

inline std::string_view source_text(const SentencePair& p, Direction d) { return d == Direction::CsToEn ? p.cs : p.en; }
inline std::string_view target_text(const SentencePair& p, Direction d) { return d == Direction::CsToEn ? p.en : p.cs; }

/// A conditional model P(target | source) reporting word-normalized
/// cross-entropy in nats per target word.
class ConditionalModel {
 public:
  virtual ~ConditionalModel() = default;
  virtual Direction direction() const = 0;
  virtual double cross_entropy(const PairId& id, std::string_view source, std::string_view target) const = 0;
};

struct LexicalTrainOptions {
  int iterations = 5;
  double floor = 1e-9;
  /// Train on distinct (cs, en) pairs only.
  bool dedup_sentences = false;
};

/// Word translation table t(target | source) with a NULL source word,
/// scored under uniform alignment.
class LexicalModel final : public ConditionalModel {
 public:
  /// (source word, target word, probability); an empty source word is NULL.
  using Entry = std::tuple<std::string, std::string, double>;

  LexicalModel(Direction direction, std::span<const Entry> entries, double floor = 1e-9, int iterations = 0,
               std::vector<double> log_likelihood_history = {})
      : direction_(direction),
        floor_(floor),
        iterations_(iterations),
        history_(std::move(log_likelihood_history)) {
    if (!(floor > 0.0 && floor < 1.0)) throw Error(Errc::MalformedModel, "probability floor must be in (0, 1)");
    source_words_.emplace_back();  // NULL
    for (const auto& [s, t, p] : entries) {
      if (!(p >= 0.0 && p <= 1.0)) throw Error(Errc::MalformedModel, "translation probability outside [0, 1]");
      const auto key = pack(intern_source(s), intern_target(t));
      if (!table_.emplace(key, p).second)
        throw Error(Errc::MalformedModel, "duplicate entry for '" + t + "' given '" + s + "'");
    }
  }

  Direction direction() const override { return direction_; }
  double floor() const noexcept { return floor_; }
  int iterations() const noexcept { return iterations_; }

  /// Training-set log-likelihood before the first and after every EM pass.
  const std::vector<double>& log_likelihood_history() const noexcept { return history_; }

  /// t(target | source); pass an empty source for NULL.
  double translation_probability(std::string_view target, std::string_view source) const {
    const auto s = source.empty() ? std::optional<std::uint32_t>{0} : find(source_ids_, source);
    const auto t = find(target_ids_, target);
    if (!s || !t) return 0.0;
    const auto it = table_.find(pack(*s, *t));
    return it == table_.end() ? 0.0 : it->second;
  }

  double cross_entropy(const PairId&, std::string_view source, std::string_view target) const override {
    std::vector<std::uint32_t> src{0};
    text::for_each_word(source, [&](std::string_view w) {
      const auto id = find(source_ids_, w);
      src.push_back(id ? *id : kUnknown);
    });
    double total = 0.0;
    std::size_t words = 0;
    const double norm = 1.0 / static_cast<double>(src.size());
    text::for_each_word(target, [&](std::string_view w) {
      ++words;
      double sum = 0.0;
      if (const auto t = find(target_ids_, w)) {
        for (auto s : src) {
          if (s == kUnknown) continue;
          if (const auto it = table_.find(pack(s, *t)); it != table_.end()) sum += it->second;
        }
      }
      total -= std::log(std::max(sum * norm, floor_));
    });
    if (words == 0) throw Error(Errc::EmptyTarget, "target sentence has no words");
    return total / static_cast<double>(words);
  }

  /// All entries sorted by (source, target), NULL first.
  std::vector<Entry> entries() const {
    std::vector<Entry> out;
    out.reserve(table_.size());
    for (const auto& [key, p] : table_)
      out.emplace_back(source_words_[key >> 32], target_words_[key & 0xFFFFFFFFu], p);
    std::sort(out.begin(), out.end());
    return out;
  }

  void save(std::ostream& out) const {
    out << "gigafilter-lexical-model\t1\n";
    out << "direction\t" << direction_name(direction_) << '\n';
    out << "iterations\t" << iterations_ << '\n';
    out << "floor\t" << detail::format_double(floor_) << '\n';
    out << "loglik";
    for (double v : history_) out << '\t' << detail::format_double(v);
    out << '\n';
    for (const auto& [s, t, p] : entries()) out << "t\t" << s << '\t' << t << '\t' << detail::format_double(p) << '\n';
    if (!out) throw Error(Errc::Io, "failed to write lexical model");
  }

  static LexicalModel load(std::istream& in) {
    std::string line;
    std::uint64_t line_no = 0;
    auto fail = [&](const std::string& msg) { return Error(Errc::MalformedModel, msg, line_no); };
    if (!std::getline(in, line) || (++line_no, line != "gigafilter-lexical-model\t1"))
      throw fail("missing lexical model header");
    std::optional<Direction> direction;
    double floor = 0.0;
    int iterations = 0;
    std::vector<double> history;
    std::vector<Entry> entries;
    while (std::getline(in, line)) {
      ++line_no;
      if (line.empty()) continue;
      const auto f = text::split(line, '\t');
      if (f[0] == "direction" && f.size() == 2) {
        try {
          direction = parse_direction(f[1]);
        } catch (const Error&) {
          throw fail("bad direction");
        }
      } else if (f[0] == "iterations" && f.size() == 2) {
        const auto v = detail::parse_index(f[1]);
        if (!v || *v > 1000000) throw fail("bad iteration count");
        iterations = static_cast<int>(*v);
      } else if (f[0] == "floor" && f.size() == 2) {
        if (!detail::parse_double(f[1], floor)) throw fail("bad floor");
      } else if (f[0] == "loglik") {
        for (std::size_t i = 1; i < f.size(); ++i) {
          double v = 0;
          if (!detail::parse_double(f[i], v)) throw fail("bad log-likelihood");
          history.push_back(v);
        }
      } else if (f[0] == "t" && f.size() == 4) {
        double p = 0;
        if (!detail::parse_double(f[3], p) || f[2].empty()) throw fail("bad translation entry");
        entries.emplace_back(std::string(f[1]), std::string(f[2]), p);
      } else {
        throw fail("unrecognized model line");
      }
    }
    if (!direction || floor == 0.0) throw fail("incomplete lexical model");
    try {
      return LexicalModel(*direction, entries, floor, iterations, std::move(history));
    } catch (const Error& e) {
      throw Error(Errc::MalformedModel, e.detail());
    }
  }

 private:
  friend LexicalModel train_lexical(std::span<const SentencePair>, Direction, const LexicalTrainOptions&);

  static constexpr std::uint32_t kUnknown = 0xFFFFFFFFu;

  LexicalModel(Direction direction, double floor) : direction_(direction), floor_(floor) {
    source_words_.emplace_back();
  }

  static std::uint64_t pack(std::uint32_t s, std::uint32_t t) { return (std::uint64_t{s} << 32) | t; }

  static std::optional<std::uint32_t> find(const absl::flat_hash_map<std::string, std::uint32_t>& ids,
                                           std::string_view w) {
    const auto it = ids.find(absl::string_view(w.data(), w.size()));
    if (it == ids.end()) return std::nullopt;
    return it->second;
  }

  std::uint32_t intern_source(const std::string& w) {
    if (w.empty()) return 0;
    const auto [it, added] = source_ids_.try_emplace(w, static_cast<std::uint32_t>(source_words_.size()));
    if (added) source_words_.push_back(w);
    return it->second;
  }
  std::uint32_t intern_target(const std::string& w) {
    const auto [it, added] = target_ids_.try_emplace(w, static_cast<std::uint32_t>(target_words_.size()));
    if (added) target_words_.push_back(w);
    return it->second;
  }

  Direction direction_;
  double floor_;
  int iterations_ = 0;
  std::vector<double> history_;
  absl::flat_hash_map<std::string, std::uint32_t> source_ids_, target_ids_;
  std::vector<std::string> source_words_, target_words_;
  absl::flat_hash_map<std::uint64_t, double> table_;
};

/// IBM-Model-1 style EM. t starts uniform over the target words co-occurring
/// with each source word (NULL co-occurs with everything) and is refined by
/// exactly `iterations` passes. Single-threaded and deterministic.
inline LexicalModel train_lexical(std::span<const SentencePair> corpus, Direction direction,
                                  const LexicalTrainOptions& options = {}) {
  if (corpus.empty()) throw Error(Errc::EmptyCorpus, "cannot train a lexical model on an empty corpus");
  if (options.iterations < 0) throw Error(Errc::MalformedConfig, "iterations must be non-negative");
  LexicalModel model(direction, options.floor);
  if (!(options.floor > 0.0 && options.floor < 1.0))
    throw Error(Errc::MalformedConfig, "probability floor must be in (0, 1)");
  model.iterations_ = options.iterations;

  struct Sentence {
    std::vector<std::uint32_t> src;  // starts with NULL
    std::vector<std::uint32_t> tgt;
  };
  std::vector<Sentence> sentences;
  sentences.reserve(corpus.size());
  absl::flat_hash_set<std::pair<std::string_view, std::string_view>> seen;
  for (const auto& pair : corpus) {
    if (options.dedup_sentences && !seen.emplace(pair.cs, pair.en).second) continue;
    Sentence s;
    s.src.push_back(0);
    text::for_each_word(source_text(pair, direction),
                        [&](std::string_view w) { s.src.push_back(model.intern_source(std::string(w))); });
    text::for_each_word(target_text(pair, direction),
                        [&](std::string_view w) { s.tgt.push_back(model.intern_target(std::string(w))); });
    sentences.push_back(std::move(s));
  }

  // Uniform start over co-occurring targets.
  absl::flat_hash_map<std::uint64_t, double>& t = model.table_;
  std::vector<double> fanout(model.source_words_.size(), 0.0);
  for (const auto& s : sentences)
    for (auto src : s.src)
      for (auto tgt : s.tgt)
        if (t.try_emplace(LexicalModel::pack(src, tgt), 0.0).second) fanout[src] += 1.0;
  for (auto& [key, p] : t) p = 1.0 / fanout[key >> 32];

  auto log_likelihood = [&]() {
    double ll = 0.0;
    for (const auto& s : sentences) {
      const double norm = 1.0 / static_cast<double>(s.src.size());
      for (auto tgt : s.tgt) {
        double sum = 0.0;
        for (auto src : s.src) sum += t.at(LexicalModel::pack(src, tgt));
        ll += std::log(sum * norm);
      }
    }
    return ll;
  };

  absl::flat_hash_map<std::uint64_t, double> counts;
  std::vector<double> totals(model.source_words_.size());
  std::vector<double> column;
  for (int iter = 0; iter < options.iterations; ++iter) {
    double ll = 0.0;
    counts.clear();
    std::fill(totals.begin(), totals.end(), 0.0);
    for (const auto& s : sentences) {
      const double norm = 1.0 / static_cast<double>(s.src.size());
      column.resize(s.src.size());
      for (auto tgt : s.tgt) {
        double sum = 0.0;
        for (std::size_t i = 0; i < s.src.size(); ++i) {
          column[i] = t.at(LexicalModel::pack(s.src[i], tgt));
          sum += column[i];
        }
        ll += std::log(sum * norm);
        for (std::size_t i = 0; i < s.src.size(); ++i) {
          const double c = column[i] / sum;
          counts[LexicalModel::pack(s.src[i], tgt)] += c;
          totals[s.src[i]] += c;
        }
      }
    }
    model.history_.push_back(ll);
    for (auto& [key, p] : t) {
      const auto it = counts.find(key);
      p = it == counts.end() ? 0.0 : it->second / totals[key >> 32];
    }
  }
  model.history_.push_back(log_likelihood());
  return model;
}

struct ScoreTable {
  absl::flat_hash_map<std::string, CrossEntropyPair> by_id;
};

/// Reads `pair_id TAB h_a TAB h_b` lines (nats per word). An optional first
/// line `pair_id TAB h_a TAB h_b` is treated as a header.
inline std::shared_ptr<const ScoreTable> read_score_table(std::istream& in) {
  auto table = std::make_shared<ScoreTable>();
  std::string line;
  std::uint64_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    if (line_no == 1 && line == "pair_id\th_a\th_b") continue;
    const auto f = text::split(line, '\t');
    if (f.size() != 3) throw Error(Errc::MalformedScoreFile, "expected 3 tab-separated fields", line_no);
    PairId id;
    try {
      id = parse_pair_id(f[0]);
    } catch (const Error& e) {
      throw e.at_line(line_no);
    }
    CrossEntropyPair h;
    if (!detail::parse_double(f[1], h.h_a) || !detail::parse_double(f[2], h.h_b) || !std::isfinite(h.h_a) ||
        !std::isfinite(h.h_b) || h.h_a < 0.0 || h.h_b < 0.0)
      throw Error(Errc::MalformedScoreFile, "cross-entropies must be finite non-negative decimals", line_no);
    if (!table->by_id.emplace(format_pair_id(id), h).second)
      throw Error(Errc::MalformedScoreFile, "duplicate pair id " + std::string(f[0]), line_no);
  }
  return table;
}

/// Precomputed cross-entropies looked up by pair ID; the A column for
/// cs->en, the B column for en->cs.
class ScoreFileProvider final : public ConditionalModel {
 public:
  ScoreFileProvider(Direction direction, std::shared_ptr<const ScoreTable> table)
      : direction_(direction), table_(std::move(table)) {}

  Direction direction() const override { return direction_; }

  double cross_entropy(const PairId& id, std::string_view, std::string_view) const override {
    const auto it = table_->by_id.find(format_pair_id(id));
    if (it == table_->by_id.end()) throw Error(Errc::MissingScore, "no cross-entropy for " + format_pair_id(id));
    return direction_ == Direction::CsToEn ? it->second.h_a : it->second.h_b;
  }

 private:
  Direction direction_;
  std::shared_ptr<const ScoreTable> table_;
};

inline void check_directions(const ConditionalModel& model_a, const ConditionalModel& model_b) {
  if (model_a.direction() != Direction::CsToEn || model_b.direction() != Direction::EnToCs)
    throw Error(Errc::MalformedConfig, "model A must score cs->en and model B en->cs");
}

inline CrossEntropyPair pair_cross_entropies(const SentencePair& pair, const ConditionalModel& model_a,
                                             const ConditionalModel& model_b) {
  try {
    return {model_a.cross_entropy(pair.id, pair.cs, pair.en), model_b.cross_entropy(pair.id, pair.en, pair.cs)};
  } catch (const Error& e) {
    throw e.with_context(format_pair_id(pair.id));
  }
}

/// Fills adq for every pair of `doc`; the language scores are left alone.
inline void score_document(Document& doc, const ConditionalModel& model_a, const ConditionalModel& model_b) {
  check_directions(model_a, model_b);
  for (std::size_t i = 0; i < doc.size(); ++i) {
    ScoreTriple s = doc[i].scores;
    s.adq = adq_score(crossent_score(pair_cross_entropies(doc[i], model_a, model_b)));
    doc.set_scores(i, s);
  }
}

/// Fills cs_lang and en_lang with the scaled language scores; adq is left
/// alone.
inline void score_document_languages(Document& doc, const LanguageIdentifier& id, std::string_view cs_code = "cs",
                                     std::string_view en_code = "en") {
  for (std::size_t i = 0; i < doc.size(); ++i) {
    ScoreTriple s = doc[i].scores;
    try {
      s.cs_lang = scaled_lang_score(id.classify(doc[i].cs), cs_code);
      s.en_lang = scaled_lang_score(id.classify(doc[i].en), en_code);
    } catch (const Error& e) {
      throw e.with_context(format_pair_id(doc[i].id));
    }
    doc.set_scores(i, s);
  }
}

}  // namespace gigafilter
