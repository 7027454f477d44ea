#pragma once

// Corpus statistics, per-stage drop ledger and the adq size projection.

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <map>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "gigafilter/corpus_model.hpp"
#include "gigafilter/error.hpp"
#include "gigafilter/langid.hpp"
#include "gigafilter/text.hpp"
#include "gigafilter/tsv_io.hpp"

namespace gigafilter {

struct StageRecord {
  std::string name;
  std::uint64_t pairs_in = 0;
  std::uint64_t pairs_dropped = 0;
  std::uint64_t documents_in = 0;
  std::uint64_t documents_dropped = 0;
  /// Dropped pairs per reason code.
  std::map<std::string, std::uint64_t> reasons;

  std::uint64_t pairs_out() const { return pairs_in - pairs_dropped; }

  void merge(const StageRecord& other) {
    if (other.name != name) throw Error(Errc::MalformedConfig, "cannot merge stage " + other.name + " into " + name);
    pairs_in += other.pairs_in;
    pairs_dropped += other.pairs_dropped;
    documents_in += other.documents_in;
    documents_dropped += other.documents_dropped;
    for (const auto& [r, n] : other.reasons) reasons[r] += n;
  }

  friend bool operator==(const StageRecord&, const StageRecord&) = default;
};

/// Totals of a corpus plus the stage ledger that produced it.
struct PipelineStats {
  std::uint64_t pairs = 0;
  std::uint64_t cs_words = 0;
  std::uint64_t en_words = 0;
  std::uint64_t documents = 0;
  std::vector<StageRecord> per_stage;

  void add(const SentencePair& p) {
    ++pairs;
    cs_words += text::count_words(p.cs);
    en_words += text::count_words(p.en);
  }

  void add(const Document& doc) {
    ++documents;
    for (const auto& p : doc) add(p);
  }

  /// Associative and commutative; stage lists must name the same stages.
  void merge(const PipelineStats& other) {
    pairs += other.pairs;
    cs_words += other.cs_words;
    en_words += other.en_words;
    documents += other.documents;
    if (per_stage.empty()) {
      per_stage = other.per_stage;
      return;
    }
    if (other.per_stage.empty()) return;
    if (other.per_stage.size() != per_stage.size())
      throw Error(Errc::MalformedConfig, "cannot merge reports with different stage lists");
    for (std::size_t i = 0; i < per_stage.size(); ++i) per_stage[i].merge(other.per_stage[i]);
  }

  /// Each stage's survivors enter the next one; the last stage's survivors
  /// are the corpus counted in `pairs`.
  bool consistent() const {
    for (std::size_t i = 0; i < per_stage.size(); ++i) {
      const auto& s = per_stage[i];
      if (s.pairs_dropped > s.pairs_in || s.documents_dropped > s.documents_in) return false;
      if (i + 1 < per_stage.size() && s.pairs_out() != per_stage[i + 1].pairs_in) return false;
      std::uint64_t by_reason = 0;
      for (const auto& [r, n] : s.reasons) by_reason += n;
      if (by_reason != s.pairs_dropped) return false;
    }
    return per_stage.empty() || per_stage.back().pairs_out() == pairs;
  }

  friend bool operator==(const PipelineStats&, const PipelineStats&) = default;
};

inline PipelineStats corpus_stats(std::span<const Document> docs) {
  PipelineStats s;
  for (const auto& d : docs) s.add(d);
  return s;
}

inline PipelineStats corpus_stats(CorpusReader& reader) {
  PipelineStats s;
  while (auto d = reader.next()) s.add(*d);
  return s;
}

/// Surviving pairs per adq threshold (a pair survives t unless adq < t).
class SizeProjection {
 public:
  explicit SizeProjection(std::vector<double> thresholds) : thresholds_(std::move(thresholds)) {
    for (double t : thresholds_)
      if (!std::isfinite(t)) throw Error(Errc::MalformedConfig, "thresholds must be finite");
    counts_.assign(thresholds_.size(), 0);
  }

  void add(const SentencePair& p) {
    if (!p.scores.adq) throw Error(Errc::UnscoredPair, format_pair_id(p.id) + " has no adq score");
    for (std::size_t i = 0; i < thresholds_.size(); ++i) counts_[i] += !(*p.scores.adq < thresholds_[i]);
  }
  void add(const Document& d) {
    for (const auto& p : d) add(p);
  }

  void merge(const SizeProjection& other) {
    if (other.thresholds_ != thresholds_) throw Error(Errc::MalformedConfig, "threshold lists differ");
    for (std::size_t i = 0; i < counts_.size(); ++i) counts_[i] += other.counts_[i];
  }

  std::vector<std::pair<double, std::uint64_t>> results() const {
    std::vector<std::pair<double, std::uint64_t>> out;
    for (std::size_t i = 0; i < thresholds_.size(); ++i) out.emplace_back(thresholds_[i], counts_[i]);
    return out;
  }

 private:
  std::vector<double> thresholds_;
  std::vector<std::uint64_t> counts_;
};

inline std::vector<std::pair<double, std::uint64_t>> size_projection(std::span<const Document> docs,
                                                                      std::vector<double> thresholds) {
  SizeProjection proj(std::move(thresholds));
  for (const auto& d : docs) proj.add(d);
  return proj.results();
}

inline void write_corpus_stats_tsv(std::ostream& out, const PipelineStats& s) {
  out << "pairs\tdocuments\tcs_words\ten_words\n"
      << s.pairs << '\t' << s.documents << '\t' << s.cs_words << '\t' << s.en_words << '\n';
}

inline std::string format_reasons(const std::map<std::string, std::uint64_t>& reasons) {
  std::string out;
  for (const auto& [r, n] : reasons) {
    if (!out.empty()) out += ',';
    out += r + "=" + std::to_string(n);
  }
  return out.empty() ? "-" : out;
}

inline void write_stage_report_tsv(std::ostream& out, const PipelineStats& s) {
  out << "stage\tpairs_in\tpairs_dropped\tpairs_out\tdocuments_in\tdocuments_dropped\treasons\n";
  for (const auto& st : s.per_stage)
    out << st.name << '\t' << st.pairs_in << '\t' << st.pairs_dropped << '\t' << st.pairs_out() << '\t'
        << st.documents_in << '\t' << st.documents_dropped << '\t' << format_reasons(st.reasons) << '\n';
}

inline void write_projection_tsv(std::ostream& out, std::span<const std::pair<double, std::uint64_t>> rows) {
  out << "threshold\tpairs\n";
  for (const auto& [t, n] : rows) out << detail::format_double(t) << '\t' << n << '\n';
}

namespace detail {

inline std::string render_rows(const std::vector<std::vector<std::string>>& rows, std::size_t left_cols) {
  std::vector<std::size_t> width;
  for (const auto& r : rows) {
    width.resize(std::max(width.size(), r.size()), 0);
    for (std::size_t i = 0; i < r.size(); ++i) width[i] = std::max(width[i], text::count_code_points(r[i]));
  }
  std::ostringstream out;
  for (const auto& r : rows) {
    std::string line;
    for (std::size_t i = 0; i < r.size(); ++i) {
      const std::string pad(width[i] - text::count_code_points(r[i]), ' ');
      if (i > 0) line += "  ";
      line += i < left_cols ? r[i] + pad : pad + r[i];
    }
    while (!line.empty() && line.back() == ' ') line.pop_back();
    out << line << '\n';
  }
  return out.str();
}

// 12345678 -> "12.3 M"; small numbers stay exact.
inline std::string human_count(std::uint64_t n) {
  if (n < 10000) return std::to_string(n);
  const double v = static_cast<double>(n);
  const char* unit = v >= 1e9 ? "G" : v >= 1e6 ? "M" : "k";
  const double scaled = v >= 1e9 ? v / 1e9 : v >= 1e6 ? v / 1e6 : v / 1e3;
  std::array<char, 32> buf{};
  const auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), scaled, std::chars_format::fixed, 1);
  return std::string(buf.data(), ptr) + " " + unit;
}

}  // namespace detail

/// Aligned-column rendering for people: corpus totals, then the stage ledger
/// when there is one.
inline std::string render_stats_table(const PipelineStats& s) {
  std::vector<std::vector<std::string>> totals = {
      {"", "count", "approx"},
      {"Sentence pairs", std::to_string(s.pairs), detail::human_count(s.pairs)},
      {"Czech words", std::to_string(s.cs_words), detail::human_count(s.cs_words)},
      {"English words", std::to_string(s.en_words), detail::human_count(s.en_words)},
      {"Documents", std::to_string(s.documents), detail::human_count(s.documents)},
  };
  std::string out = detail::render_rows(totals, 1);
  if (!s.per_stage.empty()) {
    std::vector<std::vector<std::string>> stages = {{"stage", "pairs in", "dropped", "pairs out", "reasons"}};
    for (const auto& st : s.per_stage)
      stages.push_back({st.name, std::to_string(st.pairs_in), std::to_string(st.pairs_dropped),
                        std::to_string(st.pairs_out()), format_reasons(st.reasons)});
    out += '\n';
    out += detail::render_rows(stages, 1);
  }
  return out;
}

}  // namespace gigafilter
