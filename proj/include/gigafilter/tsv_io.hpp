#pragma once

// The six-column corpus format:
//
//   <pair id> TAB <adq> TAB <cs_lang> TAB <en_lang> TAB <czech> TAB <english> LF
//
// Documents are runs of consecutive lines sharing (source, doc, file) and are
// separated by exactly one empty line. Scores are written with six digits
// after the decimal point. A score column holding "-" marks a score that has
// not been computed yet; such files are intermediate and only produced when
// the writer is told to allow them.

#include <array>
#include <charconv>
#include <cstdint>
#include <istream>
#include <optional>
#include <ostream>
#include <set>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "gigafilter/corpus_model.hpp"
#include "gigafilter/error.hpp"
#include "gigafilter/text.hpp"

namespace gigafilter {

inline constexpr std::string_view kUnscoredField = "-";

/// Fixed six-decimal rendering. std::to_chars rounds the exact binary value
/// to nearest, so values whose binary expansion sits exactly on a half go to
/// the even digit.
inline std::string format_score(double value) {
  std::array<char, 64> buf{};
  const auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), value, std::chars_format::fixed, 6);
  if (ec != std::errc{}) throw Error(Errc::ScoreOutOfRange, "cannot format score");
  return std::string(buf.data(), ptr);
}

/// Any decimal in [0, 1]; nullopt for the unscored marker.
inline std::optional<double> parse_score(std::string_view field) {
  if (field == kUnscoredField) return std::nullopt;
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
  if (ec != std::errc{} || ptr != field.data() + field.size() || field.empty())
    throw Error(Errc::ScoreOutOfRange, "score field '" + std::string(field) + "' is not a decimal");
  if (!is_unit_score(value))
    throw Error(Errc::ScoreOutOfRange, "score " + std::string(field) + " outside [0, 1]");
  return value;
}

/// Parses one non-empty corpus line.
inline SentencePair parse_corpus_line(std::string_view line) {
  const auto fields = text::split(line, '\t');
  if (fields.size() != 6)
    throw Error(Errc::MalformedLine, "expected 6 tab-separated fields, got " + std::to_string(fields.size()));
  SentencePair pair;
  pair.id = parse_pair_id(fields[0]);
  pair.scores.adq = parse_score(fields[1]);
  pair.scores.cs_lang = parse_score(fields[2]);
  pair.scores.en_lang = parse_score(fields[3]);
  pair.cs = std::string(fields[4]);
  pair.en = std::string(fields[5]);
  validate_sentence_text(pair.cs, "cs");
  validate_sentence_text(pair.en, "en");
  return pair;
}

/// Streams Documents out of a corpus file. Memory is bounded by the largest
/// document. Runs of empty lines count as one separator.
class CorpusReader {
 public:
  explicit CorpusReader(std::istream& in) : in_(in) {}

  std::optional<Document> next() {
    std::vector<SentencePair> pairs;
    std::optional<DocumentKey> key;
    while (read_line()) {
      if (line_.empty()) {
        if (pairs.empty()) continue;
        break;
      }
      SentencePair pair;
      try {
        pair = parse_corpus_line(line_);
      } catch (const Error& e) {
        throw e.at_line(line_no_);
      }
      if (!key) {
        key = DocumentKey::of(pair.id);
      } else {
        if (DocumentKey::of(pair.id) != *key)
          throw Error(Errc::MixedDocumentBlock,
                      format_pair_id(pair.id) + " in a block belonging to " + key->str(), line_no_);
        if (pair.id.sent <= pairs.back().id.sent)
          throw Error(Errc::UnorderedSentences,
                      format_pair_id(pair.id) + " follows " + format_pair_id(pairs.back().id), line_no_);
      }
      pairs.push_back(std::move(pair));
    }
    if (pairs.empty()) return std::nullopt;
    return Document(std::move(pairs));
  }

  /// 1-based number of the last line read.
  std::uint64_t line_number() const noexcept { return line_no_; }

 private:
  bool read_line() {
    if (!std::getline(in_, line_)) {
      if (in_.bad()) throw Error(Errc::Io, "read failure", line_no_);
      return false;
    }
    ++line_no_;
    if (const auto bad = text::find_invalid_utf8(line_))
      throw Error(Errc::InvalidUtf8, "invalid UTF-8 at byte offset " + std::to_string(offset_ + *bad), line_no_);
    offset_ += line_.size() + 1;
    return true;
  }

  std::istream& in_;
  std::string line_;
  std::uint64_t line_no_ = 0;
  std::uint64_t offset_ = 0;
};

/// Appends one serialized line (with LF) for `pair`.
inline void append_corpus_line(std::string& out, const SentencePair& pair, bool allow_unscored) {
  if (!allow_unscored && !pair.scores.complete())
    throw Error(Errc::UnscoredPair, format_pair_id(pair.id) + " has no complete score triple");
  out += format_pair_id(pair.id);
  for (const auto* score : {&pair.scores.adq, &pair.scores.cs_lang, &pair.scores.en_lang}) {
    out += '\t';
    out += *score ? format_score(**score) : std::string(kUnscoredField);
  }
  out += '\t';
  out += pair.cs;
  out += '\t';
  out += pair.en;
  out += '\n';
}

class CorpusWriter {
 public:
  explicit CorpusWriter(std::ostream& out, bool allow_unscored = false)
      : out_(out), allow_unscored_(allow_unscored) {}

  void write(const Document& doc) {
    buf_.clear();
    if (documents_ > 0) buf_ += '\n';
    for (const auto& pair : doc) append_corpus_line(buf_, pair, allow_unscored_);
    out_.write(buf_.data(), static_cast<std::streamsize>(buf_.size()));
    if (!out_) throw Error(Errc::Io, "write failure");
    ++documents_;
  }

  std::uint64_t documents_written() const noexcept { return documents_; }

 private:
  std::ostream& out_;
  bool allow_unscored_;
  std::string buf_;
  std::uint64_t documents_ = 0;
};

inline std::vector<Document> parse_corpus(std::istream& in) {
  std::vector<Document> docs;
  CorpusReader reader(in);
  while (auto doc = reader.next()) docs.push_back(std::move(*doc));
  return docs;
}

inline std::vector<Document> parse_corpus(std::string_view data) {
  std::istringstream in{std::string(data)};
  return parse_corpus(in);
}

inline std::string write_corpus(std::span<const Document> docs, bool allow_unscored = false) {
  std::ostringstream out;
  CorpusWriter writer(out, allow_unscored);
  for (const auto& doc : docs) writer.write(doc);
  return std::move(out).str();
}

// ---------------------------------------------------------------------------
// Raw aligned text: segmentation and ID assignment.
// ---------------------------------------------------------------------------

/// Two line-aligned sides. `doc_breaks` holds the indices into the line
/// vectors where a source document starts (0 is implicit); `doc_names`, when
/// non-empty, runs parallel to `doc_breaks` and an empty name means "number
/// it".
struct RawBitext {
  std::vector<std::string> cs_lines;
  std::vector<std::string> en_lines;
  std::vector<std::size_t> doc_breaks;
  std::vector<std::string> doc_names;
};

inline void validate_raw_bitext(const RawBitext& raw) {
  if (raw.cs_lines.size() != raw.en_lines.size())
    throw Error(Errc::LengthMismatch, std::to_string(raw.cs_lines.size()) + " Czech lines vs " +
                                          std::to_string(raw.en_lines.size()) + " English lines");
  for (std::size_t i = 0; i < raw.doc_breaks.size(); ++i) {
    if (raw.doc_breaks[i] > raw.cs_lines.size() || (i > 0 && raw.doc_breaks[i] <= raw.doc_breaks[i - 1]))
      throw Error(Errc::MalformedLine, "document breaks must be strictly increasing line indices");
  }
  if (!raw.doc_names.empty() && raw.doc_names.size() != raw.doc_breaks.size())
    throw Error(Errc::MalformedLine, "document names do not match document breaks");
  for (const auto& name : raw.doc_names)
    if (!name.empty() && !is_valid_doc_name(name))
      throw Error(Errc::MalformedId, "invalid document name '" + name + "'");
}

/// Reads two aligned files plus an optional break file. A line that is empty
/// on both sides is a document separator, never a sentence. Break-file lines
/// are `<0-based line index>` or `<index> TAB <document name>`, indices
/// referring to lines of the input files.
inline RawBitext read_raw_bitext(std::istream& cs, std::istream& en, std::istream* breaks = nullptr) {
  RawBitext raw;
  std::vector<std::size_t> kept_index_of_raw;  // raw line -> index of next kept line
  std::vector<std::size_t> blank_breaks;
  std::string cs_line, en_line;
  std::uint64_t line_no = 0;
  std::uint64_t cs_offset = 0, en_offset = 0;
  while (true) {
    const bool have_cs = static_cast<bool>(std::getline(cs, cs_line));
    const bool have_en = static_cast<bool>(std::getline(en, en_line));
    if (!have_cs && !have_en) break;
    ++line_no;
    if (have_cs != have_en) {
      throw Error(Errc::LengthMismatch, std::string(have_cs ? "English" : "Czech") + " side ends early", line_no);
    }
    for (auto [line, offset] : {std::pair{&cs_line, &cs_offset}, std::pair{&en_line, &en_offset}}) {
      if (const auto bad = text::find_invalid_utf8(*line))
        throw Error(Errc::InvalidUtf8, "invalid UTF-8 at byte offset " + std::to_string(*offset + *bad), line_no);
      *offset += line->size() + 1;
    }
    kept_index_of_raw.push_back(raw.cs_lines.size());
    if (cs_line.empty() && en_line.empty()) {
      blank_breaks.push_back(raw.cs_lines.size());
      continue;
    }
    try {
      validate_sentence_text(cs_line, "cs");
      validate_sentence_text(en_line, "en");
    } catch (const Error& e) {
      throw e.at_line(line_no);
    }
    raw.cs_lines.push_back(cs_line);
    raw.en_lines.push_back(en_line);
  }
  kept_index_of_raw.push_back(raw.cs_lines.size());

  // Merge explicit and blank-line breaks; named breaks win on collisions.
  std::vector<std::pair<std::size_t, std::string>> all;
  for (auto b : blank_breaks) all.emplace_back(b, std::string());
  if (breaks != nullptr) {
    std::string line;
    std::uint64_t bline = 0;
    while (std::getline(*breaks, line)) {
      ++bline;
      const auto trimmed = text::trim(line);
      if (trimmed.empty()) continue;
      const auto fields = text::split(trimmed, '\t');
      if (fields.size() > 2) throw Error(Errc::MalformedLine, "break line has too many fields", bline);
      const auto index = detail::parse_index(fields[0]);
      if (!index) throw Error(Errc::MalformedLine, "break index is not a number", bline);
      if (*index >= kept_index_of_raw.size())
        throw Error(Errc::MalformedLine, "break index past end of input", bline);
      std::string name = fields.size() == 2 ? std::string(fields[1]) : std::string();
      if (!name.empty() && !is_valid_doc_name(name))
        throw Error(Errc::MalformedId, "invalid document name '" + name + "'", bline);
      all.emplace_back(kept_index_of_raw[*index], std::move(name));
    }
  }
  std::stable_sort(all.begin(), all.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  for (auto& [at, name] : all) {
    if (at >= raw.cs_lines.size()) continue;  // trailing separators
    if (!raw.doc_breaks.empty() && raw.doc_breaks.back() == at) {
      if (!name.empty()) {
        if (!raw.doc_names.back().empty() && raw.doc_names.back() != name)
          throw Error(Errc::MalformedLine, "two document names for line " + std::to_string(at));
        raw.doc_names.back() = name;
      }
      continue;
    }
    if (raw.doc_breaks.empty() && at != 0) {
      raw.doc_breaks.push_back(0);
      raw.doc_names.emplace_back();
    }
    raw.doc_breaks.push_back(at);
    raw.doc_names.push_back(std::move(name));
  }
  bool any_named = false;
  for (const auto& n : raw.doc_names) any_named = any_named || !n.empty();
  if (!any_named) raw.doc_names.clear();
  validate_raw_bitext(raw);
  return raw;
}

/// One file of a source document: `count` lines starting at `first_line`.
struct Segment {
  std::size_t doc_index = 0;
  std::size_t file_index = 0;
  std::size_t first_line = 0;
  std::size_t count = 0;

  friend bool operator==(const Segment&, const Segment&) = default;
};

/// Splits every source document into consecutive files of `max_len` lines,
/// the last file holding the remainder. Empty documents are skipped and do
/// not consume a document index.
inline std::vector<Segment> segment_documents(const RawBitext& raw, std::size_t max_len = 15) {
  validate_raw_bitext(raw);
  if (max_len == 0) throw Error(Errc::MalformedConfig, "max_len must be at least 1");
  std::vector<std::size_t> starts = raw.doc_breaks;
  if (starts.empty() || starts.front() != 0) starts.insert(starts.begin(), 0);
  const std::size_t total = raw.cs_lines.size();
  std::vector<Segment> out;
  std::size_t doc_index = 0;
  for (std::size_t d = 0; d < starts.size(); ++d) {
    const std::size_t begin = starts[d];
    const std::size_t end = d + 1 < starts.size() ? starts[d + 1] : total;
    if (begin >= end) continue;
    std::size_t file = 0;
    for (std::size_t at = begin; at < end; at += max_len, ++file)
      out.push_back({doc_index, file, at, std::min(max_len, end - at)});
    ++doc_index;
  }
  return out;
}

namespace detail {

// Document name for each non-empty source document, in order.
inline std::vector<std::string> document_names(const RawBitext& raw) {
  std::vector<std::size_t> starts = raw.doc_breaks;
  std::vector<std::string> names = raw.doc_names;
  if (names.empty()) names.assign(starts.size(), std::string());
  if (starts.empty() || starts.front() != 0) {
    starts.insert(starts.begin(), 0);
    names.insert(names.begin(), std::string());
  }
  std::vector<std::string> out;
  for (std::size_t d = 0; d < starts.size(); ++d) {
    const std::size_t end = d + 1 < starts.size() ? starts[d + 1] : raw.cs_lines.size();
    if (starts[d] >= end) continue;
    out.push_back(names[d].empty() ? "d" + std::to_string(out.size()) : names[d]);
  }
  std::set<std::string_view> seen;
  for (const auto& n : out)
    if (!seen.insert(n).second) throw Error(Errc::MalformedId, "document name '" + n + "' is not unique");
  return out;
}

}  // namespace detail

/// Turns segments into unscored Documents, calling `sink(Document&&)` in
/// segment order. Sentence numbering restarts at 1 in every file.
template <typename Sink>
void assign_ids(std::string_view source, const RawBitext& raw, std::span<const Segment> segments, Sink&& sink) {
  if (!is_valid_source(source)) throw Error(Errc::InvalidSource, "invalid source '" + std::string(source) + "'");
  const auto names = detail::document_names(raw);
  for (const auto& seg : segments) {
    if (seg.doc_index >= names.size() || seg.first_line + seg.count > raw.cs_lines.size() || seg.count == 0)
      throw Error(Errc::LengthMismatch, "segment does not fit the raw bitext");
    std::vector<SentencePair> pairs;
    pairs.reserve(seg.count);
    for (std::size_t k = 0; k < seg.count; ++k) {
      SentencePair p;
      p.id = PairId{std::string(source), names[seg.doc_index], seg.file_index, k + 1};
      p.cs = raw.cs_lines[seg.first_line + k];
      p.en = raw.en_lines[seg.first_line + k];
      pairs.push_back(std::move(p));
    }
    sink(Document(std::move(pairs)));
  }
}

inline std::vector<Document> assign_ids(std::string_view source, const RawBitext& raw,
                                        std::span<const Segment> segments) {
  std::vector<Document> docs;
  assign_ids(source, raw, segments, [&](Document&& d) { docs.push_back(std::move(d)); });
  return docs;
}

}  // namespace gigafilter
