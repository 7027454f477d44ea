#pragma once

// Stage configuration and the streaming, order-preserving pipeline driver.

#include <algorithm>
#include <array>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <istream>
#include <memory>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "gigafilter/corpus_model.hpp"
#include "gigafilter/doc_filters.hpp"
#include "gigafilter/error.hpp"
#include "gigafilter/langid.hpp"
#include "gigafilter/ordered_parallel.hpp"
#include "gigafilter/sent_filters.hpp"
#include "gigafilter/stats.hpp"
#include "gigafilter/text.hpp"
#include "gigafilter/tsv_io.hpp"
#include "gigafilter/verdict.hpp"
#include "gigafilter/xent.hpp"

namespace gigafilter {

enum class StageKind {
  DocLanguage,
  DocDiacritics,
  DocDedup,
  SentLength,
  SentLangScore,
  SentAdq,
  Prefilter,
  Subtract,
  ScoreLang,
  ScoreAdq,
  MarkSynthetic,
};

/// Document filters must all run before any sentence filter. Score stages
/// only fill in fields and may go anywhere.
enum class StageLevel { Document, Sentence, Transform };

inline constexpr std::array<std::pair<StageKind, std::string_view>, 11> kStageNames = {{
    {StageKind::DocLanguage, "doc-language"},
    {StageKind::DocDiacritics, "doc-diacritics"},
    {StageKind::DocDedup, "doc-dedup"},
    {StageKind::SentLength, "sent-length"},
    {StageKind::SentLangScore, "sent-lang-score"},
    {StageKind::SentAdq, "sent-adq"},
    {StageKind::Prefilter, "prefilter"},
    {StageKind::Subtract, "subtract"},
    {StageKind::ScoreLang, "score-lang"},
    {StageKind::ScoreAdq, "score-adq"},
    {StageKind::MarkSynthetic, "mark-synthetic"},
}};

inline std::string_view stage_name(StageKind k) {
  for (const auto& [kind, name] : kStageNames)
    if (kind == k) return name;
  return "?";
}

inline StageKind parse_stage_kind(std::string_view name) {
  for (const auto& [kind, n] : kStageNames)
    if (n == name) return kind;
  throw Error(Errc::MalformedConfig, "unknown stage '" + std::string(name) + "'");
}

inline StageLevel stage_level(StageKind k) {
  switch (k) {
    case StageKind::DocLanguage:
    case StageKind::DocDiacritics:
    case StageKind::DocDedup:
      return StageLevel::Document;
    case StageKind::ScoreLang:
    case StageKind::ScoreAdq:
    case StageKind::MarkSynthetic:
      return StageLevel::Transform;
    default:
      return StageLevel::Sentence;
  }
}

/// doc-language, doc-diacritics, doc-dedup, sent-length, sent-lang-score,
/// sent-adq.
inline std::vector<StageKind> default_stages() {
  return {StageKind::DocLanguage, StageKind::DocDiacritics, StageKind::DocDedup,
          StageKind::SentLength,  StageKind::SentLangScore, StageKind::SentAdq};
}

struct PipelineConfig {
  std::vector<StageKind> stages = default_stages();
  DocFilterConfig doc;
  SentFilterConfig sent;
  std::vector<std::filesystem::path> profile_paths;
  std::filesystem::path model_a_path;
  std::filesystem::path model_b_path;
  std::filesystem::path scores_path;
  std::vector<std::filesystem::path> reference_paths;
  /// Replacement source for mark-synthetic; empty keeps the IDs.
  std::string synthetic_source;
  unsigned workers = 1;
  /// Documents handed to the workers per round.
  std::size_t batch_documents = 256;
  std::filesystem::path report_path;

  bool has(StageKind k) const { return std::find(stages.begin(), stages.end(), k) != stages.end(); }

  void validate() const {
    if (workers == 0) throw Error(Errc::MalformedConfig, "worker count must be positive");
    if (batch_documents == 0) throw Error(Errc::MalformedConfig, "batch size must be positive");
    std::optional<StageKind> first_sentence;
    for (std::size_t i = 0; i < stages.size(); ++i) {
      if (std::find(stages.begin(), stages.begin() + static_cast<std::ptrdiff_t>(i), stages[i]) !=
          stages.begin() + static_cast<std::ptrdiff_t>(i))
        throw Error(Errc::MalformedConfig, "stage " + std::string(stage_name(stages[i])) + " listed twice");
      const auto level = stage_level(stages[i]);
      if (level == StageLevel::Sentence && !first_sentence) first_sentence = stages[i];
      if (level == StageLevel::Document && first_sentence)
        throw Error(Errc::MalformedConfig, "document stage " + std::string(stage_name(stages[i])) +
                                               " follows sentence stage " +
                                               std::string(stage_name(*first_sentence)));
    }
    doc.validate();
    sent.validate();
    if (!synthetic_source.empty() && !is_valid_source(synthetic_source))
      throw Error(Errc::InvalidSource, "invalid source '" + synthetic_source + "'");
    const bool needs_profiles = has(StageKind::DocLanguage) || has(StageKind::ScoreLang) || has(StageKind::Prefilter);
    if (needs_profiles && profile_paths.empty())
      throw Error(Errc::MalformedConfig, "language stages need at least one profile");
    if (has(StageKind::ScoreAdq) && scores_path.empty() && (model_a_path.empty() || model_b_path.empty()))
      throw Error(Errc::MalformedConfig, "score-adq needs model_a and model_b, or a score file");
    if (has(StageKind::Subtract) && reference_paths.empty())
      throw Error(Errc::MalformedConfig, "subtract needs a reference corpus");
  }
};

namespace detail {

inline std::vector<std::string> split_list(std::string_view v) {
  std::vector<std::string> out;
  for (auto part : text::split(v, ',')) {
    const auto t = text::trim(part);
    if (!t.empty()) out.emplace_back(t);
  }
  return out;
}

inline std::size_t parse_count(std::string_view v, std::uint64_t line) {
  const auto n = parse_index(v);
  if (!n) throw Error(Errc::MalformedConfig, "expected a non-negative integer, got '" + std::string(v) + "'", line);
  return static_cast<std::size_t>(*n);
}

inline double parse_real(std::string_view v, std::uint64_t line) {
  double d = 0;
  if (!parse_double(v, d) || !std::isfinite(d))
    throw Error(Errc::MalformedConfig, "expected a number, got '" + std::string(v) + "'", line);
  return d;
}

}  // namespace detail

/// Reads the `[section]` / `key = value` format. Relative paths resolve
/// against `base_dir`. Lines starting with '#' are comments. See
/// docs/config.md for the full list of keys.
inline PipelineConfig parse_pipeline_config(std::istream& in, const std::filesystem::path& base_dir = {}) {
  PipelineConfig cfg;
  std::string section;
  std::string raw;
  std::uint64_t line_no = 0;
  auto path = [&](std::string_view v) {
    std::filesystem::path p{std::string(v)};
    return p.is_relative() && !base_dir.empty() ? base_dir / p : p;
  };
  while (std::getline(in, raw)) {
    ++line_no;
    const auto line = text::trim(raw);
    if (line.empty() || line[0] == '#') continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw Error(Errc::MalformedConfig, "unterminated section header", line_no);
      section = std::string(text::trim(line.substr(1, line.size() - 2)));
      static constexpr std::array<std::string_view, 11> known = {
          "pipeline",  "langid",   "doc-language", "doc-diacritics", "sent-length",   "sent-lang-score",
          "sent-adq",  "prefilter", "score-adq",   "subtract",       "mark-synthetic"};
      if (std::find(known.begin(), known.end(), section) == known.end())
        throw Error(Errc::MalformedConfig, "unknown section [" + section + "]", line_no);
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw Error(Errc::MalformedConfig, "expected key = value", line_no);
    const std::string key(text::trim(line.substr(0, eq)));
    const auto value = text::trim(line.substr(eq + 1));
    auto unknown = [&] {
      return Error(Errc::MalformedConfig, "unknown key '" + key + "' in [" + section + "]", line_no);
    };
    if (section.empty()) throw Error(Errc::MalformedConfig, "key outside of any section", line_no);
    try {
      if (section == "pipeline") {
        if (key == "stages") {
          cfg.stages.clear();
          for (const auto& s : detail::split_list(value)) cfg.stages.push_back(parse_stage_kind(s));
        } else if (key == "workers") {
          cfg.workers = static_cast<unsigned>(detail::parse_count(value, line_no));
        } else if (key == "batch_documents") {
          cfg.batch_documents = detail::parse_count(value, line_no);
        } else if (key == "report") {
          cfg.report_path = path(value);
        } else {
          throw unknown();
        }
      } else if (section == "langid") {
        if (key != "profiles") throw unknown();
        cfg.profile_paths.clear();
        for (const auto& p : detail::split_list(value)) cfg.profile_paths.push_back(path(p));
      } else if (section == "doc-language") {
        if (key == "expected_cs") {
          cfg.doc.expected_cs = std::string(value);
          cfg.sent.expected_cs = cfg.doc.expected_cs;
        } else if (key == "expected_en") {
          cfg.doc.expected_en = std::string(value);
          cfg.sent.expected_en = cfg.doc.expected_en;
        } else {
          throw unknown();
        }
      } else if (section == "doc-diacritics") {
        if (key != "characters") throw unknown();
        if (text::find_invalid_utf8(value)) throw Error(Errc::MalformedConfig, "characters must be UTF-8");
        cfg.doc.diacritics.clear();
        for (char32_t c : text::decode(value))
          if (!text::is_space(c)) cfg.doc.diacritics.push_back(c);
      } else if (section == "sent-length") {
        if (key == "max_words") cfg.sent.max_words = detail::parse_count(value, line_no);
        else if (key == "max_chars") cfg.sent.max_chars = detail::parse_count(value, line_no);
        else throw unknown();
      } else if (section == "sent-lang-score") {
        if (key == "min_words") cfg.sent.lang_rule.min_words = detail::parse_count(value, line_no);
        else if (key == "min_score") cfg.sent.lang_rule.min_score = detail::parse_real(value, line_no);
        else throw unknown();
      } else if (section == "sent-adq") {
        if (key != "threshold") throw unknown();
        cfg.sent.adq_threshold = detail::parse_real(value, line_no);
      } else if (section == "prefilter") {
        if (key != "min_prob") throw unknown();
        cfg.sent.prefilter_min_prob = detail::parse_real(value, line_no);
      } else if (section == "score-adq") {
        if (key == "model_a") cfg.model_a_path = path(value);
        else if (key == "model_b") cfg.model_b_path = path(value);
        else if (key == "scores") cfg.scores_path = path(value);
        else throw unknown();
      } else if (section == "subtract") {
        if (key != "reference") throw unknown();
        cfg.reference_paths.clear();
        for (const auto& p : detail::split_list(value)) cfg.reference_paths.push_back(path(p));
      } else if (section == "mark-synthetic") {
        if (key != "source") throw unknown();
        cfg.synthetic_source = std::string(value);
      }
    } catch (const Error& e) {
      throw e.line() ? e : e.at_line(line_no);
    }
  }
  return cfg;
}

inline PipelineConfig load_pipeline_config(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw Error(Errc::Io, "cannot open config " + file.string());
  try {
    return parse_pipeline_config(in, file.parent_path());
  } catch (const Error& e) {
    throw e.with_context(file.string());
  }
}

/// Loaded models and tables; immutable and shared by the workers.
struct PipelineResources {
  std::shared_ptr<const LanguageIdentifier> langid;
  std::shared_ptr<const ConditionalModel> model_a;
  std::shared_ptr<const ConditionalModel> model_b;
  std::shared_ptr<const CorpusSubtractor> reference;
};

inline std::ifstream open_input(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw Error(Errc::Io, "cannot open " + p.string());
  return in;
}

template <typename Fn>
auto with_file_context(const std::filesystem::path& p, Fn&& fn) {
  try {
    return fn();
  } catch (const Error& e) {
    throw e.with_context(p.string());
  }
}

inline std::vector<LanguageProfile> load_profiles(std::span<const std::filesystem::path> paths) {
  std::vector<LanguageProfile> profiles;
  for (const auto& p : paths) {
    auto in = open_input(p);
    profiles.push_back(with_file_context(p, [&] { return LanguageProfile::load(in); }));
  }
  return profiles;
}

inline std::shared_ptr<const LexicalModel> load_lexical_model(const std::filesystem::path& p) {
  auto in = open_input(p);
  return std::make_shared<const LexicalModel>(with_file_context(p, [&] { return LexicalModel::load(in); }));
}

/// Loads what the configured stages need, and nothing else.
inline PipelineResources load_resources(const PipelineConfig& cfg) {
  PipelineResources r;
  if (cfg.has(StageKind::DocLanguage) || cfg.has(StageKind::ScoreLang) || cfg.has(StageKind::Prefilter))
    r.langid = std::make_shared<const NgramLanguageIdentifier>(load_profiles(cfg.profile_paths));
  if (cfg.has(StageKind::ScoreAdq)) {
    if (!cfg.scores_path.empty()) {
      auto in = open_input(cfg.scores_path);
      const auto table = with_file_context(cfg.scores_path, [&] { return read_score_table(in); });
      r.model_a = std::make_shared<const ScoreFileProvider>(Direction::CsToEn, table);
      r.model_b = std::make_shared<const ScoreFileProvider>(Direction::EnToCs, table);
    } else {
      r.model_a = load_lexical_model(cfg.model_a_path);
      r.model_b = load_lexical_model(cfg.model_b_path);
      check_directions(*r.model_a, *r.model_b);
    }
  }
  if (cfg.has(StageKind::Subtract)) {
    auto sub = std::make_shared<CorpusSubtractor>();
    for (const auto& p : cfg.reference_paths) {
      auto in = open_input(p);
      with_file_context(p, [&] {
        CorpusReader reader(in);
        while (auto d = reader.next()) sub->add(*d);
      });
    }
    r.reference = std::move(sub);
  }
  return r;
}

/// Assigns (1, 1, 1) to every pair and optionally relabels the source.
/// Document boundaries are untouched whatever the length.
inline void mark_synthetic(Document& doc, const std::string& source = {}) {
  for (std::size_t i = 0; i < doc.size(); ++i) doc.set_scores(i, ScoreTriple::synthetic());
  if (!source.empty()) doc.relabel_source(source);
}

namespace detail {

inline constexpr std::size_t kNoStage = static_cast<std::size_t>(-1);

struct PairDrop {
  std::size_t stage = kNoStage;
  std::string reason;
};

// Everything a worker can decide about one document without shared state.
// Stage outcomes are computed as if the document reached every stage; the
// sequencer walks them in order and stops where the document actually ends.
struct DocOutcome {
  std::optional<Document> doc;
  std::vector<PairDrop> pair_drops;
  std::size_t doc_drop_stage = kNoStage;
  std::string doc_drop_reason;
  Digest digest{};
  std::size_t error_stage = kNoStage;
  std::exception_ptr error;
};

inline void process_document(DocOutcome& out, const PipelineConfig& cfg, const PipelineResources& res) {
  Document& doc = *out.doc;
  out.pair_drops.assign(doc.size(), {});
  auto alive = [&](std::size_t i) { return out.pair_drops[i].stage == kNoStage; };
  for (std::size_t k = 0; k < cfg.stages.size(); ++k) {
    try {
      auto doc_verdict = [&](Verdict v) {
        if (v.keep) return false;
        out.doc_drop_stage = k;
        out.doc_drop_reason = std::move(v.reason);
        return true;
      };
      auto each_pair = [&](auto&& filter) {
        for (std::size_t i = 0; i < doc.size(); ++i) {
          if (!alive(i)) continue;
          if (auto v = filter(doc[i]); !v.keep) out.pair_drops[i] = {k, std::move(v.reason)};
        }
      };
      switch (cfg.stages[k]) {
        case StageKind::DocLanguage:
          if (doc_verdict(filter_doc_language(doc, *res.langid, cfg.doc))) return;
          break;
        case StageKind::DocDiacritics:
          if (doc_verdict(filter_doc_diacritics(doc, cfg.doc))) return;
          break;
        case StageKind::DocDedup:
          out.digest = content_digest(doc);
          break;
        case StageKind::SentLength:
          each_pair([&](const SentencePair& p) { return filter_length(p, cfg.sent); });
          break;
        case StageKind::SentLangScore:
          each_pair([&](const SentencePair& p) { return filter_lang_score(p, cfg.sent); });
          break;
        case StageKind::SentAdq:
          each_pair([&](const SentencePair& p) { return filter_adq(p, cfg.sent); });
          break;
        case StageKind::Prefilter:
          each_pair([&](const SentencePair& p) { return prefilter_strict(p, *res.langid, cfg.sent); });
          break;
        case StageKind::Subtract:
          each_pair([&](const SentencePair& p) { return res.reference->check(p); });
          break;
        case StageKind::ScoreLang:
          for (std::size_t i = 0; i < doc.size(); ++i) {
            if (!alive(i)) continue;
            ScoreTriple s = doc[i].scores;
            try {
              s.cs_lang = scaled_lang_score(res.langid->classify(doc[i].cs), cfg.sent.expected_cs);
              s.en_lang = scaled_lang_score(res.langid->classify(doc[i].en), cfg.sent.expected_en);
            } catch (const Error& e) {
              throw e.with_context(format_pair_id(doc[i].id));
            }
            doc.set_scores(i, s);
          }
          break;
        case StageKind::ScoreAdq:
          for (std::size_t i = 0; i < doc.size(); ++i) {
            if (!alive(i)) continue;
            ScoreTriple s = doc[i].scores;
            s.adq = adq_score(crossent_score(pair_cross_entropies(doc[i], *res.model_a, *res.model_b)));
            doc.set_scores(i, s);
          }
          break;
        case StageKind::MarkSynthetic:
          mark_synthetic(doc, cfg.synthetic_source);
          break;
      }
    } catch (...) {
      out.error_stage = k;
      out.error = std::current_exception();
      return;
    }
  }
}

inline void write_report_row(std::ostream* report, std::string_view unit, std::string_view verdict,
                             std::string_view stage, std::string_view reason) {
  if (report == nullptr) return;
  *report << unit << '\t' << verdict << '\t' << stage << '\t' << reason << '\n';
}

}  // namespace detail

inline constexpr std::string_view kUnitReportHeader = "unit\tverdict\tstage\treason";

/// Streams documents from `in` through the configured stages and writes the
/// survivors to `out`. Workers compute stage verdicts per document; a single
/// sequencer applies them in input order together with deduplication and the
/// statistics, so output and report bytes do not depend on `cfg.workers`.
///
/// When `report` is given it receives one row per dropped unit (a document
/// key for document stages, a pair ID for sentence stages) and one `keep`
/// row per emitted document.
inline PipelineStats run_pipeline(const PipelineConfig& cfg, const PipelineResources& res, std::istream& in,
                                  std::ostream& out, std::ostream* report = nullptr) {
  cfg.validate();
  PipelineStats stats;
  for (auto k : cfg.stages) {
    StageRecord rec;
    rec.name = stage_name(k);
    stats.per_stage.push_back(std::move(rec));
  }
  if (report) *report << kUnitReportHeader << '\n';

  CorpusReader reader(in);
  CorpusWriter writer(out, /*allow_unscored=*/true);
  DocumentDeduplicator dedup;
  const std::size_t batch = cfg.batch_documents * cfg.workers;
  std::vector<detail::DocOutcome> outcomes;
  bool more = true;

  while (more) {
    outcomes.clear();
    while (outcomes.size() < batch) {
      auto doc = reader.next();
      if (!doc) {
        more = false;
        break;
      }
      outcomes.emplace_back().doc = std::move(doc);
    }
    parallel_for(outcomes.size(), cfg.workers,
                 [&](std::size_t i) { detail::process_document(outcomes[i], cfg, res); });

    for (auto& o : outcomes) {
      const Document& doc = *o.doc;
      const std::string key = doc.key().str();
      std::size_t live = doc.size();
      bool doc_alive = true;
      for (std::size_t k = 0; k < cfg.stages.size() && doc_alive; ++k) {
        auto& rec = stats.per_stage[k];
        const auto name = stage_name(cfg.stages[k]);
        if (o.error_stage == k) {
          try {
            std::rethrow_exception(o.error);
          } catch (const Error& e) {
            throw e.with_context("stage " + std::string(name) + ", document " + key);
          }
        }
        rec.pairs_in += live;
        rec.documents_in += 1;
        std::string doc_reason;
        if (o.doc_drop_stage == k) {
          doc_reason = o.doc_drop_reason;
        } else if (cfg.stages[k] == StageKind::DocDedup && !dedup.insert(o.digest)) {
          doc_reason = "duplicate";
        }
        if (!doc_reason.empty()) {
          rec.pairs_dropped += live;
          rec.documents_dropped += 1;
          rec.reasons[std::string(Verdict::drop(doc_reason).reason_code())] += live;
          detail::write_report_row(report, key, "drop", name, doc_reason);
          doc_alive = false;
          break;
        }
        if (stage_level(cfg.stages[k]) != StageLevel::Sentence) continue;
        for (std::size_t i = 0; i < doc.size(); ++i) {
          const auto& d = o.pair_drops[i];
          if (d.stage != k) continue;
          --live;
          rec.pairs_dropped += 1;
          rec.reasons[std::string(Verdict::drop(d.reason).reason_code())] += 1;
          detail::write_report_row(report, format_pair_id(doc[i].id), "drop", name, d.reason);
        }
        if (live == 0) {
          rec.documents_dropped += 1;
          doc_alive = false;
        }
      }
      if (!doc_alive) continue;
      if (live == doc.size()) {
        writer.write(doc);
        stats.add(doc);
      } else {
        std::vector<SentencePair> kept;
        kept.reserve(live);
        for (std::size_t i = 0; i < doc.size(); ++i)
          if (o.pair_drops[i].stage == detail::kNoStage) kept.push_back(doc[i]);
        Document survivor(std::move(kept));
        writer.write(survivor);
        stats.add(survivor);
      }
      detail::write_report_row(report, key, "keep", "-", "-");
    }
  }
  out.flush();
  if (!out) throw Error(Errc::Io, "write failure");
  return stats;
}

/// Writes to `<path>.partial` and renames over `path` on commit(). An
/// uncommitted file is removed on destruction. The path "-" means stdout.
class AtomicOutput {
 public:
  explicit AtomicOutput(std::filesystem::path path) : path_(std::move(path)) {
    if (path_ == "-") return;
    tmp_ = path_;
    tmp_ += ".partial";
    file_.open(tmp_, std::ios::binary | std::ios::trunc);
    if (!file_) throw Error(Errc::Io, "cannot create " + tmp_.string());
  }
  AtomicOutput(const AtomicOutput&) = delete;
  AtomicOutput& operator=(const AtomicOutput&) = delete;

  ~AtomicOutput() {
    if (!tmp_.empty() && !committed_) {
      file_.close();
      std::error_code ec;
      std::filesystem::remove(tmp_, ec);
    }
  }

  std::ostream& stream() { return tmp_.empty() ? static_cast<std::ostream&>(std::cout) : file_; }

  void commit() {
    if (tmp_.empty()) {
      std::cout.flush();
      if (!std::cout) throw Error(Errc::Io, "write failure on stdout");
      committed_ = true;
      return;
    }
    file_.close();
    if (!file_) throw Error(Errc::Io, "write failure on " + tmp_.string());
    std::error_code ec;
    std::filesystem::rename(tmp_, path_, ec);
    if (ec) throw Error(Errc::Io, "cannot rename " + tmp_.string() + ": " + ec.message());
    committed_ = true;
  }

 private:
  std::filesystem::path path_;
  std::filesystem::path tmp_;
  std::ofstream file_;
  bool committed_ = false;
};

}  // namespace gigafilter
