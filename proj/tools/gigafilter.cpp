// Command-line front end. Every filtering subcommand is a pipeline with a
// fixed stage list; `run` takes the stage list from the config file.

#include <CLI11.hpp>

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>

#include "gigafilter/gigafilter.hpp"

namespace fs = std::filesystem;
using namespace gigafilter;

namespace {

enum ExitCode { kOk = 0, kIoError = 1, kConfigError = 2, kParseError = 3, kStageError = 4 };

struct Globals {
  std::optional<unsigned> workers;
  std::string config;
  std::string report;
  bool quiet = false;
};

struct Streams {
  std::string input = "-";
  std::string output = "-";
};

// Subcommand overrides applied on top of the config file.
struct Overrides {
  std::vector<std::string> profiles;
  std::optional<std::size_t> max_words, max_chars, lang_guard;
  std::optional<double> lang_min, adq_min, prefilter_min;
  bool prefilter = false;
  std::string model_a, model_b, scores_in;
  std::vector<std::string> reference;
  std::string synthetic_source;
  bool drop_lang = false, drop_no_diacritics = false, dedup = false;
};

void add_streams(CLI::App* cmd, Streams& s) {
  cmd->add_option("-i,--input", s.input, "Input corpus ('-' for stdin)")->capture_default_str();
  cmd->add_option("-o,--output", s.output, "Output file ('-' for stdout)")->capture_default_str();
}

PipelineConfig base_config(const Globals& g) {
  PipelineConfig cfg = g.config.empty() ? PipelineConfig{} : load_pipeline_config(g.config);
  if (g.workers) {
    cfg.workers = *g.workers;
  } else if (const char* env = std::getenv("GIGAFILTER_WORKERS"); env != nullptr && *env != '\0') {
    const auto n = detail::parse_index(env);
    if (!n || *n == 0 || *n > 4096) throw Error(Errc::MalformedConfig, std::string("bad GIGAFILTER_WORKERS '") + env + "'");
    cfg.workers = static_cast<unsigned>(*n);
  }
  if (!g.report.empty()) cfg.report_path = g.report;
  return cfg;
}

void apply(PipelineConfig& cfg, const Overrides& o) {
  if (!o.profiles.empty()) cfg.profile_paths.assign(o.profiles.begin(), o.profiles.end());
  if (o.max_words) cfg.sent.max_words = *o.max_words;
  if (o.max_chars) cfg.sent.max_chars = *o.max_chars;
  if (o.lang_guard) cfg.sent.lang_rule.min_words = *o.lang_guard;
  if (o.lang_min) cfg.sent.lang_rule.min_score = *o.lang_min;
  if (o.adq_min) cfg.sent.adq_threshold = *o.adq_min;
  if (o.prefilter_min) cfg.sent.prefilter_min_prob = *o.prefilter_min;
  if (!o.scores_in.empty()) {
    cfg.scores_path = o.scores_in;
    cfg.model_a_path.clear();
    cfg.model_b_path.clear();
  }
  if (!o.model_a.empty()) cfg.model_a_path = o.model_a;
  if (!o.model_b.empty()) cfg.model_b_path = o.model_b;
  if (!o.reference.empty()) cfg.reference_paths.assign(o.reference.begin(), o.reference.end());
  if (!o.synthetic_source.empty()) cfg.synthetic_source = o.synthetic_source;
}

class Input {
 public:
  explicit Input(const std::string& path) {
    if (path == "-") return;
    file_.open(path, std::ios::binary);
    if (!file_) throw Error(Errc::Io, "cannot open " + path);
    path_ = path;
  }
  std::istream& stream() { return path_.empty() ? std::cin : file_; }
  const std::string& name() const { return path_.empty() ? stdin_name_ : path_; }

 private:
  std::ifstream file_;
  std::string path_;
  std::string stdin_name_ = "<stdin>";
};

template <typename Fn>
auto in_file(const Input& in, Fn&& fn) {
  try {
    return fn();
  } catch (const Error& e) {
    throw e.with_context(in.name());
  }
}

int run_stages(const Globals& g, const Streams& s, PipelineConfig cfg) {
  cfg.validate();
  const auto res = load_resources(cfg);
  Input in(s.input);
  AtomicOutput out(s.output);
  std::optional<AtomicOutput> report;
  if (!cfg.report_path.empty()) report.emplace(cfg.report_path);
  const auto stats =
      in_file(in, [&] { return run_pipeline(cfg, res, in.stream(), out.stream(), report ? &report->stream() : nullptr); });
  out.commit();
  if (report) report->commit();
  if (!g.quiet) {
    write_stage_report_tsv(std::cerr, stats);
    write_corpus_stats_tsv(std::cerr, stats);
  }
  return kOk;
}

RawBitext read_raw(const std::string& cs, const std::string& en, const std::string& breaks) {
  auto cs_in = open_input(cs);
  auto en_in = open_input(en);
  std::optional<std::ifstream> br;
  if (!breaks.empty()) br.emplace(open_input(breaks));
  return read_raw_bitext(cs_in, en_in, br ? &*br : nullptr);
}

int ingest(const Globals& g, const std::string& cs, const std::string& en, const std::string& breaks,
           const std::string& source, std::size_t max_len, const std::string& output) {
  const auto raw = read_raw(cs, en, breaks);
  const auto segments = segment_documents(raw, max_len == 0 ? std::max<std::size_t>(raw.cs_lines.size(), 1) : max_len);
  AtomicOutput out(output);
  CorpusWriter writer(out.stream(), /*allow_unscored=*/true);
  PipelineStats stats;
  assign_ids(source, raw, segments, [&](Document&& d) {
    writer.write(d);
    stats.add(d);
  });
  out.commit();
  if (!g.quiet) write_corpus_stats_tsv(std::cerr, stats);
  return kOk;
}

int langid_train(const std::string& lang, const std::vector<std::string>& files, const std::string& output) {
  std::vector<std::string> samples;
  for (const auto& f : files) {
    auto in = open_input(f);
    std::string line;
    while (std::getline(in, line))
      if (!text::trim(line).empty()) samples.push_back(line);
  }
  const auto profile = train_profile(samples, lang);
  AtomicOutput out(output);
  profile.save(out.stream());
  out.commit();
  return kOk;
}

int langid_classify(const std::vector<std::string>& profiles, const Streams& s) {
  std::vector<fs::path> paths(profiles.begin(), profiles.end());
  const NgramLanguageIdentifier id(load_profiles(paths));
  Input in(s.input);
  AtomicOutput out(s.output);
  std::string line;
  std::uint64_t line_no = 0;
  while (std::getline(in.stream(), line)) {
    ++line_no;
    if (text::trim(line).empty()) {
      out.stream() << "-\t-\n";
      continue;
    }
    const auto dist = in_file(in, [&] {
      try {
        return id.classify(line);
      } catch (const Error& e) {
        throw e.at_line(line_no);
      }
    });
    out.stream() << dist.argmax() << '\t';
    bool first = true;
    for (const auto& [code, p] : dist.entries()) {
      out.stream() << (first ? "" : ",") << code << '=' << format_score(p);
      first = false;
    }
    out.stream() << '\n';
  }
  out.commit();
  return kOk;
}

int xent_train(const Globals& g, const Streams& s, const std::string& direction, int iterations, bool dedup) {
  Input in(s.input);
  std::vector<SentencePair> pairs;
  in_file(in, [&] {
    CorpusReader reader(in.stream());
    while (auto d = reader.next()) pairs.insert(pairs.end(), d->begin(), d->end());
  });
  LexicalTrainOptions opts;
  opts.iterations = iterations;
  opts.dedup_sentences = dedup;
  const auto model = train_lexical(pairs, parse_direction(direction), opts);
  AtomicOutput out(s.output);
  model.save(out.stream());
  out.commit();
  if (!g.quiet) {
    const auto& h = model.log_likelihood_history();
    for (std::size_t i = 0; i < h.size(); ++i) std::cerr << "iteration " << i << "\tloglik " << h[i] << '\n';
  }
  return kOk;
}

int project(const Streams& s, const std::vector<double>& thresholds) {
  Input in(s.input);
  SizeProjection proj(thresholds);
  in_file(in, [&] {
    CorpusReader reader(in.stream());
    while (auto d = reader.next()) proj.add(*d);
  });
  AtomicOutput out(s.output);
  const auto rows = proj.results();
  write_projection_tsv(out.stream(), rows);
  out.commit();
  return kOk;
}

int stats_cmd(const Streams& s, bool table) {
  Input in(s.input);
  const auto stats = in_file(in, [&] {
    CorpusReader reader(in.stream());
    return corpus_stats(reader);
  });
  AtomicOutput out(s.output);
  if (table) {
    out.stream() << render_stats_table(stats);
  } else {
    write_corpus_stats_tsv(out.stream(), stats);
  }
  out.commit();
  return kOk;
}

int exit_code_for(const Error& e) {
  if (e.code() == Errc::Io) return kIoError;
  switch (classify_errc(e.code())) {
    case ErrorClass::Parse: return kParseError;
    case ErrorClass::Config: return kConfigError;
    case ErrorClass::Stage: return kStageError;
  }
  return kIoError;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Filtering toolkit for document-level Czech-English parallel corpora"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  app.add_option("--workers", g.workers, "Worker threads (default: GIGAFILTER_WORKERS or 1)")
      ->check(CLI::Range(1u, 4096u));
  app.add_option("--config", g.config, "Pipeline config file");
  app.add_option("--report", g.report, "Per-unit keep/drop report (TSV)");
  app.add_flag("--quiet", g.quiet, "No summary on stderr");

  std::function<int()> action;
  Streams streams;
  Overrides o;

  auto* ingest_cmd = app.add_subcommand("ingest", "Aligned raw files to one corpus document per source document");
  auto* segment_cmd = app.add_subcommand("segment", "Aligned raw files to documents of at most --max-len pairs");
  std::string cs_path, en_path, breaks_path, source, output = "-";
  std::size_t max_len = 15;
  for (auto* cmd : {ingest_cmd, segment_cmd}) {
    cmd->add_option("--cs", cs_path, "Czech side, one sentence per line")->required();
    cmd->add_option("--en", en_path, "English side, one sentence per line")->required();
    cmd->add_option("--breaks", breaks_path, "Document break file");
    cmd->add_option("--source", source, "Source identifier")->required();
    cmd->add_option("-o,--output", output, "Output corpus")->capture_default_str();
  }
  segment_cmd->add_option("--max-len", max_len, "Maximum pairs per document file")->capture_default_str();
  ingest_cmd->callback([&] { action = [&] { return ingest(g, cs_path, en_path, breaks_path, source, 0, output); }; });
  segment_cmd->callback(
      [&] { action = [&] { return ingest(g, cs_path, en_path, breaks_path, source, max_len, output); }; });

  auto* langid_cmd = app.add_subcommand("langid", "Language identification profiles");
  langid_cmd->require_subcommand(1);
  auto* lid_train = langid_cmd->add_subcommand("train", "Train a profile from plain-text files");
  std::string lang;
  std::vector<std::string> train_files;
  lid_train->add_option("--lang", lang, "Language code")->required();
  lid_train->add_option("files,--in", train_files, "Training text, one sample per line")->required();
  lid_train->add_option("-o,--output,--out", output, "Profile file")->capture_default_str();
  lid_train->callback([&] { action = [&] { return langid_train(lang, train_files, output); }; });
  auto* lid_classify = langid_cmd->add_subcommand("classify", "Classify each input line");
  lid_classify->add_option("--profiles", o.profiles, "Profile files")->required()->delimiter(',');
  add_streams(lid_classify, streams);
  lid_classify->callback([&] { action = [&] { return langid_classify(o.profiles, streams); }; });

  auto* xent_cmd = app.add_subcommand("xent", "Lexical translation models and adequacy scores");
  xent_cmd->require_subcommand(1);
  auto* x_train = xent_cmd->add_subcommand("train", "Train a word translation model with EM");
  std::string direction = "cs-en";
  int iterations = 5;
  bool dedup_sentences = false;
  x_train->add_option("--direction", direction, "cs-en or en-cs")->capture_default_str();
  x_train->add_option("--iterations", iterations, "EM iterations")->capture_default_str();
  x_train->add_flag("--dedup-sentences", dedup_sentences, "Train on distinct pairs only");
  add_streams(x_train, streams);
  x_train->callback([&] { action = [&] { return xent_train(g, streams, direction, iterations, dedup_sentences); }; });
  auto* x_score = xent_cmd->add_subcommand("score", "Fill the adequacy score column");
  for (auto* cmd : {x_score}) {
    cmd->add_option("--model-a", o.model_a, "cs-en model");
    cmd->add_option("--model-b", o.model_b, "en-cs model");
    cmd->add_option("--scores-in", o.scores_in, "Precomputed cross-entropies (pair_id, h_a, h_b)");
    add_streams(cmd, streams);
  }
  x_score->callback([&] {
    action = [&] {
      auto cfg = base_config(g);
      apply(cfg, o);
      cfg.stages = {StageKind::ScoreAdq};
      return run_stages(g, streams, cfg);
    };
  });

  auto* score_cmd = app.add_subcommand("score", "Fill the language and adequacy score columns");
  score_cmd->add_option("--profiles", o.profiles, "Profile files")->delimiter(',');
  score_cmd->add_option("--model-a", o.model_a, "cs-en model");
  score_cmd->add_option("--model-b", o.model_b, "en-cs model");
  score_cmd->add_option("--scores-in", o.scores_in, "Precomputed cross-entropies (pair_id, h_a, h_b)");
  add_streams(score_cmd, streams);
  score_cmd->callback([&] {
    action = [&] {
      auto cfg = base_config(g);
      apply(cfg, o);
      cfg.stages = {StageKind::ScoreLang, StageKind::ScoreAdq};
      return run_stages(g, streams, cfg);
    };
  });

  auto* doc_cmd = app.add_subcommand("docfilter", "Document-level filters (all three when none is selected)");
  doc_cmd->add_flag("--drop-lang", o.drop_lang, "Drop documents whose sides are in the wrong language");
  doc_cmd->add_flag("--drop-no-diacritics", o.drop_no_diacritics, "Drop documents without Czech diacritics");
  doc_cmd->add_flag("--dedup", o.dedup, "Drop repeated documents");
  doc_cmd->add_option("--profiles", o.profiles, "Profile files")->delimiter(',');
  add_streams(doc_cmd, streams);
  doc_cmd->callback([&] {
    action = [&] {
      auto cfg = base_config(g);
      apply(cfg, o);
      const bool all = !o.drop_lang && !o.drop_no_diacritics && !o.dedup;
      cfg.stages.clear();
      if (all || o.drop_lang) cfg.stages.push_back(StageKind::DocLanguage);
      if (all || o.drop_no_diacritics) cfg.stages.push_back(StageKind::DocDiacritics);
      if (all || o.dedup) cfg.stages.push_back(StageKind::DocDedup);
      return run_stages(g, streams, cfg);
    };
  });

  auto* sent_cmd = app.add_subcommand("sentfilter", "Sentence-level filters on scored input");
  sent_cmd->add_option("--max-words", o.max_words, "Maximum words per side");
  sent_cmd->add_option("--max-chars", o.max_chars, "Maximum characters per side");
  sent_cmd->add_option("--lang-min", o.lang_min, "Minimum scaled language score");
  sent_cmd->add_option("--lang-guard", o.lang_guard, "Language rule applies above this many words");
  sent_cmd->add_option("--adq-min", o.adq_min, "Minimum adequacy score");
  sent_cmd->add_flag("--prefilter", o.prefilter, "Also apply the raw-probability prefilter");
  sent_cmd->add_option("--prefilter-min", o.prefilter_min, "Minimum raw language probability");
  sent_cmd->add_option("--profiles", o.profiles, "Profile files for --prefilter")->delimiter(',');
  add_streams(sent_cmd, streams);
  sent_cmd->callback([&] {
    action = [&] {
      auto cfg = base_config(g);
      apply(cfg, o);
      cfg.stages = {StageKind::SentLength, StageKind::SentLangScore, StageKind::SentAdq};
      if (o.prefilter) cfg.stages.push_back(StageKind::Prefilter);
      return run_stages(g, streams, cfg);
    };
  });

  auto* sub_cmd = app.add_subcommand("subtract", "Remove pairs present in reference corpora");
  sub_cmd->add_option("--ref", o.reference, "Reference corpus")->required();
  add_streams(sub_cmd, streams);
  sub_cmd->callback([&] {
    action = [&] {
      auto cfg = base_config(g);
      apply(cfg, o);
      cfg.stages = {StageKind::Subtract};
      return run_stages(g, streams, cfg);
    };
  });

  auto* proj_cmd = app.add_subcommand("project", "Surviving pair counts per adequacy threshold");
  std::vector<double> thresholds{0.02, 0.1, 0.25, 0.5};
  proj_cmd->add_option("--thresholds", thresholds, "Comma-separated thresholds")->delimiter(',')->capture_default_str();
  add_streams(proj_cmd, streams);
  proj_cmd->callback([&] { action = [&] { return project(streams, thresholds); }; });

  auto* stats_sub = app.add_subcommand("stats", "Corpus size statistics");
  bool table = false;
  stats_sub->add_flag("--table", table, "Human-readable table instead of TSV");
  add_streams(stats_sub, streams);
  stats_sub->callback([&] { action = [&] { return stats_cmd(streams, table); }; });

  auto* run_cmd = app.add_subcommand("run", "Run the configured pipeline (default stages without --config)");
  add_streams(run_cmd, streams);
  run_cmd->add_option("--profiles", o.profiles, "Profile files")->delimiter(',');
  run_cmd->callback([&] {
    action = [&] {
      auto cfg = base_config(g);
      apply(cfg, o);
      return run_stages(g, streams, cfg);
    };
  });

  auto* synth_cmd = app.add_subcommand("mark-synthetic", "Set all scores to 1, optionally relabel the source");
  synth_cmd->add_option("--source", o.synthetic_source, "New source identifier");
  add_streams(synth_cmd, streams);
  synth_cmd->callback([&] {
    action = [&] {
      auto cfg = base_config(g);
      apply(cfg, o);
      cfg.stages = {StageKind::MarkSynthetic};
      return run_stages(g, streams, cfg);
    };
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kConfigError;
  }

  try {
    std::ios::sync_with_stdio(false);
    return action();
  } catch (const Error& e) {
    std::cerr << "gigafilter: " << e.what() << '\n';
    return exit_code_for(e);
  } catch (const std::exception& e) {
    std::cerr << "gigafilter: " << e.what() << '\n';
    return kIoError;
  }
}
