#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>

namespace gigafilter {

enum class Errc {
  // input parsing
  MalformedId,
  MalformedLine,
  ScoreOutOfRange,
  MixedDocumentBlock,
  UnorderedSentences,
  InvalidUtf8,
  InvalidText,
  MalformedProfile,
  MalformedModel,
  MalformedScoreFile,
  // configuration
  MalformedConfig,
  InvalidSource,
  // processing
  UnscoredPair,
  LengthMismatch,
  InsufficientData,
  EmptyProfileSet,
  EmptyText,
  EmptyCorpus,
  MissingScore,
  EmptyTarget,
  NegativeInput,
  Io,
};

inline const char* errc_name(Errc code) {
  switch (code) {
    case Errc::MalformedId: return "MalformedId";
    case Errc::MalformedLine: return "MalformedLine";
    case Errc::ScoreOutOfRange: return "ScoreOutOfRange";
    case Errc::MixedDocumentBlock: return "MixedDocumentBlock";
    case Errc::UnorderedSentences: return "UnorderedSentences";
    case Errc::InvalidUtf8: return "InvalidUtf8";
    case Errc::InvalidText: return "InvalidText";
    case Errc::MalformedProfile: return "MalformedProfile";
    case Errc::MalformedModel: return "MalformedModel";
    case Errc::MalformedScoreFile: return "MalformedScoreFile";
    case Errc::MalformedConfig: return "MalformedConfig";
    case Errc::InvalidSource: return "InvalidSource";
    case Errc::UnscoredPair: return "UnscoredPair";
    case Errc::LengthMismatch: return "LengthMismatch";
    case Errc::InsufficientData: return "InsufficientData";
    case Errc::EmptyProfileSet: return "EmptyProfileSet";
    case Errc::EmptyText: return "EmptyText";
    case Errc::EmptyCorpus: return "EmptyCorpus";
    case Errc::MissingScore: return "MissingScore";
    case Errc::EmptyTarget: return "EmptyTarget";
    case Errc::NegativeInput: return "NegativeInput";
    case Errc::Io: return "Io";
  }
  return "Unknown";
}

enum class ErrorClass { Parse, Config, Stage };

inline ErrorClass classify_errc(Errc code) {
  switch (code) {
    case Errc::MalformedId:
    case Errc::MalformedLine:
    case Errc::ScoreOutOfRange:
    case Errc::MixedDocumentBlock:
    case Errc::UnorderedSentences:
    case Errc::InvalidUtf8:
    case Errc::InvalidText:
    case Errc::MalformedProfile:
    case Errc::MalformedModel:
    case Errc::MalformedScoreFile:
      return ErrorClass::Parse;
    case Errc::MalformedConfig:
    case Errc::InvalidSource:
      return ErrorClass::Config;
    default:
      return ErrorClass::Stage;
  }
}

/// Every failure raised by the library. `line()` is the 1-based input line
/// when the error is tied to a position in a text input, 0 otherwise.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& message, std::uint64_t line = 0)
      : std::runtime_error(render(code, message, line)),
        code_(code),
        line_(line),
        detail_(message) {}

  Errc code() const noexcept { return code_; }
  std::uint64_t line() const noexcept { return line_; }
  const std::string& detail() const noexcept { return detail_; }

  /// Same error, attributed to an input line.
  Error at_line(std::uint64_t line) const { return Error(code_, detail_, line); }
  /// Same error, with context prepended to the message.
  Error with_context(const std::string& context) const {
    return Error(code_, context + ": " + detail_, line_);
  }

 private:
  static std::string render(Errc code, const std::string& message, std::uint64_t line) {
    std::string out = errc_name(code);
    if (line != 0) out += " at line " + std::to_string(line);
    out += ": ";
    out += message;
    return out;
  }

  Errc code_;
  std::uint64_t line_;
  std::string detail_;
};

}  // namespace gigafilter
