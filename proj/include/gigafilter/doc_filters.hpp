#pragma once

// Document-level filters. Each keeps or drops a whole document.

#include <absl/container/flat_hash_set.h>
#include <openssl/evp.h>

#include <algorithm>
#include <array>
#include <cstdint>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "gigafilter/corpus_model.hpp"
#include "gigafilter/error.hpp"
#include "gigafilter/langid.hpp"
#include "gigafilter/text.hpp"
#include "gigafilter/verdict.hpp"

namespace gigafilter {

/// The fifteen accented letters of Czech, lower and upper case.
inline constexpr std::u32string_view kCzechDiacritics =
    U"áčďéěíňóřšťúůýžÁČĎÉĚÍŇÓŘŠŤÚŮÝŽ";

struct DocFilterConfig {
  std::string expected_cs = "cs";
  std::string expected_en = "en";
  std::u32string diacritics{kCzechDiacritics};

  void validate() const {
    if (expected_cs.empty() || expected_en.empty())
      throw Error(Errc::MalformedConfig, "expected language codes must be non-empty");
    if (diacritics.empty()) throw Error(Errc::MalformedConfig, "diacritics set is empty");
  }
};

/// Drops the document when either side, classified as a whole, is not the
/// expected language. Reasons: `cs_side=<lang>`, `en_side=<lang>`.
inline Verdict filter_doc_language(const Document& doc, const LanguageIdentifier& id, const DocFilterConfig& cfg) {
  if (const auto cs = side_language(doc, Side::Cs, id); cs != cfg.expected_cs) return Verdict::drop("cs_side=" + cs);
  if (const auto en = side_language(doc, Side::En, id); en != cfg.expected_en) return Verdict::drop("en_side=" + en);
  return Verdict::kept();
}

inline bool contains_any(std::string_view s, std::u32string_view set) {
  for (std::size_t pos = 0; pos < s.size();) {
    if (static_cast<unsigned char>(s[pos]) < 0x80) {
      if (set.find(static_cast<char32_t>(s[pos])) != std::u32string_view::npos) return true;
      ++pos;
      continue;
    }
    if (set.find(text::next_code_point(s, pos)) != std::u32string_view::npos) return true;
  }
  return false;
}

/// Drops the document when no cs sentence contains a character from the
/// diacritics set. The en side is not inspected. Reason: `no_diacritics`.
inline Verdict filter_doc_diacritics(const Document& doc, const DocFilterConfig& cfg) {
  for (const auto& p : doc)
    if (contains_any(p.cs, cfg.diacritics)) return Verdict::kept();
  return Verdict::drop("no_diacritics");
}

using Digest = std::array<std::uint8_t, 32>;

/// SHA-256 of the ordered (cs, en) texts, serialized as `cs TAB en LF` per
/// pair. IDs and scores do not take part.
inline Digest content_digest(const Document& doc) {
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), &EVP_MD_CTX_free);
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1)
    throw Error(Errc::Io, "SHA-256 initialization failed");
  for (const auto& p : doc) {
    EVP_DigestUpdate(ctx.get(), p.cs.data(), p.cs.size());
    EVP_DigestUpdate(ctx.get(), "\t", 1);
    EVP_DigestUpdate(ctx.get(), p.en.data(), p.en.size());
    EVP_DigestUpdate(ctx.get(), "\n", 1);
  }
  Digest out{};
  unsigned int len = 0;
  if (EVP_DigestFinal_ex(ctx.get(), out.data(), &len) != 1 || len != out.size())
    throw Error(Errc::Io, "SHA-256 finalization failed");
  return out;
}

/// Exact document deduplication over a stream. Must be fed in stream order;
/// the first occurrence survives. Memory: one digest per distinct document.
class DocumentDeduplicator {
 public:
  /// Records `digest`; false if it was seen before.
  bool insert(const Digest& digest) { return seen_.insert(digest).second; }

  Verdict check(const Document& doc) { return insert(content_digest(doc)) ? Verdict::kept() : Verdict::drop("duplicate"); }

  std::size_t distinct() const noexcept { return seen_.size(); }

 private:
  absl::flat_hash_set<Digest> seen_;
};

inline std::vector<Document> dedup_documents(std::span<const Document> docs) {
  DocumentDeduplicator dedup;
  std::vector<Document> out;
  for (const auto& d : docs)
    if (dedup.check(d).keep) out.push_back(d);
  return out;
}

}  // namespace gigafilter
