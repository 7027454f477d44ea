#pragma once

#include <string>
#include <string_view>
#include <utility>

namespace gigafilter {

/// Outcome of a filter. Drops carry a machine-readable reason of the form
/// `code=value` (or just `code`).
struct Verdict {
  bool keep = true;
  std::string reason;

  static Verdict kept() { return {}; }
  static Verdict drop(std::string reason) { return {false, std::move(reason)}; }

  /// The part of the reason before '='.
  std::string_view reason_code() const {
    const std::string_view r = reason;
    return r.substr(0, r.find('='));
  }

  friend bool operator==(const Verdict&, const Verdict&) = default;
};

}  // namespace gigafilter
