#pragma once

#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

namespace nmtk::textnorm {

struct Rewrite {
  std::string pattern;      // ECMAScript regex over UTF-8 bytes
  std::string replacement;  // `$1`-style back-references
};

/// Ordered, versioned table of punctuation rewrites.
///
/// Rules run once, in order, over the whole line. The builtin table is a
/// subset of the Moses normalize-punctuation rewrites, reordered so that a
/// single pass reaches a fixed point (normalize(normalize(x)) ==
/// normalize(x)).
///
/// File format: first line `nmtk-rules <version>`, then one rule per line as
/// `pattern<TAB>replacement`. Blank lines are ignored.
class NormalizationRules {
 public:
  NormalizationRules(std::string version, std::vector<Rewrite> rules);
  ~NormalizationRules();
  NormalizationRules(NormalizationRules&&) noexcept;
  NormalizationRules& operator=(NormalizationRules&&) noexcept;

  static const NormalizationRules& builtin();
  static NormalizationRules parse(std::string_view text);
  static NormalizationRules load(const std::filesystem::path& path);

  std::string apply(std::string_view text) const;
  std::string serialize() const;

  const std::string& version() const { return version_; }
  std::span<const Rewrite> rules() const { return rules_; }

 private:
  struct Compiled;
  std::string version_;
  std::vector<Rewrite> rules_;
  std::unique_ptr<Compiled> compiled_;
};

inline constexpr std::string_view kBuiltinRulesVersion = "moses-subset-v1";

std::string normalize_punct(std::string_view text);
std::string normalize_punct(std::string_view text, const NormalizationRules& rules);

/// Words that keep a trailing period when tokenized (`Dr.`, `z.B.`).
class NonBreakingPrefixes {
 public:
  NonBreakingPrefixes() = default;
  explicit NonBreakingPrefixes(std::unordered_set<std::string> words)
      : words_(std::move(words)) {}

  /// Shipped list for `en`, `de` or `ru`; empty for anything else.
  static const NonBreakingPrefixes& builtin(std::string_view lang);
  /// One prefix per line, UTF-8. Lines starting with `#` are comments.
  static NonBreakingPrefixes load(const std::filesystem::path& path);

  bool contains(std::string_view word) const {
    return words_.contains(std::string(word));
  }
  std::size_t size() const { return words_.size(); }

 private:
  std::unordered_set<std::string> words_;
};

/// Splits whitespace-separated chunks and peels leading `"([{` and trailing
/// `")]},;:!?%` and period runs off each chunk. Internal punctuation
/// (hyphens, apostrophes, decimal points) stays attached.
std::vector<std::string> word_tokenize(std::string_view text,
                                       const NonBreakingPrefixes& prefixes);
std::vector<std::string> word_tokenize(std::string_view text);

/// Inverse of word_tokenize for text with standard spacing: closing
/// punctuation attaches left, opening brackets attach right, and straight
/// double quotes alternate between opening and closing.
std::string detokenize(std::span<const std::string> tokens);

/// Rewrites each pair of ASCII double quotes `"x"` as `„x“`. An unmatched
/// trailing quote is left as is.
std::string german_quote_postprocess(std::string_view text);

}  // namespace nmtk::textnorm
