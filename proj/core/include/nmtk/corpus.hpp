#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "nmtk/langid.hpp"

namespace nmtk::corpus {

enum class Provenance { Bitext, Backtranslated, R2lDistilled, Biomed, News };

std::string_view to_string(Provenance p);
std::optional<Provenance> parse_provenance(std::string_view name);

struct ParallelExample {
  std::string source;
  std::string target;
  std::optional<double> external_score;  // cleanliness score in [0, 1]
  Provenance provenance = Provenance::Bitext;
  std::uint64_t sequence_no = 0;

  bool operator==(const ParallelExample&) const = default;
};

/// Parses `source<TAB>target[<TAB>score[<TAB>provenance]]`. An empty score
/// field means "no score". Throws MalformedLine.
ParallelExample parse_tsv_line(std::string_view line, std::uint64_t sequence_no);
/// Inverse of parse_tsv_line. The provenance column is written only when
/// `with_provenance` is set.
std::string format_tsv_line(const ParallelExample& ex, bool with_provenance = false);

struct FilterConfig {
  std::size_t max_len_tokens = 250;
  double max_len_ratio = 1.3;
  double min_external_score = 0.6;
  std::size_t min_len_tokens = 1;
  /// Expected (source, target) language codes. Without a value the language
  /// rules are skipped.
  std::optional<std::pair<std::string, std::string>> required_langs;
  /// Length bounds on the source side only; for monolingual streams.
  bool monolingual = false;

  static FilterConfig monolingual_lengths(std::size_t min_len, std::size_t max_len);
  void validate() const;
};

enum class FilterRule { LangidSrc, LangidTgt, TooShort, TooLong, Ratio, Score, Malformed };
inline constexpr std::size_t kNumFilterRules = 7;

std::string_view to_string(FilterRule rule);

/// Per-rule rejection counts. Each rejected line is attributed to the first
/// rule it fails, so kept + sum(rejected) == total.
struct FilterReport {
  std::uint64_t total = 0;
  std::uint64_t kept = 0;
  std::array<std::uint64_t, kNumFilterRules> rejected{};

  std::uint64_t count(FilterRule rule) const { return rejected[static_cast<std::size_t>(rule)]; }
  void reject(FilterRule rule) {
    ++total;
    ++rejected[static_cast<std::size_t>(rule)];
  }
  void keep() {
    ++total;
    ++kept;
  }
  bool consistent() const;

  FilterReport& operator+=(const FilterReport& other);
  bool operator==(const FilterReport&) const = default;

  /// `key<TAB>count` lines: total, kept, then one line per rule.
  std::string serialize() const;
};

/// Whitespace-delimited word count after word tokenization.
std::size_t token_length(std::string_view text);

/// Rules in order: langid_src, langid_tgt, too_short, too_long, ratio,
/// score. Returns the first failing rule, or nullopt to keep. The ratio is
/// max(ls/lt, lt/ls); pairs without an external score skip the score rule.
std::optional<FilterRule> filter_pair(const ParallelExample& pair, const FilterConfig& cfg,
                                      const langid::LangIdModel* langid);

struct FilterResult {
  std::vector<ParallelExample> kept;
  FilterReport report;
};

FilterResult filter_corpus(std::span<const ParallelExample> examples, const FilterConfig& cfg,
                           const langid::LangIdModel* langid, unsigned threads = 1);

using MalformedLineHandler = std::function<void(std::uint64_t line_no, const std::string& what)>;

/// Streaming variant over TSV (or one sentence per line when
/// `cfg.monolingual`). Input is processed in fixed-size blocks; within a
/// block pairs are filtered on `threads` workers and written back in input
/// order. Kept lines are copied verbatim. Malformed lines are reported to
/// `on_malformed` and counted.
FilterReport filter_stream(std::istream& in, std::ostream& out, const FilterConfig& cfg,
                           const langid::LangIdModel* langid, unsigned threads = 1,
                           const MalformedLineHandler& on_malformed = {});

/// Reverses the whitespace-separated target tokens. An involution unless
/// `retag` is set, in which case provenance is overwritten as well.
ParallelExample reverse_target(const ParallelExample& pair,
                               std::optional<Provenance> retag = std::nullopt);

struct WeightedCorpus {
  std::span<const ParallelExample> examples;
  double weight = 1.0;
};

/// Draws `n` examples: each pick selects corpus i with probability
/// weight_i / sum(weights), then takes the next element of a seeded
/// permutation of that corpus, reshuffling when it runs out. Output
/// sequence numbers are 0..n-1.
std::vector<ParallelExample> mix_sample(std::span<const WeightedCorpus> corpora, std::size_t n,
                                        std::uint64_t seed);

}  // namespace nmtk::corpus
