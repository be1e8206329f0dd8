#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "nmtk/decode.hpp"
#include "nmtk/tokens.hpp"

namespace nmtk::eval {

using Words = std::vector<std::string>;

inline constexpr std::size_t kMaxOrder = 4;
inline constexpr double kSentenceSmoothingEps = 1e-9;

/// Clipped n-gram match and total counts plus lengths. Summing the stats
/// of shards gives the stats of the whole corpus.
struct BleuStats {
  std::array<std::uint64_t, kMaxOrder> matches{};
  std::array<std::uint64_t, kMaxOrder> totals{};
  std::uint64_t hyp_len = 0;
  std::uint64_t ref_len = 0;

  BleuStats& operator+=(const BleuStats& other);
  bool operator==(const BleuStats&) const = default;
};

BleuStats bleu_stats(std::span<const std::string> hyp, std::span<const std::string> ref);

struct BleuResult {
  double score = 0.0;  // 0..100
  std::array<double, kMaxOrder> precisions{};
  double brevity_penalty = 0.0;
  std::uint64_t hyp_len = 0;
  std::uint64_t ref_len = 0;
};

/// Orders with no hypothesis n-grams count as precision 1. A zero match
/// count becomes `eps` when eps > 0. An empty hypothesis gets BP 0.
BleuResult bleu_from_stats(const BleuStats& stats, double eps = 0.0);

/// Unsmoothed 4-gram corpus BLEU. Throws LengthMismatch, EmptyCorpus.
BleuResult corpus_bleu(std::span<const Words> hyps, std::span<const Words> refs);

/// Single-pair BLEU with zero match counts floored at 1e-9. Throws
/// EmptyReference.
double sentence_bleu(std::span<const std::string> hyp, std::span<const std::string> ref);

struct OracleChoice {
  std::size_t index = 0;
  double score = 0.0;
};

/// Highest sentence BLEU; the first candidate wins ties. Throws
/// EmptyCandidateList.
OracleChoice oracle_select(std::span<const Words> cands, std::span<const std::string> ref);

/// Same on decoder candidates; ids are compared as words with a trailing
/// eos dropped.
OracleChoice oracle_select(std::span<const decode::Candidate> cands, TokenSpan ref, TokenId eos_id = kEosId);

/// Ids as words, trailing eos dropped.
Words ids_as_words(TokenSpan ids, TokenId eos_id = kEosId);

Words split_words(std::string_view line);

}  // namespace nmtk::eval
