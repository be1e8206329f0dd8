#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "nmtk/scorer.hpp"
#include "nmtk/tokens.hpp"

namespace nmtk::decode {

struct DecodeConfig {
  std::size_t beam_size = 4;
  std::size_t max_len = 64;
  std::size_t n_candidates = 15;
  /// GNMT divisor ((5 + n) / 6)^alpha on finished scores; 0 disables it.
  double length_penalty_alpha = 0.0;
  /// Shallow-fusion weight on the language model; 0 disables fusion.
  double fusion_lambda = 0.0;
  std::size_t sample_k = 500;
  std::uint64_t seed = 0;
  TokenId eos_id = kEosId;

  void validate() const;
};

struct Candidate {
  TokenSequence tokens;  // ends with eos when complete
  double fwd_logprob = 0.0;
  std::optional<double> lm_logprob;
  std::optional<double> rev_logprob;
  /// Search score: sum of log P_fwd + lambda_sf * log P_lm per step.
  double fused_score = 0.0;
  /// Set by noisy_channel_rerank.
  std::optional<double> combined_score;
  /// False when no eos was produced within max_len.
  bool complete = true;

  bool operator==(const Candidate&) const = default;
};

/// One search step: score + log p_fwd (+ lambda * log p_lm when fusing).
/// Shared by every search routine so that scores agree bit for bit.
double extend_score(double score, double p_fwd, std::optional<double> p_lm, double lambda);

/// Beam search under the shallow-fusion recurrence
///
///     S(y_1..n) = S(y_1..n-1) + log P_fwd(y_n | y_<n, x) + lambda * log P_lm(y_n | y_<n)
///
/// with S(empty) = 0. At each step all expansions of the live beam are
/// ranked and the best `beam_size` kept; those ending in eos move to the
/// finished list. Returns up to min(n_candidates, beam_size) finished
/// hypotheses, best first. Ties go to the lexicographically smaller token
/// sequence, then the shorter one, then the earlier-created one. If nothing
/// finishes, the best unfinished hypothesis is returned with
/// `complete == false`.
///
/// `lm` is only consulted when `fusion_lambda > 0`.
std::vector<Candidate> beam_search(const models::Scorer& fwd, const models::Scorer* lm,
                                   TokenSpan source, const DecodeConfig& cfg);

inline constexpr std::uint64_t kMaxExactSearchSpace = 1'000'000;

/// Scores every eos-terminated sequence of length <= max_len with the same
/// recurrence and returns the best one (same tie-break as beam_search).
/// Throws SearchSpaceTooLarge when vocab^max_len exceeds 10^6, and
/// NoCompletedHypothesis when no sequence has finite score.
Candidate exact_search(const models::Scorer& fwd, const models::Scorer* lm, TokenSpan source,
                       std::size_t max_len, double fusion_lambda, TokenId eos_id = kEosId);

/// Ancestral sampling restricted at each step to the `sample_k` most
/// probable tokens (ties to the lower id), renormalized. `fwd_logprob`
/// holds the unrestricted model log-probability of the sample.
Candidate topk_sample(const models::Scorer& fwd, TokenSpan source, const DecodeConfig& cfg);

struct NoisyChannelConfig {
  double lambda = 0.6;
  /// Divide the reverse and LM terms by their token counts before combining.
  bool normalize_components = false;

  void validate() const;
};

/// Fills rev_logprob (log P(source | candidate) under `rev`), lm_logprob
/// (log P(candidate) under `lm`) and
///
///     combined = fwd_logprob + lambda * (rev_logprob + lm_logprob)
///
/// then stable-sorts by combined score, best first. The forward term is the
/// search-time value, already ensembled if the search used an ensemble.
/// With lambda == 0 the combined score is fwd_logprob exactly.
std::vector<Candidate> noisy_channel_rerank(std::vector<Candidate> cands, const models::Scorer& rev,
                                            const models::Scorer& lm, const NoisyChannelConfig& cfg,
                                            TokenSpan source, TokenId eos_id = kEosId);

/// Sum of log P(tokens[t] | tokens[<t], source) under `scorer`.
double sequence_logprob(const models::Scorer& scorer, TokenSpan source, TokenSpan tokens);

/// `idx<TAB>rank<TAB>fwd<TAB>lm<TAB>rev<TAB>combined<TAB>tokens`, with `-`
/// for missing scores and tokens as space-separated ids.
std::string format_candidate_line(std::size_t idx, std::size_t rank, const Candidate& c);

struct CandidateLine {
  std::size_t idx = 0;
  std::size_t rank = 0;
  Candidate candidate;
};
CandidateLine parse_candidate_line(std::string_view line);

TokenSequence parse_ids(std::string_view text);
std::string format_ids(TokenSpan ids);

}  // namespace nmtk::decode
