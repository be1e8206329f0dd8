#include "nmtk/decode.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "nmtk/error.hpp"
#include "nmtk/numfmt.hpp"
#include "nmtk/rng.hpp"

namespace nmtk::decode {
namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

struct Hyp {
  TokenSequence tokens;
  double score = 0.0;
  double fwd = 0.0;
  double lm = 0.0;
  std::uint64_t serial = 0;
};

double length_penalty(std::size_t len, double alpha) {
  return std::pow((5.0 + static_cast<double>(len)) / 6.0, alpha);
}

// Finished-hypothesis order: score desc, tokens lexicographic asc, shorter,
// then creation order.
bool ranks_before(double sa, const TokenSequence& a, std::uint64_t ia, double sb, const TokenSequence& b,
                  std::uint64_t ib) {
  if (sa != sb) return sa > sb;
  if (a != b) {
    return std::lexicographical_compare(a.begin(), a.end(), b.begin(), b.end());
  }
  if (a.size() != b.size()) return a.size() < b.size();
  return ia < ib;
}

void check_vocab(const models::Scorer& fwd, const models::Scorer* lm, double lambda) {
  if (lambda < 0.0 || !std::isfinite(lambda)) fail(ErrorCode::InvalidArgument, "decode: fusion lambda must be >= 0");
  if (lambda > 0.0) {
    if (!lm) fail(ErrorCode::InvalidArgument, "decode: fusion lambda > 0 needs a language model");
    if (lm->vocab_size() != fwd.vocab_size()) {
      fail(ErrorCode::VocabMismatch, "decode: language model vocabulary differs from the forward model");
    }
  }
}

Candidate to_candidate(const Hyp& h, bool fused, double alpha, bool complete) {
  Candidate c;
  c.tokens = h.tokens;
  c.fwd_logprob = h.fwd;
  if (fused) c.lm_logprob = h.lm;
  c.fused_score = alpha > 0.0 ? h.score / length_penalty(h.tokens.size(), alpha) : h.score;
  c.complete = complete;
  return c;
}

}  // namespace

void DecodeConfig::validate() const {
  if (beam_size < 1) fail(ErrorCode::InvalidArgument, "decode: beam_size must be >= 1");
  if (max_len < 1) fail(ErrorCode::InvalidArgument, "decode: max_len must be >= 1");
  if (n_candidates < 1) fail(ErrorCode::InvalidArgument, "decode: n_candidates must be >= 1");
  if (sample_k < 1) fail(ErrorCode::InvalidArgument, "decode: sample_k must be >= 1");
  if (length_penalty_alpha < 0.0) fail(ErrorCode::InvalidArgument, "decode: length penalty must be >= 0");
  if (fusion_lambda < 0.0) fail(ErrorCode::InvalidArgument, "decode: fusion lambda must be >= 0");
}

void NoisyChannelConfig::validate() const {
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) fail(ErrorCode::InvalidArgument, "rerank: lambda must be >= 0");
}

double extend_score(double score, double p_fwd, std::optional<double> p_lm, double lambda) {
  const double s = score + std::log(p_fwd);
  if (!p_lm) return s;
  return s + lambda * std::log(*p_lm);
}

std::vector<Candidate> beam_search(const models::Scorer& fwd, const models::Scorer* lm, TokenSpan source,
                                   const DecodeConfig& cfg) {
  cfg.validate();
  if (source.empty()) fail(ErrorCode::InvalidArgument, "beam_search: source is empty");
  check_vocab(fwd, lm, cfg.fusion_lambda);
  const bool fused = cfg.fusion_lambda > 0.0;
  const std::size_t vocab = fwd.vocab_size();
  const std::size_t cap = std::min(cfg.n_candidates, cfg.beam_size);
  const TokenSequence no_source;

  struct Expansion {
    std::size_t parent;
    TokenId token;
    double score;
    double fwd;
    double lm;
  };

  std::uint64_t serial = 0;
  std::vector<Hyp> live(1);
  live[0].serial = serial++;
  std::vector<Hyp> finished;
  std::optional<Hyp> best_unfinished;

  for (std::size_t step = 0; step < cfg.max_len && !live.empty(); ++step) {
    const bool last_step = step + 1 == cfg.max_len;
    std::vector<Expansion> expansions;
    for (std::size_t h = 0; h < live.size(); ++h) {
      const auto pf = fwd.next_dist(source, live[h].tokens);
      models::Distribution pl;
      if (fused) pl = lm->next_dist(no_source, live[h].tokens);
      for (std::size_t w = 0; w < vocab; ++w) {
        if (!(pf[w] > 0.0)) continue;
        if (fused && !(pl[w] > 0.0)) continue;
        const std::optional<double> p_lm = fused ? std::optional<double>(pl[w]) : std::nullopt;
        expansions.push_back({h, static_cast<TokenId>(w), extend_score(live[h].score, pf[w], p_lm, cfg.fusion_lambda),
                              live[h].fwd + std::log(pf[w]), fused ? live[h].lm + std::log(pl[w]) : 0.0});
      }
    }
    if (expansions.empty()) break;

    // Parents share a length, so comparing (parent tokens, token) is the
    // lexicographic order of the extended sequences.
    auto before = [&](const Expansion& a, const Expansion& b) {
      if (a.score != b.score) return a.score > b.score;
      if (a.parent != b.parent) {
        const auto& ta = live[a.parent].tokens;
        const auto& tb = live[b.parent].tokens;
        if (ta != tb) return std::lexicographical_compare(ta.begin(), ta.end(), tb.begin(), tb.end());
        return live[a.parent].serial < live[b.parent].serial;
      }
      return a.token < b.token;
    };

    auto make = [&](const Expansion& e) {
      Hyp h;
      h.tokens = live[e.parent].tokens;
      h.tokens.push_back(e.token);
      h.score = e.score;
      h.fwd = e.fwd;
      h.lm = e.lm;
      h.serial = serial++;
      return h;
    };

    if (last_step) {
      // Only eos can complete now; the rest can only serve as a fallback.
      std::vector<Expansion> ends;
      const Expansion* best_open = nullptr;
      for (const auto& e : expansions) {
        if (e.token == cfg.eos_id) {
          ends.push_back(e);
        } else if (!best_open || before(e, *best_open)) {
          best_open = &e;
        }
      }
      const std::size_t keep = std::min(cfg.beam_size, ends.size());
      std::partial_sort(ends.begin(), ends.begin() + static_cast<std::ptrdiff_t>(keep), ends.end(), before);
      for (std::size_t i = 0; i < keep; ++i) finished.push_back(make(ends[i]));
      if (best_open && finished.empty()) best_unfinished = make(*best_open);
      live.clear();
      break;
    }

    const std::size_t keep = std::min(cfg.beam_size, expansions.size());
    std::partial_sort(expansions.begin(), expansions.begin() + static_cast<std::ptrdiff_t>(keep), expansions.end(),
                      before);
    std::vector<Hyp> next;
    for (std::size_t i = 0; i < keep; ++i) {
      auto h = make(expansions[i]);
      if (expansions[i].token == cfg.eos_id) {
        finished.push_back(std::move(h));
      } else {
        next.push_back(std::move(h));
      }
    }
    if (!next.empty() && (!best_unfinished || next.front().score > best_unfinished->score)) {
      best_unfinished = next.front();
    }
    live = std::move(next);

    // Step scores are <= 0, so without a length penalty no live hypothesis
    // can overtake a finished one that already beats it strictly.
    if (cfg.length_penalty_alpha == 0.0 && finished.size() >= cap && !live.empty()) {
      std::vector<double> scores;
      for (const auto& f : finished) scores.push_back(f.score);
      std::nth_element(scores.begin(), scores.begin() + static_cast<std::ptrdiff_t>(cap - 1), scores.end(),
                       std::greater<>());
      const double worst_kept = scores[cap - 1];
      double best_live = kNegInf;
      for (const auto& h : live) best_live = std::max(best_live, h.score);
      if (worst_kept > best_live) break;
    }
  }

  std::vector<Candidate> out;
  if (finished.empty()) {
    if (!best_unfinished) fail(ErrorCode::NoCompletedHypothesis, "beam_search: no hypothesis has finite score");
    out.push_back(to_candidate(*best_unfinished, fused, 0.0, false));
    return out;
  }
  std::vector<Candidate> cands;
  std::vector<std::uint64_t> serials;
  for (const auto& f : finished) {
    cands.push_back(to_candidate(f, fused, cfg.length_penalty_alpha, true));
    serials.push_back(f.serial);
  }
  std::vector<std::size_t> order(cands.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return ranks_before(cands[a].fused_score, cands[a].tokens, serials[a], cands[b].fused_score, cands[b].tokens,
                        serials[b]);
  });
  for (std::size_t i = 0; i < std::min(cap, order.size()); ++i) out.push_back(std::move(cands[order[i]]));
  return out;
}

Candidate exact_search(const models::Scorer& fwd, const models::Scorer* lm, TokenSpan source, std::size_t max_len,
                       double fusion_lambda, TokenId eos_id) {
  if (source.empty()) fail(ErrorCode::InvalidArgument, "exact_search: source is empty");
  if (max_len < 1) fail(ErrorCode::InvalidArgument, "exact_search: max_len must be >= 1");
  check_vocab(fwd, lm, fusion_lambda);
  const std::size_t vocab = fwd.vocab_size();
  {
    std::uint64_t space = 1;
    for (std::size_t i = 0; i < max_len; ++i) {
      space *= vocab;
      if (space > kMaxExactSearchSpace) {
        fail(ErrorCode::SearchSpaceTooLarge, "exact_search: vocab^max_len exceeds 10^6");
      }
    }
  }
  const bool fused = fusion_lambda > 0.0;
  const TokenSequence no_source;

  std::optional<Hyp> best;
  std::uint64_t serial = 0;
  Hyp node;

  auto visit = [&](auto&& self, const Hyp& h) -> void {
    const auto pf = fwd.next_dist(source, h.tokens);
    models::Distribution pl;
    if (fused) pl = lm->next_dist(no_source, h.tokens);
    for (std::size_t w = 0; w < vocab; ++w) {
      if (!(pf[w] > 0.0)) continue;
      if (fused && !(pl[w] > 0.0)) continue;
      const TokenId tok = static_cast<TokenId>(w);
      if (tok != eos_id && h.tokens.size() + 1 >= max_len) continue;
      Hyp child;
      child.tokens = h.tokens;
      child.tokens.push_back(tok);
      child.score = extend_score(h.score, pf[w], fused ? std::optional<double>(pl[w]) : std::nullopt, fusion_lambda);
      child.fwd = h.fwd + std::log(pf[w]);
      child.lm = fused ? h.lm + std::log(pl[w]) : 0.0;
      child.serial = serial++;
      if (tok == eos_id) {
        if (!best || ranks_before(child.score, child.tokens, child.serial, best->score, best->tokens, best->serial)) {
          best = std::move(child);
        }
      } else {
        self(self, child);
      }
    }
  };
  visit(visit, node);

  if (!best) fail(ErrorCode::NoCompletedHypothesis, "exact_search: no eos-terminated sequence has finite score");
  return to_candidate(*best, fused, 0.0, true);
}

Candidate topk_sample(const models::Scorer& fwd, TokenSpan source, const DecodeConfig& cfg) {
  cfg.validate();
  Rng rng(cfg.seed);
  const std::size_t vocab = fwd.vocab_size();
  Candidate c;
  c.complete = false;
  std::vector<std::size_t> ids(vocab);
  for (std::size_t step = 0; step < cfg.max_len; ++step) {
    const auto p = fwd.next_dist(source, c.tokens);
    std::iota(ids.begin(), ids.end(), 0);
    const std::size_t k = std::min(cfg.sample_k, vocab);
    std::partial_sort(ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(k), ids.end(),
                      [&](std::size_t a, std::size_t b) { return p[a] != p[b] ? p[a] > p[b] : a < b; });
    double mass = 0.0;
    for (std::size_t i = 0; i < k; ++i) mass += p[ids[i]];
    if (!(mass > 0.0)) fail(ErrorCode::Format, "topk_sample: scorer returned no probability mass");

    const double u = rng.uniform() * mass;
    double acc = 0.0;
    std::size_t pick = ids[0];
    for (std::size_t i = 0; i < k; ++i) {
      if (!(p[ids[i]] > 0.0)) break;
      acc += p[ids[i]];
      pick = ids[i];
      if (u < acc) break;
    }
    c.tokens.push_back(static_cast<TokenId>(pick));
    c.fwd_logprob += std::log(p[pick]);
    if (static_cast<TokenId>(pick) == cfg.eos_id) {
      c.complete = true;
      break;
    }
  }
  c.fused_score = c.fwd_logprob;
  return c;
}

double sequence_logprob(const models::Scorer& scorer, TokenSpan source, TokenSpan tokens) {
  double total = 0.0;
  for (std::size_t t = 0; t < tokens.size(); ++t) {
    const auto tok = tokens[t];
    if (tok < 0 || static_cast<std::size_t>(tok) >= scorer.vocab_size()) {
      fail(ErrorCode::VocabMismatch, "score: token id " + std::to_string(tok) + " outside scorer vocabulary");
    }
    const auto d = scorer.next_dist(source, tokens.subspan(0, t));
    total += std::log(d[static_cast<std::size_t>(tok)]);
  }
  return total;
}

std::vector<Candidate> noisy_channel_rerank(std::vector<Candidate> cands, const models::Scorer& rev,
                                            const models::Scorer& lm, const NoisyChannelConfig& cfg, TokenSpan source,
                                            TokenId eos_id) {
  cfg.validate();
  if (cands.empty()) fail(ErrorCode::EmptyCandidateList, "noisy_channel_rerank: no candidates");

  TokenSequence channel_target(source.begin(), source.end());
  if (channel_target.empty() || channel_target.back() != eos_id) channel_target.push_back(eos_id);
  const TokenSequence no_source;

  for (auto& c : cands) {
    TokenSpan conditioning = c.tokens;
    if (!conditioning.empty() && conditioning.back() == eos_id) conditioning = conditioning.first(conditioning.size() - 1);
    double rev_lp = sequence_logprob(rev, conditioning, channel_target);
    double lm_lp = sequence_logprob(lm, no_source, c.tokens);
    if (cfg.normalize_components) {
      rev_lp /= static_cast<double>(channel_target.size());
      if (!c.tokens.empty()) lm_lp /= static_cast<double>(c.tokens.size());
    }
    c.rev_logprob = rev_lp;
    c.lm_logprob = lm_lp;
    c.combined_score = cfg.lambda == 0.0 ? c.fwd_logprob : c.fwd_logprob + cfg.lambda * (rev_lp + lm_lp);
  }
  std::stable_sort(cands.begin(), cands.end(),
                   [](const Candidate& a, const Candidate& b) { return *a.combined_score > *b.combined_score; });
  return cands;
}

std::string format_ids(TokenSpan ids) {
  std::string out;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (i) out += ' ';
    out += std::to_string(ids[i]);
  }
  return out;
}

TokenSequence parse_ids(std::string_view text) {
  TokenSequence out;
  std::size_t pos = 0;
  while (pos < text.size()) {
    const auto start = text.find_first_not_of(" \t\r", pos);
    if (start == std::string_view::npos) break;
    auto end = text.find_first_of(" \t\r", start);
    if (end == std::string_view::npos) end = text.size();
    const auto tok = text.substr(start, end - start);
    TokenId id = 0;
    auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), id);
    if (ec != std::errc() || ptr != tok.data() + tok.size()) {
      fail(ErrorCode::Format, "expected a token id, got '" + std::string(tok) + "'");
    }
    out.push_back(id);
    pos = end;
  }
  return out;
}

std::string format_candidate_line(std::size_t idx, std::size_t rank, const Candidate& c) {
  auto opt = [](const std::optional<double>& v) { return v ? format_double(*v) : std::string("-"); };
  return std::to_string(idx) + "\t" + std::to_string(rank) + "\t" + format_double(c.fwd_logprob) + "\t" +
         opt(c.lm_logprob) + "\t" + opt(c.rev_logprob) + "\t" + opt(c.combined_score) + "\t" + format_ids(c.tokens);
}

CandidateLine parse_candidate_line(std::string_view line) {
  std::vector<std::string_view> cols;
  std::size_t pos = 0;
  for (;;) {
    const auto tab = line.find('\t', pos);
    cols.push_back(line.substr(pos, tab == std::string_view::npos ? std::string_view::npos : tab - pos));
    if (tab == std::string_view::npos) break;
    pos = tab + 1;
  }
  if (cols.size() != 7) fail(ErrorCode::Format, "candidate line: expected 7 tab-separated columns");
  auto num = [](std::string_view s) {
    double v = 0.0;
    if (!parse_double(s, v)) fail(ErrorCode::Format, "candidate line: bad number '" + std::string(s) + "'");
    return v;
  };
  auto opt = [&](std::string_view s) -> std::optional<double> {
    if (s == "-") return std::nullopt;
    return num(s);
  };
  CandidateLine out;
  out.idx = static_cast<std::size_t>(num(cols[0]));
  out.rank = static_cast<std::size_t>(num(cols[1]));
  out.candidate.fwd_logprob = num(cols[2]);
  out.candidate.fused_score = out.candidate.fwd_logprob;
  out.candidate.lm_logprob = opt(cols[3]);
  out.candidate.rev_logprob = opt(cols[4]);
  out.candidate.combined_score = opt(cols[5]);
  out.candidate.tokens = parse_ids(cols[6]);
  out.candidate.complete = !out.candidate.tokens.empty() && out.candidate.tokens.back() == kEosId;
  return out;
}

}  // namespace nmtk::decode
