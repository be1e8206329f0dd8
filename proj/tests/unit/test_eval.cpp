#include <gtest/gtest.h>

#include <cmath>
#include <map>

#include "fixtures.hpp"
#include "nmtk/decode.hpp"
#include "nmtk/error.hpp"
#include "nmtk/eval.hpp"

using namespace nmtk;
using namespace nmtk::eval;

namespace {

ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error";
  return ErrorCode::InvalidArgument;
}

Words w(std::string_view s) { return split_words(s); }

// Straightforward BLEU written from the definition, used as a reference.
double reference_bleu(const std::vector<Words>& hyps, const std::vector<Words>& refs, double eps) {
  double match[4] = {0, 0, 0, 0}, total[4] = {0, 0, 0, 0};
  double hl = 0, rl = 0;
  for (std::size_t s = 0; s < hyps.size(); ++s) {
    hl += static_cast<double>(hyps[s].size());
    rl += static_cast<double>(refs[s].size());
    for (std::size_t n = 1; n <= 4; ++n) {
      std::map<Words, int> h, r;
      for (std::size_t i = 0; i + n <= hyps[s].size(); ++i) ++h[Words(hyps[s].begin() + i, hyps[s].begin() + i + n)];
      for (std::size_t i = 0; i + n <= refs[s].size(); ++i) ++r[Words(refs[s].begin() + i, refs[s].begin() + i + n)];
      for (const auto& [g, c] : h) {
        total[n - 1] += c;
        auto it = r.find(g);
        if (it != r.end()) match[n - 1] += std::min(c, it->second);
      }
    }
  }
  if (hl == 0) return 0.0;
  double log_sum = 0;
  for (int n = 0; n < 4; ++n) {
    double p = total[n] == 0 ? 1.0 : match[n] / total[n];
    if (match[n] == 0 && total[n] > 0) {
      if (eps == 0) return 0.0;
      p = eps / total[n];
    }
    log_sum += std::log(p);
  }
  const double bp = hl >= rl ? 1.0 : std::exp(1.0 - rl / hl);
  return 100.0 * bp * std::exp(log_sum / 4.0);
}

Words random_words(Rng& rng, std::size_t max_len, std::size_t vocab) {
  Words out;
  const auto len = rng.below(max_len + 1);
  for (std::uint64_t i = 0; i < len; ++i) out.push_back("w" + std::to_string(rng.below(vocab)));
  return out;
}

}  // namespace

TEST(CorpusBleu, PerfectMatch) {
  const std::vector<Words> refs = {w("the cat sat on the mat"), w("a dog barked at night .")};
  const auto r = corpus_bleu(refs, refs);
  EXPECT_EQ(r.score, 100.0);
  EXPECT_EQ(r.brevity_penalty, 1.0);
  for (double p : r.precisions) EXPECT_EQ(p, 1.0);
}

TEST(CorpusBleu, ShortHypothesisHandCase) {
  // p1 = 2/2, p2 = 1/1, no trigrams or 4-grams (precision 1), BP = exp(1 - 3/2).
  const std::vector<Words> hyp = {w("the cat")};
  const std::vector<Words> ref = {w("the cat sat")};
  const auto r = corpus_bleu(hyp, ref);
  EXPECT_NEAR(r.score, 60.653065971263345, 1e-12);
  EXPECT_NEAR(r.brevity_penalty, std::exp(-0.5), 1e-15);
  EXPECT_EQ(r.precisions[0], 1.0);
  EXPECT_EQ(r.precisions[1], 1.0);
  EXPECT_EQ(r.hyp_len, 2u);
  EXPECT_EQ(r.ref_len, 3u);
}

TEST(CorpusBleu, NoOverlapIsZero) {
  const std::vector<Words> hyp = {w("x y z w")};
  const std::vector<Words> ref = {w("a b c d")};
  EXPECT_EQ(corpus_bleu(hyp, ref).score, 0.0);
}

TEST(CorpusBleu, ScoreRecomputableFromFields) {
  Rng rng(8);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<Words> hyps, refs;
    for (int s = 0; s < 5; ++s) {
      hyps.push_back(random_words(rng, 12, 6));
      refs.push_back(random_words(rng, 12, 6));
      if (refs.back().empty()) refs.back().push_back("w0");
    }
    const auto r = corpus_bleu(hyps, refs);
    EXPECT_NEAR(r.score, reference_bleu(hyps, refs, 0.0), 1e-9);
    bool zero = false;
    double log_sum = 0;
    for (double p : r.precisions) {
      zero |= p == 0.0;
      if (p > 0) log_sum += std::log(p);
    }
    EXPECT_EQ(r.score == 0.0, zero || r.hyp_len == 0);
    if (!zero) EXPECT_NEAR(r.score, 100.0 * r.brevity_penalty * std::exp(log_sum / 4.0), 1e-9);
  }
}

TEST(CorpusBleu, PermutationInvariantAndStatsAdd) {
  Rng rng(9);
  std::vector<Words> hyps, refs;
  for (int s = 0; s < 40; ++s) {
    hyps.push_back(random_words(rng, 15, 5));
    refs.push_back(random_words(rng, 15, 5));
    if (refs.back().empty()) refs.back().push_back("w1");
  }
  const auto base = corpus_bleu(hyps, refs).score;
  BleuStats left, right, all;
  for (std::size_t i = 0; i < hyps.size(); ++i) {
    const auto s = bleu_stats(hyps[i], refs[i]);
    all += s;
    (i < 17 ? left : right) += s;
  }
  left += right;
  EXPECT_EQ(left, all);
  EXPECT_EQ(bleu_from_stats(all).score, base);
  for (int trial = 0; trial < 10; ++trial) {
    for (std::size_t i = hyps.size(); i > 1; --i) {
      const auto j = rng.below(i);
      std::swap(hyps[i - 1], hyps[j]);
      std::swap(refs[i - 1], refs[j]);
    }
    EXPECT_EQ(corpus_bleu(hyps, refs).score, base);
  }
}

TEST(CorpusBleu, Errors) {
  const std::vector<Words> one = {w("a")};
  const std::vector<Words> two = {w("a"), w("b")};
  EXPECT_EQ(code_of([&] { corpus_bleu(one, two); }), ErrorCode::LengthMismatch);
  EXPECT_EQ(code_of([] { corpus_bleu({}, {}); }), ErrorCode::EmptyCorpus);
}

TEST(SentenceBleu, IdentityAndEmpty) {
  Rng rng(10);
  for (int i = 0; i < 100; ++i) {
    auto s = random_words(rng, 20, 8);
    if (s.empty()) continue;
    EXPECT_NEAR(sentence_bleu(s, s), 100.0, 1e-12);
  }
  EXPECT_EQ(sentence_bleu(Words{}, w("a b c")), 0.0);
  EXPECT_EQ(code_of([] { sentence_bleu(w("a"), Words{}); }), ErrorCode::EmptyReference);
}

TEST(SentenceBleu, MatchesReferenceImplementation) {
  Rng rng(11);
  for (int i = 0; i < 300; ++i) {
    const auto h = random_words(rng, 10, 5);
    auto r = random_words(rng, 10, 5);
    if (r.empty()) r.push_back("w2");
    EXPECT_NEAR(sentence_bleu(h, r), reference_bleu({h}, {r}, kSentenceSmoothingEps), 1e-9);
  }
}

TEST(SentenceBleu, OneFewerMatchedBigramScoresLower) {
  const auto ref = w("a b c d e");
  const auto better = w("a b c e d");  // bigrams ab bc; trigram abc
  const auto worse = w("a b d c e");   // bigram ab only
  const double eps = kSentenceSmoothingEps;
  const double hand_better = 100.0 * std::exp((std::log(1.0) + std::log(2.0 / 4) + std::log(1.0 / 3) + std::log(eps / 2)) / 4);
  const double hand_worse = 100.0 * std::exp((std::log(1.0) + std::log(1.0 / 4) + std::log(eps / 3) + std::log(eps / 2)) / 4);
  EXPECT_NEAR(sentence_bleu(better, ref), hand_better, 1e-9);
  EXPECT_NEAR(sentence_bleu(worse, ref), hand_worse, 1e-9);
  EXPECT_LT(sentence_bleu(worse, ref), sentence_bleu(better, ref));
}

TEST(SentenceBleu, MoreMatchesNeverLower) {
  // Replace a non-matching word with one that only adds matches.
  const auto ref = w("the quick brown fox jumps over the lazy dog");
  Words hyp = w("the slow brown cat jumps under a lazy dog");
  double prev = sentence_bleu(hyp, ref);
  const std::vector<std::pair<std::size_t, std::string>> fixes = {{1, "quick"}, {3, "fox"}, {5, "over"}, {6, "the"}};
  for (const auto& [i, word] : fixes) {
    hyp[i] = word;
    const double now = sentence_bleu(hyp, ref);
    EXPECT_GT(now, prev);
    prev = now;
  }
  EXPECT_NEAR(prev, 100.0, 1e-12);
}

TEST(Oracle, PicksReferenceAndFirstOnTies) {
  const auto ref = w("a b c d");
  const std::vector<Words> cands = {w("a b"), w("a b c d"), w("a b c d")};
  const auto o = oracle_select(cands, ref);
  EXPECT_EQ(o.index, 1u);
  EXPECT_NEAR(o.score, 100.0, 1e-12);
  const std::vector<Words> single = {w("z")};
  EXPECT_EQ(oracle_select(single, ref).index, 0u);
  EXPECT_EQ(code_of([&] { oracle_select(std::span<const Words>{}, ref); }), ErrorCode::EmptyCandidateList);
}

TEST(Oracle, FourDecodedCandidates) {
  // ref 5 6 7 8 </s>; candidates as decoded ids with trailing eos.
  const TokenSequence ref{5, 6, 7, 8, kEosId};
  std::vector<decode::Candidate> cands(4);
  cands[0].tokens = {5, 6, 9, kEosId};        // p = 2/3, 1/2, eps/1, -; BP exp(1 - 4/3)
  cands[1].tokens = {5, 6, 7, 9, kEosId};     // p = 3/4, 2/3, 1/2, eps/1
  cands[2].tokens = {6, 7, 8, 5, kEosId};     // p = 4/4, 2/3, 1/2, eps/1
  cands[3].tokens = {9, 9, 9, 9, 9, kEosId};  // p = eps/5 ...
  const double eps = kSentenceSmoothingEps;
  const double s0 = 100 * std::exp(1 - 4.0 / 3) *
                    std::exp((std::log(2.0 / 3) + std::log(1.0 / 2) + std::log(eps / 1) + std::log(1.0)) / 4);
  const double s1 = 100 * std::exp((std::log(3.0 / 4) + std::log(2.0 / 3) + std::log(1.0 / 2) + std::log(eps)) / 4);
  const double s2 = 100 * std::exp((std::log(1.0) + std::log(2.0 / 3) + std::log(1.0 / 2) + std::log(eps)) / 4);
  const double s3 = 100 * std::exp((std::log(eps / 5) + std::log(eps / 4) + std::log(eps / 3) + std::log(eps / 2)) / 4);
  const Words ref_w = ids_as_words(ref);
  EXPECT_NEAR(sentence_bleu(ids_as_words(cands[0].tokens), ref_w), s0, 1e-9);
  EXPECT_NEAR(sentence_bleu(ids_as_words(cands[1].tokens), ref_w), s1, 1e-9);
  EXPECT_NEAR(sentence_bleu(ids_as_words(cands[2].tokens), ref_w), s2, 1e-9);
  EXPECT_NEAR(sentence_bleu(ids_as_words(cands[3].tokens), ref_w), s3, 1e-9);
  const auto o = oracle_select(cands, ref);
  EXPECT_EQ(o.index, 2u);
  EXPECT_NEAR(o.score, s2, 1e-9);
}

namespace {

// Noisy copy of `ref`: substitutions, deletions, insertions and swaps.
Words perturb(const Words& ref, Rng& rng, double rate) {
  Words out;
  for (std::size_t i = 0; i < ref.size(); ++i) {
    const double u = rng.uniform();
    if (u < rate / 3) continue;
    if (u < 2 * rate / 3) {
      out.push_back("x" + std::to_string(rng.below(50)));
      continue;
    }
    out.push_back(ref[i]);
    if (u > 1 - rate / 3) out.push_back("y" + std::to_string(rng.below(50)));
  }
  if (out.size() > 1 && rng.uniform() < rate) std::swap(out[0], out[rng.below(out.size())]);
  return out;
}

}  // namespace

TEST(Oracle, CorpusOracleDominatesRankOne) {
  for (std::uint64_t trial = 0; trial < 100; ++trial) {
    Rng rng(3000 + trial);
    std::vector<Words> rank1, oracle, refs;
    const double rate = 0.1 + 0.5 * rng.uniform();
    for (std::uint64_t s = 0; s < 30; ++s) {
      const auto lang = static_cast<fixtures::Lang>(rng.below(3));
      const auto ref = split_words(fixtures::plain_sentence(lang, rng, 4 + rng.below(20)));
      std::vector<Words> cands;
      const auto n = 1 + rng.below(8);
      for (std::uint64_t c = 0; c < n; ++c) cands.push_back(perturb(ref, rng, rate));
      const auto pick = oracle_select(cands, ref);
      rank1.push_back(cands[0]);
      oracle.push_back(cands[pick.index]);
      refs.push_back(ref);
    }
    EXPECT_GE(corpus_bleu(oracle, refs).score, corpus_bleu(rank1, refs).score) << "trial " << trial;
  }
}

namespace {

// Noisy copy model: at position i puts `fidelity` on ref[i] (eos past the
// end), the rest spread over the other ids with a seeded skew.
class CopyScorer final : public models::Scorer {
 public:
  CopyScorer(TokenSequence ref, std::size_t vocab, double fidelity, std::uint64_t seed)
      : ref_(std::move(ref)), vocab_(vocab), fidelity_(fidelity), seed_(seed) {}
  std::size_t vocab_size() const override { return vocab_; }
  models::Distribution next_dist(TokenSpan, TokenSpan prefix) const override {
    const TokenId want = prefix.size() < ref_.size() ? ref_[prefix.size()] : kEosId;
    Rng rng(derive_seed(seed_, prefix.size() * 131 + (prefix.empty() ? 0 : static_cast<std::uint64_t>(prefix.back()))));
    models::Distribution d(vocab_, 0.0);
    d[kEosId] = 0.1 + rng.uniform();
    for (std::size_t w = kNumSpecialIds; w < vocab_; ++w) d[w] = 0.1 + rng.uniform();
    d[static_cast<std::size_t>(want)] = 0.0;
    double rest = 0.0;
    for (double x : d) rest += x;
    for (auto& x : d) x *= (1.0 - fidelity_) / rest;
    d[static_cast<std::size_t>(want)] = fidelity_;
    return d;
  }

 private:
  TokenSequence ref_;
  std::size_t vocab_;
  double fidelity_;
  std::uint64_t seed_;
};

}  // namespace

TEST(Oracle, DecodedCandidatesDominateRankOne) {
  std::size_t strictly = 0;
  for (std::uint64_t trial = 0; trial < 50; ++trial) {
    Rng rng(7000 + trial);
    std::vector<Words> rank1, oracle, refs;
    for (std::uint64_t s = 0; s < 20; ++s) {
      TokenSequence ref;
      const auto len = 4 + rng.below(10);
      for (std::uint64_t i = 0; i < len; ++i) ref.push_back(static_cast<TokenId>(kNumSpecialIds + rng.below(12)));
      const CopyScorer fwd(ref, kNumSpecialIds + 12, 0.3 + 0.5 * rng.uniform(), rng.next_u64());
      decode::DecodeConfig cfg;
      cfg.beam_size = 4;
      cfg.max_len = 20;
      const TokenSequence source{4, kEosId};
      const auto cands = decode::beam_search(fwd, nullptr, source, cfg);
      ref.push_back(kEosId);
      const auto pick = oracle_select(cands, ref);
      rank1.push_back(ids_as_words(cands[0].tokens));
      oracle.push_back(ids_as_words(cands[pick.index].tokens));
      refs.push_back(ids_as_words(ref));
    }
    const double o = corpus_bleu(oracle, refs).score, r = corpus_bleu(rank1, refs).score;
    EXPECT_GE(o, r) << "trial " << trial;
    strictly += o > r;
  }
  EXPECT_GT(strictly, 40u);
}

TEST(Words, Helpers) {
  EXPECT_EQ(ids_as_words(TokenSequence{4, 5, kEosId}), (Words{"4", "5"}));
  EXPECT_EQ(ids_as_words(TokenSequence{4, kEosId, 5}), (Words{"4", "2", "5"}));
  EXPECT_EQ(split_words("  a  b\tc "), (Words{"a", "b", "c"}));
}
