#include "nmtk/eval.hpp"

#include <cmath>
#include <map>

#include "nmtk/error.hpp"

namespace nmtk::eval {
namespace {

using Gram = std::span<const std::string>;

struct GramLess {
  bool operator()(Gram a, Gram b) const {
    return std::lexicographical_compare(a.begin(), a.end(), b.begin(), b.end());
  }
};

std::map<Gram, std::uint64_t, GramLess> count_grams(std::span<const std::string> words, std::size_t n) {
  std::map<Gram, std::uint64_t, GramLess> out;
  if (words.size() < n) return out;
  for (std::size_t i = 0; i + n <= words.size(); ++i) ++out[words.subspan(i, n)];
  return out;
}

}  // namespace

BleuStats& BleuStats::operator+=(const BleuStats& other) {
  for (std::size_t n = 0; n < kMaxOrder; ++n) {
    matches[n] += other.matches[n];
    totals[n] += other.totals[n];
  }
  hyp_len += other.hyp_len;
  ref_len += other.ref_len;
  return *this;
}

BleuStats bleu_stats(std::span<const std::string> hyp, std::span<const std::string> ref) {
  BleuStats s;
  s.hyp_len = hyp.size();
  s.ref_len = ref.size();
  for (std::size_t n = 1; n <= kMaxOrder; ++n) {
    const auto h = count_grams(hyp, n);
    const auto r = count_grams(ref, n);
    std::uint64_t total = 0, match = 0;
    for (const auto& [gram, c] : h) {
      total += c;
      auto it = r.find(gram);
      if (it != r.end()) match += std::min(c, it->second);
    }
    s.matches[n - 1] = match;
    s.totals[n - 1] = total;
  }
  return s;
}

BleuResult bleu_from_stats(const BleuStats& s, double eps) {
  BleuResult r;
  r.hyp_len = s.hyp_len;
  r.ref_len = s.ref_len;
  double log_sum = 0.0;
  bool zero = false;
  for (std::size_t n = 0; n < kMaxOrder; ++n) {
    if (s.totals[n] == 0) {
      r.precisions[n] = 1.0;
      continue;
    }
    double m = static_cast<double>(s.matches[n]);
    if (m == 0.0 && eps > 0.0) m = eps;
    r.precisions[n] = m / static_cast<double>(s.totals[n]);
    if (r.precisions[n] == 0.0) {
      zero = true;
    } else {
      log_sum += std::log(r.precisions[n]);
    }
  }
  if (s.hyp_len == 0) {
    r.brevity_penalty = 0.0;
  } else if (s.hyp_len < s.ref_len) {
    r.brevity_penalty = std::exp(1.0 - static_cast<double>(s.ref_len) / static_cast<double>(s.hyp_len));
  } else {
    r.brevity_penalty = 1.0;
  }
  r.score = zero ? 0.0 : r.brevity_penalty * std::exp(log_sum / static_cast<double>(kMaxOrder)) * 100.0;
  return r;
}

BleuResult corpus_bleu(std::span<const Words> hyps, std::span<const Words> refs) {
  if (hyps.size() != refs.size()) {
    fail(ErrorCode::LengthMismatch, "corpus_bleu: " + std::to_string(hyps.size()) + " hypotheses vs " +
                                        std::to_string(refs.size()) + " references");
  }
  if (hyps.empty()) fail(ErrorCode::EmptyCorpus, "corpus_bleu: no sentence pairs");
  BleuStats total;
  for (std::size_t i = 0; i < hyps.size(); ++i) total += bleu_stats(hyps[i], refs[i]);
  return bleu_from_stats(total);
}

double sentence_bleu(std::span<const std::string> hyp, std::span<const std::string> ref) {
  if (ref.empty()) fail(ErrorCode::EmptyReference, "sentence_bleu: reference is empty");
  return bleu_from_stats(bleu_stats(hyp, ref), kSentenceSmoothingEps).score;
}

OracleChoice oracle_select(std::span<const Words> cands, std::span<const std::string> ref) {
  if (cands.empty()) fail(ErrorCode::EmptyCandidateList, "oracle_select: no candidates");
  OracleChoice best{0, sentence_bleu(cands[0], ref)};
  for (std::size_t i = 1; i < cands.size(); ++i) {
    const double s = sentence_bleu(cands[i], ref);
    if (s > best.score) best = {i, s};
  }
  return best;
}

Words ids_as_words(TokenSpan ids, TokenId eos_id) {
  if (!ids.empty() && ids.back() == eos_id) ids = ids.first(ids.size() - 1);
  Words out;
  out.reserve(ids.size());
  for (auto id : ids) out.push_back(std::to_string(id));
  return out;
}

OracleChoice oracle_select(std::span<const decode::Candidate> cands, TokenSpan ref, TokenId eos_id) {
  std::vector<Words> words;
  words.reserve(cands.size());
  for (const auto& c : cands) words.push_back(ids_as_words(c.tokens, eos_id));
  return oracle_select(words, ids_as_words(ref, eos_id));
}

Words split_words(std::string_view line) {
  Words out;
  std::size_t pos = 0;
  while (pos < line.size()) {
    const auto start = line.find_first_not_of(" \t\r\n", pos);
    if (start == std::string_view::npos) break;
    auto end = line.find_first_of(" \t\r\n", start);
    if (end == std::string_view::npos) end = line.size();
    out.emplace_back(line.substr(start, end - start));
    pos = end;
  }
  return out;
}

}  // namespace nmtk::eval
