#include "nmtk/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>

#include "nmtk/error.hpp"
#include "nmtk/numfmt.hpp"
#include "nmtk/parallel.hpp"
#include "nmtk/rng.hpp"
#include "nmtk/textnorm.hpp"
#include "nmtk/utf8.hpp"

namespace nmtk::corpus {
namespace {

constexpr std::size_t kBlockLines = 4096;

std::vector<std::string_view> split_tabs(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t pos = 0;
  for (;;) {
    const auto tab = line.find('\t', pos);
    out.push_back(line.substr(pos, tab == std::string_view::npos ? std::string_view::npos : tab - pos));
    if (tab == std::string_view::npos) break;
    pos = tab + 1;
  }
  return out;
}

[[noreturn]] void malformed(std::uint64_t sequence_no, const std::string& what) {
  fail(ErrorCode::MalformedLine, "line " + std::to_string(sequence_no + 1) + ": " + what);
}

bool wrong_language(const std::string& text, const std::string& expected,
                    const langid::LangIdModel& model) {
  if (text.find_first_not_of(" \t") == std::string::npos) return false;  // left to too_short
  return model.classify(text).lang != expected;
}

}  // namespace

std::string_view to_string(Provenance p) {
  switch (p) {
    case Provenance::Bitext: return "bitext";
    case Provenance::Backtranslated: return "backtranslated";
    case Provenance::R2lDistilled: return "r2l_distilled";
    case Provenance::Biomed: return "biomed";
    case Provenance::News: return "news";
  }
  return "bitext";
}

std::optional<Provenance> parse_provenance(std::string_view name) {
  for (auto p : {Provenance::Bitext, Provenance::Backtranslated, Provenance::R2lDistilled,
                 Provenance::Biomed, Provenance::News}) {
    if (to_string(p) == name) return p;
  }
  return std::nullopt;
}

std::string_view to_string(FilterRule rule) {
  switch (rule) {
    case FilterRule::LangidSrc: return "langid_src";
    case FilterRule::LangidTgt: return "langid_tgt";
    case FilterRule::TooShort: return "too_short";
    case FilterRule::TooLong: return "too_long";
    case FilterRule::Ratio: return "ratio";
    case FilterRule::Score: return "score";
    case FilterRule::Malformed: return "malformed";
  }
  return "malformed";
}

ParallelExample parse_tsv_line(std::string_view line, std::uint64_t sequence_no) {
  if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
  if (!utf8::is_valid(line)) malformed(sequence_no, "invalid UTF-8");
  const auto cols = split_tabs(line);
  if (cols.size() < 2 || cols.size() > 4) {
    malformed(sequence_no, "expected 2 to 4 tab-separated columns, got " + std::to_string(cols.size()));
  }
  ParallelExample ex;
  ex.source = cols[0];
  ex.target = cols[1];
  ex.sequence_no = sequence_no;
  if (cols.size() >= 3 && !cols[2].empty()) {
    double score = 0.0;
    if (!parse_double(cols[2], score) || !(score >= 0.0 && score <= 1.0)) {
      malformed(sequence_no, "score '" + std::string(cols[2]) + "' is not a probability");
    }
    ex.external_score = score;
  }
  if (cols.size() == 4) {
    auto p = parse_provenance(cols[3]);
    if (!p) malformed(sequence_no, "unknown provenance '" + std::string(cols[3]) + "'");
    ex.provenance = *p;
  }
  return ex;
}

std::string format_tsv_line(const ParallelExample& ex, bool with_provenance) {
  std::string out = ex.source + "\t" + ex.target;
  if (ex.external_score || with_provenance) {
    out += "\t";
    if (ex.external_score) out += format_double(*ex.external_score);
  }
  if (with_provenance) {
    out += "\t";
    out += to_string(ex.provenance);
  }
  return out;
}

FilterConfig FilterConfig::monolingual_lengths(std::size_t min_len, std::size_t max_len) {
  FilterConfig cfg;
  cfg.min_len_tokens = min_len;
  cfg.max_len_tokens = max_len;
  cfg.monolingual = true;
  return cfg;
}

void FilterConfig::validate() const {
  if (!(max_len_ratio >= 1.0)) fail(ErrorCode::InvalidArgument, "filter: max_len_ratio must be >= 1");
  if (!(min_external_score >= 0.0 && min_external_score <= 1.0)) {
    fail(ErrorCode::InvalidArgument, "filter: min_external_score must be in [0, 1]");
  }
  if (min_len_tokens > max_len_tokens) {
    fail(ErrorCode::InvalidArgument, "filter: min length exceeds max length");
  }
}

bool FilterReport::consistent() const {
  std::uint64_t sum = kept;
  for (auto c : rejected) sum += c;
  return sum == total;
}

FilterReport& FilterReport::operator+=(const FilterReport& other) {
  total += other.total;
  kept += other.kept;
  for (std::size_t i = 0; i < kNumFilterRules; ++i) rejected[i] += other.rejected[i];
  return *this;
}

std::string FilterReport::serialize() const {
  std::string out = "total\t" + std::to_string(total) + "\nkept\t" + std::to_string(kept) + "\n";
  for (std::size_t i = 0; i < kNumFilterRules; ++i) {
    out += std::string(to_string(static_cast<FilterRule>(i))) + "\t" + std::to_string(rejected[i]) + "\n";
  }
  return out;
}

std::size_t token_length(std::string_view text) {
  return textnorm::word_tokenize(text).size();
}

std::optional<FilterRule> filter_pair(const ParallelExample& pair, const FilterConfig& cfg,
                                      const langid::LangIdModel* langid) {
  if (cfg.monolingual) {
    const auto len = token_length(pair.source);
    if (len < cfg.min_len_tokens) return FilterRule::TooShort;
    if (len > cfg.max_len_tokens) return FilterRule::TooLong;
    return std::nullopt;
  }

  if (langid && cfg.required_langs) {
    if (wrong_language(pair.source, cfg.required_langs->first, *langid)) return FilterRule::LangidSrc;
    if (wrong_language(pair.target, cfg.required_langs->second, *langid)) return FilterRule::LangidTgt;
  }

  const auto ls = token_length(pair.source);
  const auto lt = token_length(pair.target);
  if (std::min(ls, lt) < cfg.min_len_tokens) return FilterRule::TooShort;
  if (std::max(ls, lt) > cfg.max_len_tokens) return FilterRule::TooLong;
  if (ls > 0 && lt > 0) {
    const double s = static_cast<double>(ls);
    const double t = static_cast<double>(lt);
    if (std::max(s / t, t / s) > cfg.max_len_ratio) return FilterRule::Ratio;
  }
  if (pair.external_score && *pair.external_score < cfg.min_external_score) return FilterRule::Score;
  return std::nullopt;
}

FilterResult filter_corpus(std::span<const ParallelExample> examples, const FilterConfig& cfg,
                           const langid::LangIdModel* langid, unsigned threads) {
  cfg.validate();
  std::vector<std::optional<FilterRule>> verdicts(examples.size());
  parallel_for(examples.size(), threads,
               [&](std::size_t i) { verdicts[i] = filter_pair(examples[i], cfg, langid); });

  FilterResult result;
  for (std::size_t i = 0; i < examples.size(); ++i) {
    if (verdicts[i]) {
      result.report.reject(*verdicts[i]);
    } else {
      result.report.keep();
      result.kept.push_back(examples[i]);
    }
  }
  return result;
}

FilterReport filter_stream(std::istream& in, std::ostream& out, const FilterConfig& cfg,
                           const langid::LangIdModel* langid, unsigned threads,
                           const MalformedLineHandler& on_malformed) {
  cfg.validate();
  FilterReport report;
  std::uint64_t line_no = 0;
  std::vector<std::string> lines;
  std::string line;
  bool more = true;
  while (more) {
    lines.clear();
    while (lines.size() < kBlockLines && (more = static_cast<bool>(std::getline(in, line)))) {
      lines.push_back(line);
    }
    if (lines.empty()) break;

    struct Slot {
      std::optional<ParallelExample> pair;
      std::optional<FilterRule> verdict;
      std::string error;
    };
    std::vector<Slot> slots(lines.size());
    const std::uint64_t base = line_no;
    parallel_for(lines.size(), threads, [&](std::size_t i) {
      auto& slot = slots[i];
      try {
        if (cfg.monolingual) {
          std::string_view text = lines[i];
          if (!text.empty() && text.back() == '\r') text.remove_suffix(1);
          if (!utf8::is_valid(text)) malformed(base + i, "invalid UTF-8");
          ParallelExample ex;
          ex.source = std::string(text);
          ex.sequence_no = base + i;
          slot.pair = std::move(ex);
        } else {
          slot.pair = parse_tsv_line(lines[i], base + i);
        }
        slot.verdict = filter_pair(*slot.pair, cfg, langid);
      } catch (const Error& e) {
        if (e.code() != ErrorCode::MalformedLine) throw;
        slot.pair.reset();
        slot.verdict = FilterRule::Malformed;
        slot.error = e.what();
      }
    });

    for (std::size_t i = 0; i < slots.size(); ++i) {
      auto& slot = slots[i];
      if (!slot.verdict) {
        report.keep();
        std::string_view kept = lines[i];
        if (!kept.empty() && kept.back() == '\r') kept.remove_suffix(1);
        out << kept << '\n';
        continue;
      }
      report.reject(*slot.verdict);
      if (*slot.verdict == FilterRule::Malformed && on_malformed) on_malformed(base + i + 1, slot.error);
    }
    line_no += lines.size();
  }
  return report;
}

ParallelExample reverse_target(const ParallelExample& pair, std::optional<Provenance> retag) {
  std::vector<std::string_view> toks;
  std::string_view t = pair.target;
  std::size_t pos = 0;
  while (pos <= t.size()) {
    const auto sp = t.find(' ', pos);
    const auto end = sp == std::string_view::npos ? t.size() : sp;
    toks.push_back(t.substr(pos, end - pos));
    pos = end + 1;
  }
  ParallelExample out = pair;
  out.target.clear();
  for (auto it = toks.rbegin(); it != toks.rend(); ++it) {
    if (it != toks.rbegin()) out.target += ' ';
    out.target += *it;
  }
  if (retag) out.provenance = *retag;
  return out;
}

std::vector<ParallelExample> mix_sample(std::span<const WeightedCorpus> corpora, std::size_t n,
                                        std::uint64_t seed) {
  if (corpora.empty()) fail(ErrorCode::EmptyCorpusList, "mix_sample: no corpora given");
  std::vector<double> cumulative;
  double total = 0.0;
  for (const auto& c : corpora) {
    if (!(c.weight > 0.0) || !std::isfinite(c.weight)) {
      fail(ErrorCode::InvalidArgument, "mix_sample: weights must be positive");
    }
    if (c.examples.empty()) fail(ErrorCode::EmptyCorpus, "mix_sample: corpus is empty");
    total += c.weight;
    cumulative.push_back(total);
  }

  Rng rng(seed);
  std::vector<std::vector<std::size_t>> order(corpora.size());
  std::vector<std::size_t> cursor(corpora.size(), 0);
  auto reshuffle = [&](std::size_t c) {
    auto& perm = order[c];
    perm.resize(corpora[c].examples.size());
    for (std::size_t i = 0; i < perm.size(); ++i) perm[i] = i;
    for (std::size_t i = perm.size(); i > 1; --i) std::swap(perm[i - 1], perm[rng.below(i)]);
    cursor[c] = 0;
  };

  std::vector<ParallelExample> out;
  out.reserve(n);
  for (std::size_t k = 0; k < n; ++k) {
    const double u = rng.uniform() * total;
    std::size_t c = static_cast<std::size_t>(
        std::upper_bound(cumulative.begin(), cumulative.end(), u) - cumulative.begin());
    c = std::min(c, corpora.size() - 1);
    if (cursor[c] >= order[c].size()) reshuffle(c);
    ParallelExample ex = corpora[c].examples[order[c][cursor[c]++]];
    ex.sequence_no = k;
    out.push_back(std::move(ex));
  }
  return out;
}

}  // namespace nmtk::corpus
