#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <sstream>

#include "fixtures.hpp"
#include "nmtk/corpus.hpp"
#include "nmtk/error.hpp"

using namespace nmtk;
using namespace nmtk::corpus;

namespace {

std::string words(std::size_t n, const std::string& w = "word") {
  std::string out;
  for (std::size_t i = 0; i < n; ++i) out += (i ? " " : "") + w;
  return out;
}

ParallelExample pair(std::string s, std::string t, std::optional<double> score = std::nullopt) {
  ParallelExample ex;
  ex.source = std::move(s);
  ex.target = std::move(t);
  ex.external_score = score;
  return ex;
}

const langid::LangIdModel& langid_model() {
  static const auto m = fixtures::train_langid(42);
  return m;
}

FilterConfig en_de() {
  FilterConfig cfg;
  cfg.required_langs = std::pair{std::string("en"), std::string("de")};
  return cfg;
}

std::vector<ParallelExample> parse_all(const std::vector<std::string>& lines) {
  std::vector<ParallelExample> out;
  for (std::size_t i = 0; i < lines.size(); ++i) out.push_back(parse_tsv_line(lines[i], i));
  return out;
}

std::vector<ParallelExample> numbered(std::size_t n, const std::string& tag) {
  std::vector<ParallelExample> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back(pair(tag + std::to_string(i), "t"));
  return out;
}

}  // namespace

TEST(FilterPair, PaperThresholds) {
  const FilterConfig cfg;
  EXPECT_EQ(filter_pair(pair(words(251), words(240)), cfg, nullptr), FilterRule::TooLong);
  EXPECT_EQ(filter_pair(pair(words(250), words(240)), cfg, nullptr), std::nullopt);
  EXPECT_EQ(filter_pair(pair(words(10), words(14)), cfg, nullptr), FilterRule::Ratio);
  EXPECT_EQ(filter_pair(pair(words(10), words(13)), cfg, nullptr), std::nullopt);  // 1.3 is not > 1.3
  EXPECT_EQ(filter_pair(pair(words(5), words(5), 0.59), cfg, nullptr), FilterRule::Score);
  EXPECT_EQ(filter_pair(pair(words(5), words(5), 0.6), cfg, nullptr), std::nullopt);
  EXPECT_EQ(filter_pair(pair(words(5), words(5)), cfg, nullptr), std::nullopt);
  EXPECT_EQ(filter_pair(pair("", words(5)), cfg, nullptr), FilterRule::TooShort);
}

TEST(FilterPair, LengthsCountWordTokens) {
  EXPECT_EQ(token_length("Hello, world."), 4u);
  // 5 + 1 tokens against 8: ratio 1.33 with punctuation counted.
  EXPECT_EQ(filter_pair(pair(words(5) + ".", words(8)), FilterConfig{}, nullptr), FilterRule::Ratio);
}

TEST(FilterPair, FirstFailingRuleWins) {
  auto cfg = en_de();
  // Russian source that is also too long and badly scored: language first.
  Rng rng(1);
  const auto ru = fixtures::plain_sentence(fixtures::Lang::Ru, rng, 260);
  EXPECT_EQ(filter_pair(pair(ru, words(10), 0.1), cfg, &langid_model()), FilterRule::LangidSrc);
  EXPECT_EQ(filter_pair(pair(words(300), words(10), 0.1), FilterConfig{}, nullptr), FilterRule::TooLong);
  EXPECT_EQ(filter_pair(pair(words(10), words(20), 0.1), FilterConfig{}, nullptr), FilterRule::Ratio);
}

TEST(FilterPair, RatioIsSymmetric) {
  Rng rng(3);
  const FilterConfig cfg;
  for (int i = 0; i < 2000; ++i) {
    const auto a = 1 + rng.below(40), b = 1 + rng.below(40);
    const auto ab = filter_pair(pair(words(a), words(b)), cfg, nullptr);
    const auto ba = filter_pair(pair(words(b), words(a)), cfg, nullptr);
    ASSERT_EQ(ab, ba) << a << " " << b;
    const double r = std::max<double>(a, b) / std::min<double>(a, b);
    ASSERT_EQ(ab == FilterRule::Ratio, r > 1.3) << a << " " << b;
  }
}

TEST(FilterPair, Monolingual) {
  const auto cfg = FilterConfig::monolingual_lengths(2, 5);
  EXPECT_EQ(filter_pair(pair("one", ""), cfg, nullptr), FilterRule::TooShort);
  EXPECT_EQ(filter_pair(pair(words(6), ""), cfg, nullptr), FilterRule::TooLong);
  EXPECT_EQ(filter_pair(pair(words(3), ""), cfg, nullptr), std::nullopt);
}

TEST(FilterCorpus, PlantedViolationsMatchExactly) {
  const auto pc = fixtures::planted_filter_corpus(2024);
  ASSERT_EQ(pc.lines.size(), 1000u);
  const auto res = filter_corpus(parse_all(pc.lines), en_de(), &langid_model(), 1);
  EXPECT_EQ(res.report, pc.expected) << res.report.serialize() << "expected\n" << pc.expected.serialize();
  EXPECT_EQ(res.report.count(FilterRule::LangidSrc) + res.report.count(FilterRule::LangidTgt), 25u);
  EXPECT_EQ(res.report.count(FilterRule::TooLong), 25u);
  EXPECT_EQ(res.report.count(FilterRule::Ratio), 25u);
  EXPECT_EQ(res.report.count(FilterRule::Score), 25u);
  EXPECT_EQ(res.report.kept, 900u);
  EXPECT_TRUE(res.report.consistent());
}

TEST(FilterCorpus, OrderPreservedAndThreadIndependent) {
  const auto pc = fixtures::planted_filter_corpus(7);
  const auto examples = parse_all(pc.lines);
  const auto one = filter_corpus(examples, en_de(), &langid_model(), 1);
  const auto many = filter_corpus(examples, en_de(), &langid_model(), 8);
  EXPECT_EQ(one.kept, many.kept);
  EXPECT_EQ(one.report, many.report);
  for (std::size_t i = 1; i < one.kept.size(); ++i) EXPECT_LT(one.kept[i - 1].sequence_no, one.kept[i].sequence_no);
}

TEST(FilterCorpus, ShardReportsSumToWhole) {
  const auto examples = parse_all(fixtures::planted_filter_corpus(8).lines);
  const auto whole = filter_corpus(examples, en_de(), &langid_model()).report;
  FilterReport sum;
  for (std::size_t b = 0; b < examples.size(); b += 137) {
    const auto n = std::min<std::size_t>(137, examples.size() - b);
    sum += filter_corpus(std::span(examples).subspan(b, n), en_de(), &langid_model()).report;
  }
  EXPECT_EQ(sum, whole);
}

TEST(FilterStream, EmptyInput) {
  std::istringstream in;
  std::ostringstream out;
  const auto rep = filter_stream(in, out, FilterConfig{}, nullptr);
  EXPECT_EQ(rep, FilterReport{});
  EXPECT_EQ(out.str(), "");
}

TEST(FilterStream, MatchesPlantAndIsDeterministic) {
  const auto pc = fixtures::planted_filter_corpus(2024);
  std::string text;
  for (const auto& l : pc.lines) text += l + "\n";
  std::string first;
  for (unsigned threads : {1u, 8u, 1u}) {
    std::istringstream in(text);
    std::ostringstream out;
    const auto rep = filter_stream(in, out, en_de(), &langid_model(), threads);
    EXPECT_EQ(rep, pc.expected);
    if (first.empty()) first = out.str();
    EXPECT_EQ(out.str(), first);
  }
  // Kept lines come out verbatim and in input order.
  std::istringstream kept(first);
  std::string line;
  std::size_t cursor = 0;
  while (std::getline(kept, line)) {
    while (cursor < pc.lines.size() && pc.lines[cursor] != line) ++cursor;
    ASSERT_LT(cursor, pc.lines.size());
    ++cursor;
  }
}

TEST(FilterStream, MalformedLinesAreCountedNotFatal) {
  std::istringstream in("a\tb\nonly one column\na\tb\t1.5\na\tb\t\tnews\n\xff\tb\n");
  std::ostringstream out;
  std::vector<std::uint64_t> bad;
  const auto rep = filter_stream(in, out, FilterConfig{}, nullptr, 1,
                                 [&](std::uint64_t n, const std::string&) { bad.push_back(n); });
  EXPECT_EQ(rep.total, 5u);
  EXPECT_EQ(rep.kept, 2u);
  EXPECT_EQ(rep.count(FilterRule::Malformed), 3u);
  EXPECT_EQ(bad, (std::vector<std::uint64_t>{2, 3, 5}));
  EXPECT_EQ(out.str(), "a\tb\na\tb\t\tnews\n");
}

TEST(FilterReport, SerializeHasStableKeys) {
  FilterReport r;
  r.keep();
  r.reject(FilterRule::Ratio);
  EXPECT_EQ(r.serialize(),
            "total\t2\nkept\t1\nlangid_src\t0\nlangid_tgt\t0\ntoo_short\t0\ntoo_long\t0\nratio\t1\nscore\t0\n"
            "malformed\t0\n");
}

TEST(Tsv, ParseAndFormat) {
  const auto ex = parse_tsv_line("src text\ttgt text\t0.75\tbiomed", 9);
  EXPECT_EQ(ex.source, "src text");
  EXPECT_EQ(ex.target, "tgt text");
  EXPECT_EQ(ex.external_score, 0.75);
  EXPECT_EQ(ex.provenance, Provenance::Biomed);
  EXPECT_EQ(ex.sequence_no, 9u);
  EXPECT_EQ(format_tsv_line(ex, true), "src text\ttgt text\t0.75\tbiomed");
  EXPECT_EQ(format_tsv_line(ex), "src text\ttgt text\t0.75");
  EXPECT_EQ(format_tsv_line(parse_tsv_line("a\tb", 0)), "a\tb");
  EXPECT_EQ(parse_tsv_line("a\tb\t", 0).external_score, std::nullopt);
  for (const char* bad : {"a", "a\tb\tx", "a\tb\t-0.1", "a\tb\t0.5\tnope", "a\tb\t1\tnews\textra"}) {
    try {
      parse_tsv_line(bad, 0);
      ADD_FAILURE() << bad;
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::MalformedLine);
    }
  }
}

TEST(ReverseTarget, Examples) {
  auto p = pair("x y", "a b c");
  p.provenance = Provenance::Bitext;
  const auto r = reverse_target(p);
  EXPECT_EQ(r.target, "c b a");
  EXPECT_EQ(r.source, "x y");
  EXPECT_EQ(r.provenance, Provenance::Bitext);
  EXPECT_EQ(reverse_target(pair("s", "solo")).target, "solo");
  EXPECT_EQ(reverse_target(p, Provenance::R2lDistilled).provenance, Provenance::R2lDistilled);
}

TEST(ReverseTarget, InvolutionAndLengthPreserving) {
  Rng rng(4);
  const std::vector<std::string> alphabet = {"a", "b", " ", "ü", "."};
  for (int i = 0; i < 3000; ++i) {
    std::string t;
    for (std::uint64_t k = 0, n = rng.below(12); k < n; ++k) t += alphabet[rng.below(alphabet.size())];
    const auto p = pair("s", t, 0.5);
    const auto r = reverse_target(p);
    ASSERT_EQ(reverse_target(r), p) << "[" << t << "]";
    ASSERT_EQ(r.target.size(), t.size());
    ASSERT_EQ(token_length(r.target), token_length(t));
  }
}

TEST(MixSample, TwoToOne) {
  const auto a = numbered(50, "a"), b = numbered(50, "b");
  const std::vector<WeightedCorpus> cs = {{a, 2.0}, {b, 1.0}};
  const auto out = mix_sample(cs, 30000, 1);
  std::size_t from_a = 0;
  for (const auto& ex : out) from_a += ex.source[0] == 'a';
  EXPECT_NEAR(static_cast<double>(from_a) / 30000.0, 2.0 / 3.0, 0.01);
}

TEST(MixSample, SixThreeOneWithChiSquare) {
  auto a = numbered(100, "a"), b = numbered(100, "b"), c = numbered(100, "c");
  for (auto& e : b) e.provenance = Provenance::R2lDistilled;
  for (auto& e : c) e.provenance = Provenance::Backtranslated;
  const std::vector<WeightedCorpus> cs = {{a, 6.0}, {b, 3.0}, {c, 1.0}};
  const std::size_t n = 100000;
  const auto out = mix_sample(cs, n, 77);
  std::map<Provenance, double> count;
  for (const auto& ex : out) count[ex.provenance] += 1;
  const std::vector<std::pair<Provenance, double>> expected = {
      {Provenance::Bitext, 0.6}, {Provenance::R2lDistilled, 0.3}, {Provenance::Backtranslated, 0.1}};
  double chi2 = 0.0;
  for (const auto& [p, w] : expected) {
    EXPECT_NEAR(count[p] / static_cast<double>(n), w, 0.01);
    const double e = w * static_cast<double>(n);
    chi2 += (count[p] - e) * (count[p] - e) / e;
  }
  // Survival function of chi-square with 2 degrees of freedom.
  EXPECT_GT(std::exp(-chi2 / 2.0), 0.01) << "chi2 = " << chi2;
}

TEST(MixSample, SingleCorpusAndDeterminism) {
  const auto a = numbered(7, "a");
  const std::vector<WeightedCorpus> cs = {{a, 0.3}};
  const auto out = mix_sample(cs, 70, 5);
  ASSERT_EQ(out.size(), 70u);
  std::map<std::string, int> seen;
  for (std::size_t i = 0; i < out.size(); ++i) {
    EXPECT_EQ(out[i].sequence_no, i);
    ++seen[out[i].source];
  }
  // Permutation cycling: every example appears exactly 10 times.
  EXPECT_EQ(seen.size(), 7u);
  for (const auto& [s, k] : seen) EXPECT_EQ(k, 10) << s;
  EXPECT_EQ(mix_sample(cs, 70, 5), out);
  EXPECT_NE(mix_sample(cs, 70, 6), out);
}

TEST(MixSample, Errors) {
  try {
    mix_sample({}, 5, 1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::EmptyCorpusList);
  }
  const auto a = numbered(3, "a");
  std::vector<WeightedCorpus> bad = {{a, 0.0}};
  EXPECT_THROW(mix_sample(bad, 5, 1), Error);
  std::vector<WeightedCorpus> empty = {{std::span<const ParallelExample>(), 1.0}};
  EXPECT_THROW(mix_sample(empty, 5, 1), Error);
}
