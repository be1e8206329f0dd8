#include <gtest/gtest.h>

#include <numeric>

#include "fixtures.hpp"
#include "nmtk/error.hpp"
#include "nmtk/langid.hpp"

using namespace nmtk;
using namespace nmtk::langid;
using fixtures::Lang;

namespace {

std::vector<LabeledText> labeled(std::size_t per_lang, std::uint64_t seed, std::initializer_list<Lang> langs) {
  Rng rng(seed);
  std::vector<LabeledText> out;
  for (std::size_t i = 0; i < per_lang; ++i) {
    for (Lang l : langs) {
      auto text = i % 2 ? fixtures::rich_sentence(l, rng) : fixtures::plain_sentence(l, rng, 3 + rng.below(8));
      out.push_back({std::move(text), std::string(fixtures::code(l))});
    }
  }
  return out;
}

double accuracy(const LangIdModel& m, const std::vector<LabeledText>& data) {
  std::size_t ok = 0;
  for (const auto& d : data) ok += m.classify(d.text).lang == d.lang;
  return static_cast<double>(ok) / static_cast<double>(data.size());
}

const LangIdModel& trilingual() {
  static const LangIdModel m = LangIdModel::train(labeled(1000, 1, {Lang::En, Lang::De, Lang::Ru}));
  return m;
}

}  // namespace

TEST(LangId, HeldOutAccuracy) {
  EXPECT_GE(accuracy(trilingual(), labeled(100, 777, {Lang::En, Lang::De, Lang::Ru})), 0.95);
}

TEST(LangId, FitsTrainingData) {
  EXPECT_GE(accuracy(trilingual(), labeled(1000, 1, {Lang::En, Lang::De, Lang::Ru})), 0.99);
}

TEST(LangId, DisjointAlphabetsAreSeparable) {
  const auto m = LangIdModel::train(labeled(200, 3, {Lang::En, Lang::Ru}));
  EXPECT_EQ(accuracy(m, labeled(150, 4, {Lang::En, Lang::Ru})), 1.0);
}

TEST(LangId, CyrillicGreeting) {
  const auto p = trilingual().classify("привет мир");
  EXPECT_EQ(p.lang, "ru");
  EXPECT_GE(p.probability, 0.9);
}

TEST(LangId, DistributionNormalizedAndDeterministic) {
  for (const auto& d : labeled(50, 12, {Lang::En, Lang::De, Lang::Ru})) {
    const auto p = trilingual().classify(d.text);
    ASSERT_EQ(p.distribution.size(), 3u);
    EXPECT_NEAR(std::accumulate(p.distribution.begin(), p.distribution.end(), 0.0), 1.0, 1e-6);
    const auto q = trilingual().classify(d.text);
    EXPECT_EQ(p.distribution, q.distribution);
    EXPECT_EQ(p.probability, *std::max_element(p.distribution.begin(), p.distribution.end()));
  }
}

TEST(LangId, Errors) {
  EXPECT_THROW(trilingual().classify(""), Error);
  try {
    LangIdModel::train(labeled(20, 1, {Lang::En}));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::SingleClassCorpus);
  }
  EXPECT_THROW(LangIdModel::parse("not a model"), Error);
}

TEST(LangId, SerializeRoundTrip) {
  const auto& m = trilingual();
  const auto text = m.serialize();
  const auto back = LangIdModel::parse(text);
  EXPECT_EQ(back.serialize(), text);
  for (const auto& d : labeled(30, 5, {Lang::En, Lang::De, Lang::Ru})) {
    EXPECT_EQ(back.classify(d.text).distribution, m.classify(d.text).distribution);
  }
}

TEST(LangId, TrainingIsDeterministic) {
  const auto data = labeled(150, 6, {Lang::En, Lang::De});
  EXPECT_EQ(LangIdModel::train(data).serialize(), LangIdModel::train(data).serialize());
}
