#include <benchmark/benchmark.h>

#include "nmtk/decode.hpp"
#include "nmtk/ngram.hpp"
#include "nmtk/rng.hpp"

using namespace nmtk;

namespace {

// Trigram model over a skewed random corpus.
models::NGramScorer make_model(std::size_t vocab) {
  Rng rng(1);
  std::vector<TokenSequence> corpus(2000);
  for (auto& s : corpus) {
    for (std::uint64_t i = 0, n = 5 + rng.below(20); i < n; ++i) {
      const auto a = rng.below(vocab - kNumSpecialIds), b = rng.below(vocab - kNumSpecialIds);
      s.push_back(static_cast<TokenId>(kNumSpecialIds + std::min(a, b)));
    }
  }
  return models::NGramScorer::train(corpus, 3, vocab);
}

void BM_BeamSearch(benchmark::State& state) {
  const auto model = make_model(500);
  const auto lm = make_model(500);
  decode::DecodeConfig cfg;
  cfg.beam_size = static_cast<std::size_t>(state.range(0));
  cfg.max_len = 30;
  cfg.fusion_lambda = 0.1;
  const TokenSequence source{10, 11, 12, kEosId};
  for (auto _ : state) benchmark::DoNotOptimize(decode::beam_search(model, &lm, source, cfg));
}
BENCHMARK(BM_BeamSearch)->Arg(1)->Arg(4)->Arg(12);

void BM_TopkSample(benchmark::State& state) {
  const auto model = make_model(500);
  decode::DecodeConfig cfg;
  cfg.sample_k = 20;
  cfg.max_len = 30;
  const TokenSequence source{10, 11, 12, kEosId};
  std::uint64_t seed = 0;
  for (auto _ : state) {
    cfg.seed = seed++;
    benchmark::DoNotOptimize(decode::topk_sample(model, source, cfg));
  }
}
BENCHMARK(BM_TopkSample);

}  // namespace
