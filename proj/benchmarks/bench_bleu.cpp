#include <benchmark/benchmark.h>

#include <string>
#include <vector>

#include "nmtk/eval.hpp"
#include "nmtk/rng.hpp"

using namespace nmtk;

namespace {

std::vector<eval::Words> make_corpus(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<eval::Words> out(n);
  for (auto& s : out) {
    for (std::uint64_t i = 0, len = 10 + rng.below(20); i < len; ++i) s.push_back("w" + std::to_string(rng.below(40)));
  }
  return out;
}

void BM_CorpusBleu(benchmark::State& state) {
  const auto hyp = make_corpus(static_cast<std::size_t>(state.range(0)), 1);
  const auto ref = make_corpus(static_cast<std::size_t>(state.range(0)), 2);
  for (auto _ : state) benchmark::DoNotOptimize(eval::corpus_bleu(hyp, ref));
}
BENCHMARK(BM_CorpusBleu)->Arg(100)->Arg(3000);

void BM_OracleSelect(benchmark::State& state) {
  const auto cands = make_corpus(12, 3);
  const auto ref = make_corpus(1, 4)[0];
  for (auto _ : state) benchmark::DoNotOptimize(eval::oracle_select(cands, ref));
}
BENCHMARK(BM_OracleSelect);

}  // namespace
