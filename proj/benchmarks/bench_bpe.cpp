#include <benchmark/benchmark.h>

#include <string>
#include <vector>

#include "nmtk/bpe.hpp"
#include "nmtk/rng.hpp"

using namespace nmtk;

namespace {

std::vector<std::string> make_lines(std::size_t n) {
  static const std::vector<std::string> words = {"the", "village", "careful", "weather", "follows", "although",
                                                 "Wetter", "Dorf", "sorgfältig", "погода", "деревня", "кошка"};
  Rng rng(3);
  std::vector<std::string> out(n);
  for (auto& s : out) {
    for (std::uint64_t i = 0, len = 6 + rng.below(12); i < len; ++i) {
      s += (i ? " " : "") + words[rng.below(words.size())];
    }
  }
  return out;
}

void BM_BpeEncode(benchmark::State& state) {
  const auto lines = make_lines(2000);
  const auto model = bpe::BpeModel::train(lines, 500);
  const double dropout = static_cast<double>(state.range(0)) / 100.0;
  std::size_t i = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(model.encode(lines[i % lines.size()], dropout, i));
    ++i;
  }
}
BENCHMARK(BM_BpeEncode)->Arg(0)->Arg(10);

void BM_BpeTrain(benchmark::State& state) {
  const auto lines = make_lines(2000);
  for (auto _ : state) benchmark::DoNotOptimize(bpe::BpeModel::train(lines, 500));
}
BENCHMARK(BM_BpeTrain)->Unit(benchmark::kMillisecond);

}  // namespace
