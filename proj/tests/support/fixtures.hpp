#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "nmtk/corpus.hpp"
#include "nmtk/langid.hpp"
#include "nmtk/rng.hpp"
#include "nmtk/scorer.hpp"

namespace nmtk::fixtures {

enum class Lang { En, De, Ru };
std::string_view code(Lang lang);

/// `words` lowercase dictionary words separated by single spaces; every
/// word is one token for the word tokenizer.
std::string plain_sentence(Lang lang, Rng& rng, std::size_t words);

/// Sentence in normal orthography: capitalized start, commas, quotes,
/// parentheses, numbers, abbreviations and final punctuation.
std::string rich_sentence(Lang lang, Rng& rng);

/// `n` rich sentences cycling through en, de, ru.
std::vector<std::string> trilingual_lines(std::size_t n, std::uint64_t seed);

/// Language-id model for en/de/ru trained on plain and rich sentences.
langid::LangIdModel train_langid(std::uint64_t seed);

/// en-de TSV corpus of 1000 lines with 25 planted violations for each of
/// language id (13 source + 12 target), too_long, ratio and score. All
/// other lines pass every rule.
struct PlantedCorpus {
  std::vector<std::string> lines;
  corpus::FilterReport expected;
};
PlantedCorpus planted_filter_corpus(std::uint64_t seed);

/// Table over ids 0..vocab-1 (eos is id 2) with an entry for every prefix
/// shorter than `max_len`. With `quantized`, weights are small integers so
/// equal probabilities (and tied scores) are common. About `zero_fraction` of entries are zero;
/// each row keeps at least one positive entry.
models::TableScorer random_table(std::size_t vocab, std::size_t max_len, std::uint64_t seed,
                                 double zero_fraction = 0.2, bool quantized = false);

/// Fresh empty directory under the system temp dir.
std::filesystem::path temp_dir(std::string_view name);

void write_lines(const std::filesystem::path& path, const std::vector<std::string>& lines);
std::string read_file(const std::filesystem::path& path);

}  // namespace nmtk::fixtures
