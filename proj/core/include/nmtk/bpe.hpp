#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "nmtk/tokens.hpp"

namespace nmtk {
class Rng;
}

namespace nmtk::bpe {

/// Word-boundary marker prepended to every whitespace-separated word.
inline constexpr std::string_view kWordMarker = "▁";

struct Merge {
  std::string left;
  std::string right;

  bool operator==(const Merge&) const = default;
};

/// Byte-pair-encoding model: ordered merges plus the token vocabulary.
///
/// Ids 0..3 are reserved for `<pad>`, `<s>`, `</s>` and `<unk>`. The
/// configured vocabulary size counts subword tokens only (alphabet plus
/// merged symbols), not the reserved ids.
///
/// File format (`bpe-v1`):
///
///     bpe-v1 <vocab_size>
///     <token>\t<id>          one line per vocabulary entry, id order
///                            (blank line)
///     <left> <right>         one line per merge, rank order
class BpeModel {
 public:
  /// Greedy most-frequent-pair training over the lines of `corpus`. Ties
  /// between equally frequent pairs go to the lexicographically smaller
  /// (left, right) pair.
  static BpeModel train(std::span<const std::string> corpus, std::size_t vocab_size);

  static BpeModel parse(std::string_view text);
  static BpeModel load(const std::filesystem::path& path);
  std::string serialize() const;
  void save(const std::filesystem::path& path) const;

  /// Applies merges lowest-rank first. With `dropout_p > 0` each merge of
  /// that derivation is skipped with probability `dropout_p` (BPE-dropout),
  /// using a generator seeded from `seed`; a token whose merge or parts were
  /// skipped stays split, so dropout never yields fewer tokens. Code points
  /// absent from the vocabulary map to `<unk>`.
  TokenSequence encode(std::string_view text, double dropout_p = 0.0,
                       std::uint64_t seed = 0) const;
  std::vector<std::string> encode_pieces(std::string_view text, double dropout_p = 0.0,
                                         std::uint64_t seed = 0) const;

  /// Concatenates pieces and restores spaces. Reserved ids are dropped and
  /// decoding stops at the first `</s>`. Throws UnknownId for ids outside
  /// the vocabulary.
  std::string decode(TokenSpan ids) const;

  std::size_t vocab_size() const { return vocab_size_; }
  /// Number of ids, reserved ones included.
  std::size_t size() const { return tokens_.size(); }
  const std::string& token(TokenId id) const;
  std::optional<TokenId> id(std::string_view token) const;
  std::span<const Merge> merges() const { return merges_; }

 private:
  BpeModel() = default;
  void index();
  std::vector<std::string> apply_merges(std::vector<std::string> symbols, double dropout_p,
                                        Rng* rng) const;

  std::size_t vocab_size_ = 0;
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, TokenId> ids_;
  std::vector<Merge> merges_;
  std::unordered_map<std::string, std::size_t> ranks_;
};

/// Splits a line into marker-prefixed words: "a b" -> {"▁a", "▁b"}. Every
/// space starts a new word, so runs of spaces survive the round trip.
std::vector<std::string> split_words(std::string_view text);

}  // namespace nmtk::bpe
