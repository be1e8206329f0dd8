#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "nmtk/scorer.hpp"

namespace nmtk::models {

struct NGramOptions {
  /// Probability mass every token receives regardless of counts.
  double floor = 1e-4;
  /// Weight of the order-k maximum-likelihood estimate for k = 2..order;
  /// the remainder goes to order k-1. A single value is reused for all
  /// orders.
  std::vector<double> lambdas = {0.7};
};

/// Unconditional interpolated n-gram model used as a target-side language
/// model. Contexts are padded with `<s>`; sentences end in `</s>`.
///
///     P(w | h) = (1 - V * floor) * P_interp(w | h) + floor
///     P_interp_k(w | h) = lambda_k * c(h w) / c(h) + (1 - lambda_k) * P_interp_{k-1}(w | h')
///
/// with P_interp_1 the unigram estimate and h' the shortened history. A
/// history never seen in training falls through to the lower order.
///
/// File format:
///
///     ngram-v1
///     order <n>
///     vocab <V>
///     floor <f>
///     lambdas <l_2> ... <l_n>
///     <k>\t<id> ... <id>\t<count>     one line per k-gram, k = 1..n
class NGramScorer final : public Scorer {
 public:
  static NGramScorer train(std::span<const TokenSequence> corpus, std::size_t order,
                           std::size_t vocab_size, const NGramOptions& opts = {});

  std::size_t vocab_size() const override { return vocab_size_; }
  Distribution next_dist(TokenSpan source, TokenSpan prefix) const override;

  std::size_t order() const { return order_; }
  double floor() const { return floor_; }

  static NGramScorer parse(std::string_view text);
  static NGramScorer load(const std::filesystem::path& path);
  std::string serialize() const;
  void save(const std::filesystem::path& path) const;

 private:
  struct Context {
    std::uint64_t total = 0;
    std::map<TokenId, std::uint64_t> next;
  };

  void finalize();

  std::size_t order_ = 0;
  std::size_t vocab_size_ = 0;
  double floor_ = 0.0;
  std::vector<double> lambdas_;  // index k-2 for order k
  // contexts_[k-1] maps a (k-1)-token history to its continuation counts.
  std::vector<std::map<TokenSequence, Context>> contexts_;
  Distribution unigram_;
};

/// Loads a table (JSON) or n-gram (`ngram-v1`) scorer, chosen by content.
std::unique_ptr<Scorer> load_scorer(const std::filesystem::path& path);

}  // namespace nmtk::models
