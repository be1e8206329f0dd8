#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "nmtk/tokens.hpp"

namespace nmtk::models {

using Distribution = std::vector<double>;

inline constexpr double kNormalizationTolerance = 1e-6;

/// Conditional next-token distribution provider. Implementations are
/// immutable after construction and safe to share across threads.
class Scorer {
 public:
  virtual ~Scorer() = default;
  virtual std::size_t vocab_size() const = 0;
  /// P(. | prefix, source): non-negative, sums to 1 within 1e-6. An
  /// unconditional model ignores `source`.
  virtual Distribution next_dist(TokenSpan source, TokenSpan prefix) const = 0;
};

bool is_normalized(std::span<const double> dist, double tol = kNormalizationTolerance);

/// Explicit conditional table, mainly for exactly enumerable tests.
///
/// Lookup order: (source, prefix) entry, then a source-agnostic entry for
/// `prefix`, then the default vector.
///
/// File format: JSON object
///
///     {"format": "nmtk-table-v1", "vocab": [...], "default": [...],
///      "entries": [{"source": [ids], "prefix": [ids], "dist": [...]},
///                  {"prefix": [ids], "dist": [...]}]}
///
/// where an entry without "source" matches any source.
class TableScorer final : public Scorer {
 public:
  TableScorer(std::vector<std::string> vocab, Distribution default_dist);

  void set(TokenSequence source, TokenSequence prefix, Distribution dist);
  void set_any_source(TokenSequence prefix, Distribution dist);

  std::size_t vocab_size() const override { return vocab_.size(); }
  Distribution next_dist(TokenSpan source, TokenSpan prefix) const override;

  const std::vector<std::string>& vocab() const { return vocab_; }

  static TableScorer parse(std::string_view json_text);
  static TableScorer load(const std::filesystem::path& path);
  std::string serialize() const;
  void save(const std::filesystem::path& path) const;

 private:
  void check(const Distribution& dist) const;

  std::vector<std::string> vocab_;
  Distribution default_;
  std::map<std::pair<TokenSequence, TokenSequence>, Distribution> exact_;
  std::map<TokenSequence, Distribution> any_source_;
};

/// Elementwise mean of the members' distributions. Throws EmptyEnsemble or
/// VocabMismatch.
Distribution ensemble_next_dist(std::span<const Scorer* const> scorers, TokenSpan source,
                                TokenSpan prefix);

/// Scorer adapter over ensemble_next_dist. Members must outlive it.
class EnsembleScorer final : public Scorer {
 public:
  explicit EnsembleScorer(std::vector<const Scorer*> members);

  std::size_t vocab_size() const override { return vocab_size_; }
  Distribution next_dist(TokenSpan source, TokenSpan prefix) const override;
  std::size_t size() const { return members_.size(); }

 private:
  std::vector<const Scorer*> members_;
  std::size_t vocab_size_ = 0;
};

}  // namespace nmtk::models
