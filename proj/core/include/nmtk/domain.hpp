#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "nmtk/corpus.hpp"

namespace nmtk::domain {

/// Logistic regression over bag-of-token counts (tokens are the
/// whitespace-separated pieces of the input, normally BPE pieces).
///
/// File format: `domcls-v1 <lang>` header, then `token<TAB>weight` lines in
/// byte order of the token, then `__bias__<TAB>value`.
class DomainClassifier {
 public:
  DomainClassifier() = default;
  DomainClassifier(std::string lang, std::map<std::string, double> weights, double bias)
      : lang_(std::move(lang)), weights_(std::move(weights)), bias_(bias) {}

  /// bias + sum of weight * count over the tokens of `text`.
  double linear_score(std::string_view text) const;
  /// Logistic link of linear_score; empty text scores sigmoid(bias).
  double score(std::string_view text) const;

  const std::string& lang() const { return lang_; }
  double bias() const { return bias_; }
  const std::map<std::string, double>& weights() const { return weights_; }

  static DomainClassifier parse(std::string_view text);
  static DomainClassifier load(const std::filesystem::path& path);
  std::string serialize() const;
  void save(const std::filesystem::path& path) const;

  bool operator==(const DomainClassifier&) const = default;

 private:
  std::string lang_;
  std::map<std::string, double> weights_;
  double bias_ = 0.0;
};

struct DomainTrainOptions {
  std::size_t iterations = 400;
  double learning_rate = 0.5;
  double l2 = 1e-4;
  double heldout_fraction = 0.1;
  std::uint64_t seed = 1;
};

struct DomainTrainResult {
  DomainClassifier classifier;
  double heldout_accuracy = 0.0;
  std::size_t train_size = 0;
  std::size_t heldout_size = 0;
};

/// Balances the classes by subsampling the larger one, holds out a seeded
/// fraction of each class, then runs full-batch gradient descent.
DomainTrainResult domain_train(std::string lang, std::span<const std::string> positives,
                               std::span<const std::string> negatives,
                               const DomainTrainOptions& opts = {});

struct SelectionConfig {
  double stage1_threshold = 0.5;   // English score must be strictly above
  double final_threshold = 0.90;   // mean score must reach (inclusive)
  void validate() const;
};

/// Absolute slack on the inclusive final comparison, so that hand-computed
/// averages such as (0.95 + 0.85) / 2 land on the threshold in binary64.
inline constexpr double kFinalThresholdSlack = 1e-9;

bool passes_stage1(double score_en, const SelectionConfig& cfg);
bool passes_final(double score_en, double score_ru, const SelectionConfig& cfg);

enum class EnglishSide { Source, Target };

struct SelectionCounts {
  std::uint64_t input = 0;
  std::uint64_t stage1_kept = 0;
  std::uint64_t stage2_scored = 0;
  std::uint64_t selected = 0;
  bool operator==(const SelectionCounts&) const = default;
};

struct SelectedPair {
  corpus::ParallelExample pair;
  double score_en = 0.0;
  double score_ru = 0.0;
};

struct SelectionResult {
  std::vector<SelectedPair> selected;
  SelectionCounts counts;
};

/// Two-stage selection: the English classifier screens every pair; only
/// survivors are scored by the Russian classifier, and a pair is kept when
/// the mean of both scores reaches the final threshold. Input order is
/// preserved.
SelectionResult bilingual_select(std::span<const corpus::ParallelExample> pairs,
                                 const DomainClassifier& clf_en, const DomainClassifier& clf_ru,
                                 const SelectionConfig& cfg, EnglishSide english_side,
                                 unsigned threads = 1);

/// Corpus TSV with score_en and score_ru appended; the optional external
/// score column is always present (possibly empty) so the layout is fixed.
std::string format_selected(const SelectedPair& s);

}  // namespace nmtk::domain
