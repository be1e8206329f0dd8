#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace nmtk::langid {

struct LabeledText {
  std::string text;
  std::string lang;
};

struct TrainOptions {
  std::size_t epochs = 8;
  double learning_rate = 0.5;
  double l2 = 1e-6;
  std::uint64_t seed = 1;
  std::uint32_t buckets = 1U << 16;
};

struct Prediction {
  std::string lang;
  double probability = 0.0;
  std::vector<double> distribution;  // aligned with LangIdModel::languages()
};

/// Multinomial logistic classifier over hashed character 1- to 4-grams.
///
/// File format (`langid-v1`):
///
///     langid-v1 <buckets> <lang> <lang> ...
///     __bias__\t<b_1> <b_2> ...
///     <bucket>\t<w_1> <w_2> ...      nonzero rows only, ascending bucket
class LangIdModel {
 public:
  /// SGD with a seeded per-epoch shuffle. Needs at least two languages.
  static LangIdModel train(std::span<const LabeledText> data, const TrainOptions& opts = {});

  static LangIdModel parse(std::string_view text);
  static LangIdModel load(const std::filesystem::path& path);
  std::string serialize() const;
  void save(const std::filesystem::path& path) const;

  /// Argmax language with its softmax probability. Throws EmptyText.
  Prediction classify(std::string_view text) const;

  std::span<const std::string> languages() const { return languages_; }
  std::uint32_t buckets() const { return buckets_; }

 private:
  struct Feature {
    std::uint32_t bucket;
    double value;
  };
  static std::vector<Feature> features(std::string_view text, std::uint32_t buckets);
  std::vector<double> scores(std::span<const Feature> feats) const;

  std::uint32_t buckets_ = 0;
  std::vector<std::string> languages_;
  std::vector<double> bias_;
  std::vector<double> weights_;  // buckets_ x languages_.size(), row-major
};

}  // namespace nmtk::langid
