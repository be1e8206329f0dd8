#include "nmtk/domain.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <unordered_map>

#include "nmtk/error.hpp"
#include "nmtk/numfmt.hpp"
#include "nmtk/parallel.hpp"
#include "nmtk/rng.hpp"

namespace nmtk::domain {
namespace {

double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

std::vector<std::string_view> tokens_of(std::string_view text) {
  std::vector<std::string_view> out;
  std::size_t pos = 0;
  while (pos < text.size()) {
    const auto start = text.find_first_not_of(" \t", pos);
    if (start == std::string_view::npos) break;
    auto end = text.find_first_of(" \t", start);
    if (end == std::string_view::npos) end = text.size();
    out.push_back(text.substr(start, end - start));
    pos = end;
  }
  return out;
}

void shuffle(std::vector<std::size_t>& v, Rng& rng) {
  for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[rng.below(i)]);
}

using SparseRow = std::vector<std::pair<std::uint32_t, double>>;

}  // namespace

double DomainClassifier::linear_score(std::string_view text) const {
  double z = 0.0;
  for (auto tok : tokens_of(text)) {
    auto it = weights_.find(std::string(tok));
    if (it != weights_.end()) z += it->second;
  }
  return bias_ + z;
}

double DomainClassifier::score(std::string_view text) const { return sigmoid(linear_score(text)); }

std::string DomainClassifier::serialize() const {
  std::string out = "domcls-v1 " + lang_ + "\n";
  for (const auto& [tok, w] : weights_) out += tok + "\t" + format_double(w) + "\n";
  out += "__bias__\t" + format_double(bias_) + "\n";
  return out;
}

void DomainClassifier::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::Io, "cannot write classifier " + path.string());
  out << serialize();
}

DomainClassifier DomainClassifier::parse(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string line;
  if (!std::getline(in, line) || !line.starts_with("domcls-v1 ")) {
    fail(ErrorCode::Format, "classifier: missing 'domcls-v1 <lang>' header");
  }
  std::string lang = line.substr(10);
  std::map<std::string, double> weights;
  std::optional<double> bias;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto tab = line.rfind('\t');
    double v = 0.0;
    if (tab == std::string::npos || !parse_double(std::string_view(line).substr(tab + 1), v) ||
        !std::isfinite(v)) {
      fail(ErrorCode::Format, "classifier: bad line '" + line + "'");
    }
    auto key = line.substr(0, tab);
    if (key == "__bias__") {
      bias = v;
    } else {
      weights[std::move(key)] = v;
    }
  }
  if (!bias) fail(ErrorCode::Format, "classifier: missing __bias__");
  return DomainClassifier(std::move(lang), std::move(weights), *bias);
}

DomainClassifier DomainClassifier::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::Io, "cannot open classifier " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse(buf.str());
}

DomainTrainResult domain_train(std::string lang, std::span<const std::string> positives,
                               std::span<const std::string> negatives,
                               const DomainTrainOptions& opts) {
  if (positives.empty() || negatives.empty()) {
    fail(ErrorCode::EmptyClass, "domain_train: both classes need examples");
  }
  if (!(opts.heldout_fraction >= 0.0 && opts.heldout_fraction < 1.0)) {
    fail(ErrorCode::InvalidArgument, "domain_train: heldout fraction must be in [0, 1)");
  }
  Rng rng(opts.seed);
  const std::size_t per_class = std::min(positives.size(), negatives.size());

  auto pick = [&](std::size_t size) {
    std::vector<std::size_t> idx(size);
    std::iota(idx.begin(), idx.end(), 0);
    shuffle(idx, rng);
    idx.resize(per_class);
    return idx;
  };
  const auto pos_idx = pick(positives.size());
  const auto neg_idx = pick(negatives.size());
  const auto n_heldout = static_cast<std::size_t>(std::floor(opts.heldout_fraction * static_cast<double>(per_class)));

  struct Example {
    std::string_view text;
    double label;
  };
  std::vector<Example> train;
  std::vector<Example> heldout;
  for (std::size_t i = 0; i < per_class; ++i) {
    auto& dst = i < n_heldout ? heldout : train;
    dst.push_back({positives[pos_idx[i]], 1.0});
    dst.push_back({negatives[neg_idx[i]], 0.0});
  }
  if (train.empty()) fail(ErrorCode::EmptyClass, "domain_train: nothing left to train on");

  std::map<std::string, std::uint32_t> vocab;
  for (const auto& ex : train) {
    for (auto tok : tokens_of(ex.text)) vocab.emplace(std::string(tok), 0);
  }
  std::vector<std::string> names;
  for (auto& [tok, id] : vocab) {
    id = static_cast<std::uint32_t>(names.size());
    names.push_back(tok);
  }
  std::vector<SparseRow> rows;
  rows.reserve(train.size());
  for (const auto& ex : train) {
    std::map<std::uint32_t, double> counts;
    for (auto tok : tokens_of(ex.text)) counts[vocab.at(std::string(tok))] += 1.0;
    rows.emplace_back(counts.begin(), counts.end());
  }

  std::vector<double> w(names.size(), 0.0);
  double b = 0.0;
  std::vector<double> grad(names.size());
  const double inv_n = 1.0 / static_cast<double>(train.size());
  for (std::size_t it = 0; it < opts.iterations; ++it) {
    std::fill(grad.begin(), grad.end(), 0.0);
    double grad_b = 0.0;
    for (std::size_t i = 0; i < train.size(); ++i) {
      double z = b;
      for (const auto& [f, v] : rows[i]) z += w[f] * v;
      const double err = sigmoid(z) - train[i].label;
      grad_b += err;
      for (const auto& [f, v] : rows[i]) grad[f] += err * v;
    }
    b -= opts.learning_rate * grad_b * inv_n;
    for (std::size_t f = 0; f < w.size(); ++f) {
      w[f] -= opts.learning_rate * (grad[f] * inv_n + opts.l2 * w[f]);
    }
  }

  std::map<std::string, double> weights;
  for (std::size_t f = 0; f < w.size(); ++f) {
    if (w[f] != 0.0) weights.emplace(names[f], w[f]);
  }

  DomainTrainResult result;
  result.classifier = DomainClassifier(std::move(lang), std::move(weights), b);
  result.train_size = train.size();
  result.heldout_size = heldout.size();
  std::size_t correct = 0;
  for (const auto& ex : heldout) {
    correct += ((result.classifier.score(ex.text) > 0.5) == (ex.label > 0.5));
  }
  result.heldout_accuracy = heldout.empty() ? 1.0 : static_cast<double>(correct) / static_cast<double>(heldout.size());
  return result;
}

void SelectionConfig::validate() const {
  if (!(0.0 <= stage1_threshold && stage1_threshold <= final_threshold && final_threshold <= 1.0)) {
    fail(ErrorCode::InvalidArgument, "selection: need 0 <= stage1 <= final <= 1");
  }
}

bool passes_stage1(double score_en, const SelectionConfig& cfg) {
  return score_en > cfg.stage1_threshold;
}

bool passes_final(double score_en, double score_ru, const SelectionConfig& cfg) {
  return (score_en + score_ru) / 2.0 >= cfg.final_threshold - kFinalThresholdSlack;
}

SelectionResult bilingual_select(std::span<const corpus::ParallelExample> pairs,
                                 const DomainClassifier& clf_en, const DomainClassifier& clf_ru,
                                 const SelectionConfig& cfg, EnglishSide english_side,
                                 unsigned threads) {
  cfg.validate();
  auto en_text = [&](const corpus::ParallelExample& p) -> const std::string& {
    return english_side == EnglishSide::Source ? p.source : p.target;
  };
  auto ru_text = [&](const corpus::ParallelExample& p) -> const std::string& {
    return english_side == EnglishSide::Source ? p.target : p.source;
  };

  std::vector<double> score_en(pairs.size());
  parallel_for(pairs.size(), threads, [&](std::size_t i) { score_en[i] = clf_en.score(en_text(pairs[i])); });

  std::vector<std::size_t> survivors;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    if (passes_stage1(score_en[i], cfg)) survivors.push_back(i);
  }

  std::vector<double> score_ru(survivors.size());
  parallel_for(survivors.size(), threads,
               [&](std::size_t k) { score_ru[k] = clf_ru.score(ru_text(pairs[survivors[k]])); });

  SelectionResult result;
  result.counts.input = pairs.size();
  result.counts.stage1_kept = survivors.size();
  result.counts.stage2_scored = score_ru.size();
  for (std::size_t k = 0; k < survivors.size(); ++k) {
    const std::size_t i = survivors[k];
    if (passes_final(score_en[i], score_ru[k], cfg)) {
      result.selected.push_back({pairs[i], score_en[i], score_ru[k]});
    }
  }
  result.counts.selected = result.selected.size();
  return result;
}

std::string format_selected(const SelectedPair& s) {
  std::string out = s.pair.source + "\t" + s.pair.target + "\t";
  if (s.pair.external_score) out += format_double(*s.pair.external_score);
  out += "\t" + format_double(s.score_en) + "\t" + format_double(s.score_ru);
  return out;
}

}  // namespace nmtk::domain
