#include "nmtk/langid.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>

#include "nmtk/error.hpp"
#include "nmtk/numfmt.hpp"
#include "nmtk/rng.hpp"
#include "nmtk/utf8.hpp"

namespace nmtk::langid {
namespace {

std::uint64_t fnv1a(std::string_view s, std::uint64_t salt) {
  std::uint64_t h = 0xcbf29ce484222325ULL ^ salt;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::vector<double> softmax(std::vector<double> z) {
  const double mx = *std::max_element(z.begin(), z.end());
  double sum = 0.0;
  for (auto& v : z) {
    v = std::exp(v - mx);
    sum += v;
  }
  for (auto& v : z) v /= sum;
  return z;
}

std::vector<std::string> split_ws(const std::string& s) {
  std::istringstream in(s);
  std::vector<std::string> out;
  std::string tok;
  while (in >> tok) out.push_back(tok);
  return out;
}

double to_double(const std::string& s) {
  double v = 0.0;
  if (!parse_double(s, v) || !std::isfinite(v)) fail(ErrorCode::Format, "langid model: bad number '" + s + "'");
  return v;
}

}  // namespace

std::vector<LangIdModel::Feature> LangIdModel::features(std::string_view text, std::uint32_t buckets) {
  std::string padded = " ";
  for (char c : text) padded.push_back((c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : c);
  padded.push_back(' ');

  std::vector<std::size_t> starts;
  for (std::size_t pos = 0; pos < padded.size(); pos += utf8::char_len(padded, pos)) starts.push_back(pos);
  starts.push_back(padded.size());
  const std::size_t chars = starts.size() - 1;

  std::vector<std::uint32_t> hashed;
  for (std::size_t n = 1; n <= 4; ++n) {
    for (std::size_t i = 0; i + n <= chars; ++i) {
      const std::string_view gram(padded.data() + starts[i], starts[i + n] - starts[i]);
      hashed.push_back(static_cast<std::uint32_t>(fnv1a(gram, n) % buckets));
    }
  }
  std::sort(hashed.begin(), hashed.end());

  std::vector<Feature> feats;
  for (std::uint32_t b : hashed) {
    if (!feats.empty() && feats.back().bucket == b) {
      feats.back().value += 1.0;
    } else {
      feats.push_back({b, 1.0});
    }
  }
  double norm = 0.0;
  for (const auto& f : feats) norm += f.value * f.value;
  norm = std::sqrt(norm);
  if (norm > 0) {
    for (auto& f : feats) f.value /= norm;
  }
  return feats;
}

std::vector<double> LangIdModel::scores(std::span<const Feature> feats) const {
  const std::size_t L = languages_.size();
  std::vector<double> z = bias_;
  for (const auto& f : feats) {
    const double* row = &weights_[static_cast<std::size_t>(f.bucket) * L];
    for (std::size_t l = 0; l < L; ++l) z[l] += row[l] * f.value;
  }
  return z;
}

LangIdModel LangIdModel::train(std::span<const LabeledText> data, const TrainOptions& opts) {
  if (opts.buckets == 0) fail(ErrorCode::InvalidArgument, "langid_train: buckets must be positive");

  std::map<std::string, std::size_t> lang_index;
  for (const auto& ex : data) lang_index.emplace(ex.lang, 0);
  if (lang_index.size() < 2) {
    fail(ErrorCode::SingleClassCorpus, "langid_train: need at least two languages, got " +
                                           std::to_string(lang_index.size()));
  }

  LangIdModel model;
  model.buckets_ = opts.buckets;
  for (auto& [lang, idx] : lang_index) {
    idx = model.languages_.size();
    model.languages_.push_back(lang);
  }
  const std::size_t L = model.languages_.size();
  model.bias_.assign(L, 0.0);
  model.weights_.assign(static_cast<std::size_t>(opts.buckets) * L, 0.0);

  std::vector<std::vector<Feature>> feats;
  std::vector<std::size_t> labels;
  feats.reserve(data.size());
  for (const auto& ex : data) {
    feats.push_back(features(ex.text, opts.buckets));
    labels.push_back(lang_index.at(ex.lang));
  }

  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), 0);
  Rng rng(opts.seed);
  for (std::size_t epoch = 0; epoch < opts.epochs; ++epoch) {
    for (std::size_t i = order.size(); i > 1; --i) {
      std::swap(order[i - 1], order[rng.below(i)]);
    }
    const double lr = opts.learning_rate / std::sqrt(1.0 + static_cast<double>(epoch));
    for (std::size_t idx : order) {
      const auto p = softmax(model.scores(feats[idx]));
      for (std::size_t l = 0; l < L; ++l) {
        const double g = p[l] - (l == labels[idx] ? 1.0 : 0.0);
        model.bias_[l] -= lr * g;
        for (const auto& f : feats[idx]) {
          double& w = model.weights_[static_cast<std::size_t>(f.bucket) * L + l];
          w -= lr * (g * f.value + opts.l2 * w);
        }
      }
    }
  }
  return model;
}

Prediction LangIdModel::classify(std::string_view text) const {
  if (text.find_first_not_of(" \t") == std::string_view::npos) {
    fail(ErrorCode::EmptyText, "langid_classify: text is empty");
  }
  Prediction pred;
  pred.distribution = softmax(scores(features(text, buckets_)));
  const auto best = std::max_element(pred.distribution.begin(), pred.distribution.end());
  const auto idx = static_cast<std::size_t>(best - pred.distribution.begin());
  pred.lang = languages_[idx];
  pred.probability = *best;
  return pred;
}

std::string LangIdModel::serialize() const {
  const std::size_t L = languages_.size();
  std::string out = "langid-v1 " + std::to_string(buckets_);
  for (const auto& l : languages_) out += " " + l;
  out += "\n__bias__\t";
  for (std::size_t l = 0; l < L; ++l) out += (l ? " " : "") + format_double(bias_[l]);
  out += "\n";
  for (std::size_t b = 0; b < buckets_; ++b) {
    const double* row = &weights_[b * L];
    if (std::all_of(row, row + L, [](double w) { return w == 0.0; })) continue;
    out += std::to_string(b) + "\t";
    for (std::size_t l = 0; l < L; ++l) out += (l ? " " : "") + format_double(row[l]);
    out += "\n";
  }
  return out;
}

void LangIdModel::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::Io, "cannot write langid model " + path.string());
  out << serialize();
}

LangIdModel LangIdModel::parse(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string line;
  if (!std::getline(in, line) || !line.starts_with("langid-v1 ")) {
    fail(ErrorCode::Format, "langid model: missing 'langid-v1' header");
  }
  auto head = split_ws(line);
  if (head.size() < 4) fail(ErrorCode::Format, "langid model: header needs buckets and >= 2 languages");
  LangIdModel model;
  model.buckets_ = static_cast<std::uint32_t>(std::stoul(head[1]));
  model.languages_.assign(head.begin() + 2, head.end());
  const std::size_t L = model.languages_.size();
  model.weights_.assign(static_cast<std::size_t>(model.buckets_) * L, 0.0);

  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos) fail(ErrorCode::Format, "langid model: expected key<TAB>values");
    const auto key = line.substr(0, tab);
    const auto vals = split_ws(line.substr(tab + 1));
    if (vals.size() != L) fail(ErrorCode::Format, "langid model: row '" + key + "' has wrong width");
    std::vector<double> row;
    for (const auto& v : vals) row.push_back(to_double(v));
    if (key == "__bias__") {
      model.bias_ = std::move(row);
    } else {
      const auto b = std::stoul(key);
      if (b >= model.buckets_) fail(ErrorCode::Format, "langid model: bucket out of range");
      std::copy(row.begin(), row.end(), model.weights_.begin() + static_cast<std::ptrdiff_t>(b * L));
    }
  }
  if (model.bias_.size() != L) fail(ErrorCode::Format, "langid model: missing __bias__ row");
  return model;
}

LangIdModel LangIdModel::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::Io, "cannot open langid model " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse(buf.str());
}

}  // namespace nmtk::langid
