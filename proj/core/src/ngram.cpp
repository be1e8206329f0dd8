#include "nmtk/ngram.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "nmtk/error.hpp"
#include "nmtk/numfmt.hpp"

namespace nmtk::models {

NGramScorer NGramScorer::train(std::span<const TokenSequence> corpus, std::size_t order,
                               std::size_t vocab_size, const NGramOptions& opts) {
  if (corpus.empty()) fail(ErrorCode::EmptyCorpus, "ngram_train: corpus is empty");
  if (order < 1) fail(ErrorCode::InvalidArgument, "ngram_train: order must be >= 1");
  if (opts.lambdas.empty()) fail(ErrorCode::InvalidArgument, "ngram_train: need at least one lambda");

  NGramScorer m;
  m.order_ = order;
  m.vocab_size_ = vocab_size;
  m.floor_ = opts.floor;
  for (std::size_t k = 2; k <= order; ++k) {
    m.lambdas_.push_back(opts.lambdas[std::min(k - 2, opts.lambdas.size() - 1)]);
  }
  m.contexts_.resize(order);

  for (const auto& sentence : corpus) {
    TokenSequence padded(order - 1, kBosId);
    padded.insert(padded.end(), sentence.begin(), sentence.end());
    if (sentence.empty() || sentence.back() != kEosId) padded.push_back(kEosId);
    for (std::size_t i = order - 1; i < padded.size(); ++i) {
      const TokenId w = padded[i];
      if (w < 0 || static_cast<std::size_t>(w) >= vocab_size) {
        fail(ErrorCode::VocabMismatch, "ngram_train: token id " + std::to_string(w) + " outside vocabulary");
      }
      for (std::size_t k = 1; k <= order; ++k) {
        TokenSequence hist(padded.begin() + static_cast<std::ptrdiff_t>(i - (k - 1)),
                           padded.begin() + static_cast<std::ptrdiff_t>(i));
        auto& ctx = m.contexts_[k - 1][hist];
        ++ctx.total;
        ++ctx.next[w];
      }
    }
  }
  m.finalize();
  return m;
}

void NGramScorer::finalize() {
  if (vocab_size_ == 0) fail(ErrorCode::InvalidArgument, "ngram: vocabulary is empty");
  if (!(floor_ > 0.0) || floor_ * static_cast<double>(vocab_size_) >= 1.0) {
    fail(ErrorCode::InvalidArgument, "ngram: floor must be positive with floor * vocab < 1");
  }
  for (double l : lambdas_) {
    if (!(l >= 0.0 && l <= 1.0)) fail(ErrorCode::InvalidArgument, "ngram: lambdas must be in [0, 1]");
  }
  unigram_.assign(vocab_size_, 0.0);
  auto it = contexts_[0].find(TokenSequence{});
  if (it == contexts_[0].end() || it->second.total == 0) fail(ErrorCode::EmptyCorpus, "ngram: no unigram counts");
  for (const auto& [w, c] : it->second.next) {
    unigram_[static_cast<std::size_t>(w)] = static_cast<double>(c) / static_cast<double>(it->second.total);
  }
}

Distribution NGramScorer::next_dist(TokenSpan /*source*/, TokenSpan prefix) const {
  Distribution p = unigram_;
  TokenSequence history(order_ > 1 ? order_ - 1 : 0, kBosId);
  history.insert(history.end(), prefix.begin(), prefix.end());
  for (std::size_t k = 2; k <= order_; ++k) {
    const TokenSequence h(history.end() - static_cast<std::ptrdiff_t>(k - 1), history.end());
    auto it = contexts_[k - 1].find(h);
    if (it == contexts_[k - 1].end()) break;
    const double lambda = lambdas_[k - 2];
    for (auto& v : p) v *= 1.0 - lambda;
    const double total = static_cast<double>(it->second.total);
    for (const auto& [w, c] : it->second.next) p[static_cast<std::size_t>(w)] += lambda * static_cast<double>(c) / total;
  }
  const double scale = 1.0 - floor_ * static_cast<double>(vocab_size_);
  for (auto& v : p) v = scale * v + floor_;
  return p;
}

std::string NGramScorer::serialize() const {
  std::string out = "ngram-v1\norder " + std::to_string(order_) + "\nvocab " + std::to_string(vocab_size_) +
                    "\nfloor " + format_double(floor_) + "\nlambdas";
  for (double l : lambdas_) out += " " + format_double(l);
  out += "\n";
  for (std::size_t k = 1; k <= order_; ++k) {
    for (const auto& [hist, ctx] : contexts_[k - 1]) {
      for (const auto& [w, c] : ctx.next) {
        out += std::to_string(k) + "\t";
        for (TokenId h : hist) out += std::to_string(h) + " ";
        out += std::to_string(w) + "\t" + std::to_string(c) + "\n";
      }
    }
  }
  return out;
}

void NGramScorer::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::Io, "cannot write ngram model " + path.string());
  out << serialize();
}

NGramScorer NGramScorer::parse(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string line;
  auto expect = [&](const std::string& key) {
    if (!std::getline(in, line) || !line.starts_with(key)) fail(ErrorCode::Format, "ngram model: expected '" + key + "'");
    return line.substr(key.size());
  };
  expect("ngram-v1");
  NGramScorer m;
  try {
    m.order_ = std::stoul(expect("order "));
    m.vocab_size_ = std::stoul(expect("vocab "));
    if (!parse_double(expect("floor "), m.floor_)) fail(ErrorCode::Format, "ngram model: bad floor");
    std::istringstream ls(expect("lambdas"));
    std::string tok;
    while (ls >> tok) {
      double l = 0.0;
      if (!parse_double(tok, l)) fail(ErrorCode::Format, "ngram model: bad lambda");
      m.lambdas_.push_back(l);
    }
    if (m.order_ < 1 || m.lambdas_.size() != m.order_ - 1) fail(ErrorCode::Format, "ngram model: lambda count must be order - 1");
    m.contexts_.resize(m.order_);
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      const auto t1 = line.find('\t');
      const auto t2 = line.rfind('\t');
      if (t1 == std::string::npos || t1 == t2) fail(ErrorCode::Format, "ngram model: bad count line");
      const std::size_t k = std::stoul(line.substr(0, t1));
      std::istringstream ids(line.substr(t1 + 1, t2 - t1 - 1));
      TokenSequence gram;
      long id = 0;
      while (ids >> id) gram.push_back(static_cast<TokenId>(id));
      if (k < 1 || k > m.order_ || gram.size() != k) fail(ErrorCode::Format, "ngram model: k-gram has wrong length");
      if (gram.back() < 0 || static_cast<std::size_t>(gram.back()) >= m.vocab_size_) {
        fail(ErrorCode::Format, "ngram model: token id outside vocabulary");
      }
      const std::uint64_t c = std::stoull(line.substr(t2 + 1));
      const TokenId w = gram.back();
      gram.pop_back();
      auto& ctx = m.contexts_[k - 1][gram];
      ctx.total += c;
      ctx.next[w] += c;
    }
  } catch (const std::logic_error&) {
    fail(ErrorCode::Format, "ngram model: bad number");
  }
  m.finalize();
  return m;
}

NGramScorer NGramScorer::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::Io, "cannot open ngram model " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse(buf.str());
}

std::unique_ptr<Scorer> load_scorer(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::Io, "cannot open scorer " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  const std::string text = buf.str();
  const auto start = text.find_first_not_of(" \t\r\n");
  if (start != std::string::npos && text[start] == '{') {
    return std::make_unique<TableScorer>(TableScorer::parse(text));
  }
  if (text.rfind("ngram-v1", 0) == 0) return std::make_unique<NGramScorer>(NGramScorer::parse(text));
  fail(ErrorCode::Format, "unrecognized scorer format in " + path.string());
}

}  // namespace nmtk::models
