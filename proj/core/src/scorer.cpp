#include "nmtk/scorer.hpp"

#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "nmtk/error.hpp"

namespace nmtk::models {

using nlohmann::json;

bool is_normalized(std::span<const double> dist, double tol) {
  double sum = 0.0;
  for (double p : dist) {
    if (!(p >= 0.0) || !std::isfinite(p)) return false;
    sum += p;
  }
  return std::abs(sum - 1.0) <= tol;
}

TableScorer::TableScorer(std::vector<std::string> vocab, Distribution default_dist)
    : vocab_(std::move(vocab)), default_(std::move(default_dist)) {
  if (vocab_.empty()) fail(ErrorCode::InvalidArgument, "table scorer: empty vocabulary");
  check(default_);
}

void TableScorer::check(const Distribution& dist) const {
  if (dist.size() != vocab_.size()) {
    fail(ErrorCode::VocabMismatch, "table scorer: distribution has " + std::to_string(dist.size()) +
                                       " entries for a vocabulary of " + std::to_string(vocab_.size()));
  }
  if (!is_normalized(dist)) fail(ErrorCode::Format, "table scorer: distribution is not normalized");
}

void TableScorer::set(TokenSequence source, TokenSequence prefix, Distribution dist) {
  check(dist);
  exact_[{std::move(source), std::move(prefix)}] = std::move(dist);
}

void TableScorer::set_any_source(TokenSequence prefix, Distribution dist) {
  check(dist);
  any_source_[std::move(prefix)] = std::move(dist);
}

Distribution TableScorer::next_dist(TokenSpan source, TokenSpan prefix) const {
  if (!exact_.empty()) {
    auto it = exact_.find({TokenSequence(source.begin(), source.end()), TokenSequence(prefix.begin(), prefix.end())});
    if (it != exact_.end()) return it->second;
  }
  if (!any_source_.empty()) {
    auto it = any_source_.find(TokenSequence(prefix.begin(), prefix.end()));
    if (it != any_source_.end()) return it->second;
  }
  return default_;
}

TableScorer TableScorer::parse(std::string_view json_text) {
  try {
    const json j = json::parse(json_text);
    if (j.value("format", std::string()) != "nmtk-table-v1") {
      fail(ErrorCode::Format, "table scorer: expected format nmtk-table-v1");
    }
    TableScorer t(j.at("vocab").get<std::vector<std::string>>(), j.at("default").get<Distribution>());
    for (const auto& e : j.value("entries", json::array())) {
      auto prefix = e.at("prefix").get<TokenSequence>();
      auto dist = e.at("dist").get<Distribution>();
      if (e.contains("source")) {
        t.set(e.at("source").get<TokenSequence>(), std::move(prefix), std::move(dist));
      } else {
        t.set_any_source(std::move(prefix), std::move(dist));
      }
    }
    return t;
  } catch (const json::exception& e) {
    fail(ErrorCode::Format, std::string("table scorer: ") + e.what());
  }
}

TableScorer TableScorer::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::Io, "cannot open table scorer " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse(buf.str());
}

std::string TableScorer::serialize() const {
  json j;
  j["format"] = "nmtk-table-v1";
  j["vocab"] = vocab_;
  j["default"] = default_;
  json entries = json::array();
  for (const auto& [key, dist] : exact_) {
    entries.push_back({{"source", key.first}, {"prefix", key.second}, {"dist", dist}});
  }
  for (const auto& [prefix, dist] : any_source_) entries.push_back({{"prefix", prefix}, {"dist", dist}});
  j["entries"] = std::move(entries);
  return j.dump(1) + "\n";
}

void TableScorer::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::Io, "cannot write table scorer " + path.string());
  out << serialize();
}

Distribution ensemble_next_dist(std::span<const Scorer* const> scorers, TokenSpan source, TokenSpan prefix) {
  if (scorers.empty()) fail(ErrorCode::EmptyEnsemble, "ensemble: no scorers");
  const std::size_t v = scorers.front()->vocab_size();
  Distribution sum(v, 0.0);
  for (const Scorer* s : scorers) {
    if (s->vocab_size() != v) fail(ErrorCode::VocabMismatch, "ensemble: members disagree on vocabulary size");
    const auto d = s->next_dist(source, prefix);
    for (std::size_t i = 0; i < v; ++i) sum[i] += d[i];
  }
  if (scorers.size() == 1) return sum;
  const double k = static_cast<double>(scorers.size());
  for (auto& p : sum) p /= k;
  return sum;
}

EnsembleScorer::EnsembleScorer(std::vector<const Scorer*> members) : members_(std::move(members)) {
  if (members_.empty()) fail(ErrorCode::EmptyEnsemble, "ensemble: no scorers");
  vocab_size_ = members_.front()->vocab_size();
  for (const Scorer* s : members_) {
    if (s->vocab_size() != vocab_size_) fail(ErrorCode::VocabMismatch, "ensemble: members disagree on vocabulary size");
  }
}

Distribution EnsembleScorer::next_dist(TokenSpan source, TokenSpan prefix) const {
  return ensemble_next_dist(members_, source, prefix);
}

}  // namespace nmtk::models
