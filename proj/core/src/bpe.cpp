#include "nmtk/bpe.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <unordered_set>

#include "nmtk/error.hpp"
#include "nmtk/rng.hpp"
#include "nmtk/utf8.hpp"

namespace nmtk::bpe {
namespace {

const char* const kSpecialTokens[] = {"<pad>", "<s>", "</s>", "<unk>"};

std::string pair_key(std::string_view left, std::string_view right) {
  std::string key;
  key.reserve(left.size() + right.size() + 1);
  key.append(left).push_back('\0');
  key.append(right);
  return key;
}

using SymbolId = std::uint32_t;
using PairId = std::uint64_t;

PairId make_pair_id(SymbolId a, SymbolId b) {
  return (static_cast<PairId>(a) << 32) | b;
}

struct WordType {
  std::vector<SymbolId> symbols;
  std::int64_t count = 0;
};

// Incremental pair statistics over word types. Each merge only revisits the
// words that contain the merged pair.
class PairStats {
 public:
  explicit PairStats(std::vector<WordType>& words) : words_(words) {
    for (std::size_t w = 0; w < words_.size(); ++w) add_word(w, +1);
  }

  void add_word(std::size_t w, int sign) {
    const auto& word = words_[w];
    for (std::size_t i = 0; i + 1 < word.symbols.size(); ++i) {
      const PairId p = make_pair_id(word.symbols[i], word.symbols[i + 1]);
      auto& c = counts_[p];
      c += sign * word.count;
      if (sign > 0) where_[p].insert(static_cast<std::uint32_t>(w));
      if (c == 0) counts_.erase(p);
    }
  }

  template <typename Better>
  std::optional<PairId> best(Better better) const {
    std::optional<PairId> out;
    std::int64_t best_count = 0;
    for (const auto& [p, c] : counts_) {
      if (!out || c > best_count || (c == best_count && better(p, *out))) {
        out = p;
        best_count = c;
      }
    }
    return out;
  }

  void merge(PairId p, SymbolId merged) {
    const SymbolId a = static_cast<SymbolId>(p >> 32);
    const SymbolId b = static_cast<SymbolId>(p & 0xffffffffU);
    auto it = where_.find(p);
    if (it == where_.end()) return;
    std::vector<std::uint32_t> touched(it->second.begin(), it->second.end());
    where_.erase(it);
    std::sort(touched.begin(), touched.end());
    for (std::uint32_t w : touched) {
      auto& syms = words_[w].symbols;
      bool present = false;
      for (std::size_t i = 0; i + 1 < syms.size(); ++i) {
        if (syms[i] == a && syms[i + 1] == b) {
          present = true;
          break;
        }
      }
      if (!present) continue;
      add_word(w, -1);
      std::vector<SymbolId> next;
      next.reserve(syms.size());
      for (std::size_t i = 0; i < syms.size(); ++i) {
        if (i + 1 < syms.size() && syms[i] == a && syms[i + 1] == b) {
          next.push_back(merged);
          ++i;
        } else {
          next.push_back(syms[i]);
        }
      }
      syms = std::move(next);
      add_word(w, +1);
    }
  }

 private:
  std::vector<WordType>& words_;
  std::unordered_map<PairId, std::int64_t> counts_;
  std::unordered_map<PairId, std::unordered_set<std::uint32_t>> where_;
};

}  // namespace

std::vector<std::string> split_words(std::string_view text) {
  std::vector<std::string> words;
  if (text.empty()) return words;
  std::string current(kWordMarker);
  for (char c : text) {
    if (c == ' ') {
      words.push_back(std::move(current));
      current.assign(kWordMarker);
    } else {
      current.push_back(c);
    }
  }
  words.push_back(std::move(current));
  return words;
}

BpeModel BpeModel::train(std::span<const std::string> corpus, std::size_t vocab_size) {
  if (corpus.empty()) fail(ErrorCode::EmptyCorpus, "bpe_train: corpus is empty");

  std::map<std::string, std::int64_t> word_counts;
  for (const auto& line : corpus) {
    for (auto& w : split_words(line)) ++word_counts[std::move(w)];
  }
  if (word_counts.empty()) fail(ErrorCode::EmptyCorpus, "bpe_train: corpus has no words");

  std::set<std::string> alphabet;
  for (const auto& [w, c] : word_counts) {
    for (auto& ch : utf8::split_chars(w)) alphabet.insert(std::move(ch));
  }
  if (vocab_size <= alphabet.size()) {
    fail(ErrorCode::VocabTooSmall, "bpe_train: vocab_size " + std::to_string(vocab_size) +
                                       " must exceed alphabet size " +
                                       std::to_string(alphabet.size()));
  }

  std::vector<std::string> symbols(alphabet.begin(), alphabet.end());
  std::unordered_map<std::string, SymbolId> symbol_ids;
  for (SymbolId i = 0; i < symbols.size(); ++i) symbol_ids.emplace(symbols[i], i);

  std::vector<WordType> words;
  words.reserve(word_counts.size());
  for (const auto& [w, c] : word_counts) {
    WordType wt;
    wt.count = c;
    for (const auto& ch : utf8::split_chars(w)) wt.symbols.push_back(symbol_ids.at(ch));
    words.push_back(std::move(wt));
  }

  BpeModel model;
  model.vocab_size_ = vocab_size;
  for (const char* s : kSpecialTokens) model.tokens_.emplace_back(s);
  model.tokens_.insert(model.tokens_.end(), symbols.begin(), symbols.end());
  std::size_t subword_count = symbols.size();

  PairStats stats(words);
  auto lexicographically_smaller = [&](PairId x, PairId y) {
    const auto& xl = symbols[x >> 32];
    const auto& yl = symbols[y >> 32];
    if (xl != yl) return xl < yl;
    return symbols[x & 0xffffffffU] < symbols[y & 0xffffffffU];
  };

  while (subword_count < vocab_size) {
    const auto best = stats.best(lexicographically_smaller);
    if (!best) break;
    const auto& left = symbols[*best >> 32];
    const auto& right = symbols[*best & 0xffffffffU];
    model.merges_.push_back({left, right});
    std::string merged = left + right;
    auto [it, inserted] = symbol_ids.emplace(merged, static_cast<SymbolId>(symbols.size()));
    if (inserted) {
      symbols.push_back(merged);
      model.tokens_.push_back(merged);
      ++subword_count;
    }
    stats.merge(*best, it->second);
  }

  model.index();
  return model;
}

void BpeModel::index() {
  ids_.clear();
  ranks_.clear();
  for (std::size_t i = 0; i < tokens_.size(); ++i) {
    if (!ids_.emplace(tokens_[i], static_cast<TokenId>(i)).second) {
      fail(ErrorCode::Format, "bpe model: duplicate token '" + tokens_[i] + "'");
    }
  }
  for (std::size_t r = 0; r < merges_.size(); ++r) {
    const auto& m = merges_[r];
    if (!ids_.contains(m.left) || !ids_.contains(m.right) || !ids_.contains(m.left + m.right)) {
      fail(ErrorCode::Format, "bpe model: merge " + std::to_string(r) + " ('" + m.left + "' '" +
                                  m.right + "') references tokens missing from the vocabulary");
    }
    ranks_.emplace(pair_key(m.left, m.right), r);
  }
}

std::vector<std::string> BpeModel::apply_merges(std::vector<std::string> syms, double dropout_p,
                                                Rng* rng) const {
  // Dropout skips merges of the deterministic derivation: a merged node
  // survives only if its own merge was kept and both of its parts survived.
  // The result refines the deterministic segmentation.
  struct Node {
    int left = -1;
    int right = -1;
    bool formed = true;
  };
  const bool dropout = dropout_p > 0.0;
  std::vector<Node> nodes;
  std::vector<int> at;
  if (dropout) {
    nodes.resize(syms.size());
    for (std::size_t i = 0; i < syms.size(); ++i) at.push_back(static_cast<int>(i));
  }
  std::vector<std::string> leaves = dropout ? syms : std::vector<std::string>{};

  for (;;) {
    std::size_t best_rank = merges_.size();
    std::size_t best_pos = 0;
    for (std::size_t i = 0; i + 1 < syms.size(); ++i) {
      auto it = ranks_.find(pair_key(syms[i], syms[i + 1]));
      if (it != ranks_.end() && it->second < best_rank) {
        best_rank = it->second;
        best_pos = i;
      }
    }
    if (best_rank == merges_.size()) break;
    syms[best_pos] += syms[best_pos + 1];
    syms.erase(syms.begin() + static_cast<std::ptrdiff_t>(best_pos) + 1);
    if (dropout) {
      const int l = at[best_pos];
      const int r = at[best_pos + 1];
      const bool kept = !(rng->uniform() < dropout_p);
      nodes.push_back({l, r, kept && nodes[static_cast<std::size_t>(l)].formed && nodes[static_cast<std::size_t>(r)].formed});
      at[best_pos] = static_cast<int>(nodes.size() - 1);
      at.erase(at.begin() + static_cast<std::ptrdiff_t>(best_pos) + 1);
    }
  }
  if (!dropout) return syms;

  std::vector<std::string> out;
  auto emit = [&](auto&& self, int n) -> std::string {
    const auto& node = nodes[static_cast<std::size_t>(n)];
    if (node.left < 0) return leaves[static_cast<std::size_t>(n)];
    if (node.formed) return self(self, node.left) + self(self, node.right);
    return {};
  };
  auto flatten = [&](auto&& self, int n) -> void {
    const auto& node = nodes[static_cast<std::size_t>(n)];
    if (node.left < 0 || node.formed) {
      out.push_back(emit(emit, n));
      return;
    }
    self(self, node.left);
    self(self, node.right);
  };
  for (int n : at) flatten(flatten, n);
  return out;
}

std::vector<std::string> BpeModel::encode_pieces(std::string_view text, double dropout_p,
                                                 std::uint64_t seed) const {
  if (dropout_p < 0.0 || dropout_p >= 1.0) {
    fail(ErrorCode::InvalidArgument, "bpe_encode: dropout must be in [0, 1)");
  }
  Rng rng(seed);
  std::vector<std::string> pieces;
  for (const auto& word : split_words(text)) {
    std::vector<std::string> syms = utf8::split_chars(word);
    for (auto& s : syms) {
      if (!ids_.contains(s)) s = kSpecialTokens[kUnkId];
    }
    for (auto& p : apply_merges(std::move(syms), dropout_p, &rng)) pieces.push_back(std::move(p));
  }
  return pieces;
}

TokenSequence BpeModel::encode(std::string_view text, double dropout_p, std::uint64_t seed) const {
  TokenSequence ids;
  for (const auto& piece : encode_pieces(text, dropout_p, seed)) ids.push_back(ids_.at(piece));
  return ids;
}

std::string BpeModel::decode(TokenSpan ids) const {
  std::string joined;
  for (TokenId id : ids) {
    if (id < 0 || static_cast<std::size_t>(id) >= tokens_.size()) {
      fail(ErrorCode::UnknownId, "bpe_decode: id " + std::to_string(id) + " is not in the vocabulary");
    }
    if (id == kEosId) break;
    if (id < kNumSpecialIds) continue;
    joined += tokens_[static_cast<std::size_t>(id)];
  }
  std::string out;
  out.reserve(joined.size());
  for (std::size_t pos = 0; pos < joined.size();) {
    if (joined.compare(pos, kWordMarker.size(), kWordMarker) == 0) {
      out.push_back(' ');
      pos += kWordMarker.size();
    } else {
      out.push_back(joined[pos++]);
    }
  }
  if (!out.empty() && out.front() == ' ') out.erase(0, 1);
  return out;
}

const std::string& BpeModel::token(TokenId id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= tokens_.size()) {
    fail(ErrorCode::UnknownId, "bpe: id " + std::to_string(id) + " is not in the vocabulary");
  }
  return tokens_[static_cast<std::size_t>(id)];
}

std::optional<TokenId> BpeModel::id(std::string_view token) const {
  auto it = ids_.find(std::string(token));
  if (it == ids_.end()) return std::nullopt;
  return it->second;
}

std::string BpeModel::serialize() const {
  std::string out = "bpe-v1 " + std::to_string(vocab_size_) + "\n";
  for (std::size_t i = 0; i < tokens_.size(); ++i) {
    out += tokens_[i] + "\t" + std::to_string(i) + "\n";
  }
  out += "\n";
  for (const auto& m : merges_) out += m.left + " " + m.right + "\n";
  return out;
}

void BpeModel::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::Io, "cannot write bpe model " + path.string());
  out << serialize();
}

BpeModel BpeModel::parse(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string line;
  if (!std::getline(in, line) || !line.starts_with("bpe-v1 ")) {
    fail(ErrorCode::Format, "bpe model: missing 'bpe-v1 <vocab_size>' header");
  }
  BpeModel model;
  try {
    model.vocab_size_ = std::stoul(line.substr(7));
  } catch (const std::exception&) {
    fail(ErrorCode::Format, "bpe model: bad vocab size in header");
  }
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) break;
    const auto tab = line.rfind('\t');
    if (tab == std::string::npos) {
      fail(ErrorCode::Format, "bpe model line " + std::to_string(line_no) + ": expected token<TAB>id");
    }
    std::size_t id = 0;
    const auto digits = std::string_view(line).substr(tab + 1);
    const auto [end, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), id);
    if (ec != std::errc() || end != digits.data() + digits.size() || id != model.tokens_.size()) {
      fail(ErrorCode::Format, "bpe model line " + std::to_string(line_no) + ": ids must be contiguous");
    }
    model.tokens_.push_back(line.substr(0, tab));
  }
  if (model.tokens_.size() < kNumSpecialIds) fail(ErrorCode::Format, "bpe model: vocabulary too short");
  for (TokenId i = 0; i < kNumSpecialIds; ++i) {
    if (model.tokens_[static_cast<std::size_t>(i)] != kSpecialTokens[i]) {
      fail(ErrorCode::Format, "bpe model: reserved ids must be <pad> <s> </s> <unk>");
    }
  }
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto sp = line.find(' ');
    if (sp == std::string::npos || sp == 0 || sp + 1 == line.size()) {
      fail(ErrorCode::Format, "bpe model line " + std::to_string(line_no) + ": expected 'left right'");
    }
    model.merges_.push_back({line.substr(0, sp), line.substr(sp + 1)});
  }
  model.index();
  return model;
}

BpeModel BpeModel::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::Io, "cannot open bpe model " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse(buf.str());
}

}  // namespace nmtk::bpe
