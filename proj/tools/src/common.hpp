#pragma once

#include <cstdint>
#include <fstream>
#include <functional>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "nmtk/bpe.hpp"
#include "nmtk/eval.hpp"
#include "nmtk/scorer.hpp"

namespace nmtk::cli {

struct Context {
  std::istream& in;
  std::ostream& out;
  std::ostream& err;
  std::uint64_t seed = 0;
  unsigned threads = 1;
};

struct Command {
  CLI::App* app = nullptr;
  std::function<void(Context&)> run;
};

using Registry = std::vector<Command>;

void add_text_commands(CLI::App& app, Registry& reg);
void add_corpus_commands(CLI::App& app, Registry& reg);
void add_decode_commands(CLI::App& app, Registry& reg);

/// `path` empty or "-" means the context stream.
class Input {
 public:
  Input(const std::string& path, Context& ctx);
  std::istream& get() { return *stream_; }

 private:
  std::ifstream file_;
  std::istream* stream_;
};

class Output {
 public:
  Output(const std::string& path, Context& ctx);
  std::ostream& get() { return *stream_; }
  /// Flushes and throws Io if any write failed.
  void close();

 private:
  std::string path_;
  std::ofstream file_;
  std::ostream* stream_;
};

bool read_line(std::istream& in, std::string& line);
std::vector<std::string> read_lines(const std::string& path, Context& ctx);

/// Members own the loaded scorers; `get()` is the ensemble when there is
/// more than one.
class ScorerSet {
 public:
  explicit ScorerSet(const std::vector<std::string>& paths);
  const models::Scorer& get() const;

 private:
  std::vector<std::unique_ptr<models::Scorer>> members_;
  std::unique_ptr<models::EnsembleScorer> ensemble_;
};

/// How sentences move between text and ids: with a BPE model, lines are
/// raw text; without one, lines are space-separated ids.
class Codec {
 public:
  explicit Codec(const std::string& bpe_path);
  /// Source ids for the decoder, eos-terminated when encoding text.
  TokenSequence source(const std::string& line) const;
  /// Words for BLEU from a reference line.
  eval::Words reference(const std::string& line) const;
  /// Words for BLEU from decoder output.
  eval::Words hypothesis(TokenSpan ids) const;

 private:
  std::optional<bpe::BpeModel> bpe_;
};

std::string format_bleu(const eval::BleuResult& r);

}  // namespace nmtk::cli
