#include "nmtk/cli.hpp"

#include <iostream>

#include <json.hpp>

#include "common.hpp"
#include "nmtk/error.hpp"
#include "nmtk/ngram.hpp"
#include "nmtk/numfmt.hpp"
#include "nmtk/textnorm.hpp"

namespace nmtk::cli {

Input::Input(const std::string& path, Context& ctx) : stream_(&ctx.in) {
  if (path.empty() || path == "-") return;
  file_.open(path, std::ios::binary);
  if (!file_) fail(ErrorCode::Io, "cannot open " + path);
  stream_ = &file_;
}

Output::Output(const std::string& path, Context& ctx) : path_(path), stream_(&ctx.out) {
  if (path.empty() || path == "-") return;
  file_.open(path, std::ios::binary | std::ios::trunc);
  if (!file_) fail(ErrorCode::Io, "cannot write " + path);
  stream_ = &file_;
}

void Output::close() {
  stream_->flush();
  if (!*stream_) fail(ErrorCode::Io, "write failed" + (path_.empty() ? std::string() : ": " + path_));
  if (file_.is_open()) file_.close();
}

bool read_line(std::istream& in, std::string& line) {
  if (!std::getline(in, line)) return false;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  return true;
}

std::vector<std::string> read_lines(const std::string& path, Context& ctx) {
  Input in(path, ctx);
  std::vector<std::string> lines;
  std::string line;
  while (read_line(in.get(), line)) lines.push_back(line);
  return lines;
}

ScorerSet::ScorerSet(const std::vector<std::string>& paths) {
  if (paths.empty()) fail(ErrorCode::EmptyEnsemble, "no model given");
  for (const auto& p : paths) members_.push_back(models::load_scorer(p));
  if (members_.size() > 1) {
    std::vector<const models::Scorer*> raw;
    for (const auto& m : members_) raw.push_back(m.get());
    ensemble_ = std::make_unique<models::EnsembleScorer>(std::move(raw));
  }
}

const models::Scorer& ScorerSet::get() const {
  if (ensemble_) return *ensemble_;
  return *members_.front();
}

Codec::Codec(const std::string& bpe_path) {
  if (!bpe_path.empty()) bpe_ = bpe::BpeModel::load(bpe_path);
}

TokenSequence Codec::source(const std::string& line) const {
  if (!bpe_) return decode::parse_ids(line);
  auto ids = bpe_->encode(line);
  ids.push_back(kEosId);
  return ids;
}

eval::Words Codec::reference(const std::string& line) const {
  if (!bpe_) return eval::ids_as_words(decode::parse_ids(line));
  return textnorm::word_tokenize(line);
}

eval::Words Codec::hypothesis(TokenSpan ids) const {
  if (!bpe_) return eval::ids_as_words(ids);
  return textnorm::word_tokenize(bpe_->decode(ids));
}

std::string format_bleu(const eval::BleuResult& r) {
  std::string out = "BLEU = " + format_double(r.score) + " ";
  for (std::size_t n = 0; n < r.precisions.size(); ++n) {
    if (n) out += '/';
    out += format_double(r.precisions[n] * 100.0);
  }
  out += " (BP = " + format_double(r.brevity_penalty);
  const double ratio = r.ref_len ? static_cast<double>(r.hyp_len) / static_cast<double>(r.ref_len) : 0.0;
  out += " ratio = " + format_double(ratio);
  out += " hyp_len = " + std::to_string(r.hyp_len) + " ref_len = " + std::to_string(r.ref_len) + ")";
  return out;
}

namespace {

void log_config(const CLI::App& sub, const Context& ctx) {
  nlohmann::json options = nlohmann::json::object();
  for (const CLI::Option* o : sub.get_options()) {
    const std::string name = o->get_single_name();
    if (name.empty() || name == "help") continue;
    if (o->count() > 0) {
      const auto& res = o->results();
      if (o->get_items_expected_max() > 1 || res.size() > 1) {
        options[name] = res;
      } else {
        options[name] = res.empty() ? std::string() : res.front();
      }
    } else {
      options[name] = o->get_default_str();
    }
  }
  nlohmann::json j;
  j["command"] = sub.get_name();
  j["seed"] = ctx.seed;
  j["threads"] = ctx.threads;
  j["options"] = std::move(options);
  ctx.err << "config\t" << j.dump() << '\n';
}

}  // namespace

int run(int argc, const char* const* argv, std::istream& in, std::ostream& out, std::ostream& err) {
  CLI::App app{"nmtk: text normalization, BPE, corpus filtering, decoding and scoring", "nmtk"};
  app.fallthrough();
  app.require_subcommand(1);

  Context ctx{in, out, err};
  app.add_option("--seed", ctx.seed, "Seed for all randomness")->capture_default_str();
  app.add_option("--threads", ctx.threads, "Worker threads")
      ->envname("NMTK_THREADS")
      ->check(CLI::Range(1u, 1024u))
      ->capture_default_str();

  Registry reg;
  add_text_commands(app, reg);
  add_corpus_commands(app, reg);
  add_decode_commands(app, reg);

  if (argc < 2) {
    err << app.help();
    return 2;
  }
  const std::string first = argv[1];
  if (first.empty() || first.front() != '-') {
    bool known = false;
    for (const auto& c : reg) known = known || c.app->get_name() == first;
    if (!known) {
      err << "error\t" << to_string(ErrorCode::UnknownSubcommand) << "\tunknown subcommand '" << first << "'\n";
      err << app.help();
      return 2;
    }
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      out << (app.get_subcommands().empty() ? app.help() : app.get_subcommands().front()->help());
      return 0;
    }
    err << "error\t" << to_string(ErrorCode::InvalidArgument) << '\t' << e.what() << '\n';
    err << (app.get_subcommands().empty() ? app.help() : app.get_subcommands().front()->help());
    return 2;
  }

  for (auto& c : reg) {
    if (!c.app->parsed()) continue;
    try {
      log_config(*c.app, ctx);
      c.run(ctx);
      out.flush();
      return 0;
    } catch (const Error& e) {
      err << "error\t" << to_string(e.code()) << '\t' << e.what() << '\n';
      return 1;
    } catch (const std::exception& e) {
      err << "error\tInternal\t" << e.what() << '\n';
      return 1;
    }
  }
  err << app.help();
  return 2;
}

int run(int argc, const char* const* argv) {
  std::ios::sync_with_stdio(false);
  return run(argc, argv, std::cin, std::cout, std::cerr);
}

}  // namespace nmtk::cli
