#include <algorithm>
#include <sstream>

#include "common.hpp"
#include "nmtk/decode.hpp"
#include "nmtk/error.hpp"
#include "nmtk/ngram.hpp"
#include "nmtk/numfmt.hpp"
#include "nmtk/parallel.hpp"
#include "nmtk/rng.hpp"

namespace nmtk::cli {
namespace {

constexpr std::size_t kDecodeBlock = 64;

void add_search_options(CLI::App* sub, decode::DecodeConfig& cfg) {
  sub->add_option("--beam", cfg.beam_size, "Beam size")->capture_default_str();
  sub->add_option("--max-len", cfg.max_len, "Maximum output length, eos included")->capture_default_str();
  sub->add_option("--n-best", cfg.n_candidates, "Candidates per sentence (capped at the beam size)")
      ->capture_default_str();
  sub->add_option("--alpha", cfg.length_penalty_alpha, "Length penalty exponent; 0 disables")
      ->capture_default_str();
}

template <typename Fn>
auto with_line(std::uint64_t line_no, Fn&& fn) {
  try {
    return fn();
  } catch (const Error& e) {
    throw Error(e.code(), "line " + std::to_string(line_no + 1) + ": " + e.what());
  }
}

/// Reads `in` in blocks, runs `fn(idx, line)` on the pool and hands the
/// results to `emit` in input order.
template <typename Result, typename Fn, typename Emit>
void batch(std::istream& in, unsigned threads, Fn&& fn, Emit&& emit) {
  std::vector<std::string> lines;
  std::vector<Result> results;
  std::uint64_t base = 0;
  auto flush = [&] {
    results.assign(lines.size(), Result{});
    parallel_for(lines.size(), threads, [&](std::size_t i) {
      results[i] = with_line(base + i, [&] { return fn(base + i, lines[i]); });
    });
    for (std::size_t i = 0; i < lines.size(); ++i) emit(base + i, results[i]);
    base += lines.size();
    lines.clear();
  };
  std::string line;
  while (read_line(in, line)) {
    lines.push_back(line);
    if (lines.size() == kDecodeBlock) flush();
  }
  flush();
}

void add_decode(CLI::App& app, Registry& reg) {
  struct Opts {
    std::vector<std::string> models;
    std::string lm, bpe, input, output;
    decode::DecodeConfig cfg;
  };
  auto o = std::make_shared<Opts>();
  auto* sub = app.add_subcommand("decode", "Beam search, optionally with shallow fusion");
  sub->add_option("--model", o->models, "Forward scorer (repeat to ensemble)")->required();
  sub->add_option("--lm", o->lm, "Target language model for shallow fusion");
  sub->add_option("--fusion-lambda", o->cfg.fusion_lambda, "Language model weight")->capture_default_str();
  sub->add_option("--bpe", o->bpe, "Input is text; encode with this BPE model");
  sub->add_option("-i,--input", o->input, "Sources, one per line (default stdin)");
  sub->add_option("-o,--output", o->output, "Candidate dump (default stdout)");
  add_search_options(sub, o->cfg);
  reg.push_back({sub, [o](Context& ctx) {
                   o->cfg.validate();
                   const ScorerSet fwd(o->models);
                   std::unique_ptr<models::Scorer> lm;
                   if (!o->lm.empty()) lm = models::load_scorer(o->lm);
                   const Codec codec(o->bpe);
                   Input in(o->input, ctx);
                   Output out(o->output, ctx);
                   batch<std::vector<decode::Candidate>>(
                       in.get(), ctx.threads,
                       [&](std::uint64_t, const std::string& line) {
                         return decode::beam_search(fwd.get(), lm.get(), codec.source(line), o->cfg);
                       },
                       [&](std::uint64_t idx, const std::vector<decode::Candidate>& cands) {
                         for (std::size_t r = 0; r < cands.size(); ++r) {
                           out.get() << decode::format_candidate_line(idx, r, cands[r]) << '\n';
                         }
                       });
                   out.close();
                 }});
}

void add_sample(CLI::App& app, Registry& reg) {
  struct Opts {
    std::vector<std::string> models;
    std::string bpe, input, output;
    std::size_t samples = 1;
    decode::DecodeConfig cfg;
  };
  auto o = std::make_shared<Opts>();
  auto* sub = app.add_subcommand("sample", "Top-k sampling");
  sub->add_option("--model", o->models, "Forward scorer (repeat to ensemble)")->required();
  sub->add_option("--bpe", o->bpe, "Input is text; encode with this BPE model");
  sub->add_option("-k,--k", o->cfg.sample_k, "Sample among the k most probable tokens")->capture_default_str();
  sub->add_option("--max-len", o->cfg.max_len, "Maximum output length")->capture_default_str();
  sub->add_option("--samples", o->samples, "Samples per source")->check(CLI::PositiveNumber)->capture_default_str();
  sub->add_option("-i,--input", o->input, "Sources, one per line (default stdin)");
  sub->add_option("-o,--output", o->output, "Candidate dump (default stdout)");
  reg.push_back({sub, [o](Context& ctx) {
                   o->cfg.validate();
                   const ScorerSet fwd(o->models);
                   const Codec codec(o->bpe);
                   Input in(o->input, ctx);
                   Output out(o->output, ctx);
                   batch<std::vector<decode::Candidate>>(
                       in.get(), ctx.threads,
                       [&](std::uint64_t idx, const std::string& line) {
                         const auto source = codec.source(line);
                         std::vector<decode::Candidate> draws;
                         for (std::size_t s = 0; s < o->samples; ++s) {
                           auto cfg = o->cfg;
                           cfg.seed = derive_seed(ctx.seed, idx * o->samples + s);
                           draws.push_back(decode::topk_sample(fwd.get(), source, cfg));
                         }
                         return draws;
                       },
                       [&](std::uint64_t idx, const std::vector<decode::Candidate>& draws) {
                         for (std::size_t r = 0; r < draws.size(); ++r) {
                           out.get() << decode::format_candidate_line(idx, r, draws[r]) << '\n';
                         }
                       });
                   out.close();
                 }});
}

/// Groups consecutive dump lines sharing an index.
class CandidateGroups {
 public:
  explicit CandidateGroups(std::istream& in) : in_(in) {}

  bool next(std::size_t& idx, std::vector<decode::Candidate>& cands) {
    cands.clear();
    if (!pending_) {
      std::string line;
      if (!read_line(in_, line)) return false;
      pending_ = decode::parse_candidate_line(line);
    }
    idx = pending_->idx;
    cands.push_back(pending_->candidate);
    pending_.reset();
    std::string line;
    while (read_line(in_, line)) {
      auto c = decode::parse_candidate_line(line);
      if (c.idx != idx) {
        if (c.idx < idx) fail(ErrorCode::Format, "candidate dump is not ordered by index");
        pending_ = std::move(c);
        break;
      }
      cands.push_back(std::move(c.candidate));
    }
    return true;
  }

 private:
  std::istream& in_;
  std::optional<decode::CandidateLine> pending_;
};

/// Line `idx` of a file read forward only.
class IndexedLines {
 public:
  IndexedLines(const std::string& path, Context& ctx) : in_(path, ctx) {}

  const std::string& at(std::size_t idx) {
    while (next_ <= idx) {
      if (!read_line(in_.get(), line_)) fail(ErrorCode::LengthMismatch, "no line " + std::to_string(idx + 1));
      ++next_;
    }
    if (next_ != idx + 1) fail(ErrorCode::Format, "lines requested out of order");
    return line_;
  }

 private:
  Input in_;
  std::string line_;
  std::size_t next_ = 0;
};

void add_rerank(CLI::App& app, Registry& reg) {
  struct Opts {
    std::string input, output, source, rev, lm, bpe;
    decode::NoisyChannelConfig cfg;
  };
  auto o = std::make_shared<Opts>();
  auto* sub = app.add_subcommand("rerank", "Noisy-channel re-ranking of a candidate dump");
  sub->add_option("-i,--input", o->input, "Candidate dump (default stdin)");
  sub->add_option("-o,--output", o->output, "Re-ranked dump (default stdout)");
  sub->add_option("--source", o->source, "Sources, one per line, aligned with the dump index")->required();
  sub->add_option("--rev", o->rev, "Reverse (target to source) scorer")->required();
  sub->add_option("--lm", o->lm, "Target language model")->required();
  sub->add_option("--bpe", o->bpe, "Sources are text; encode with this BPE model");
  sub->add_option("--lambda", o->cfg.lambda, "Weight on reverse + LM scores")->capture_default_str();
  sub->add_flag("--normalize-components", o->cfg.normalize_components,
                "Divide reverse and LM scores by their lengths");
  reg.push_back({sub, [o](Context& ctx) {
                   o->cfg.validate();
                   const auto rev = models::load_scorer(o->rev);
                   const auto lm = models::load_scorer(o->lm);
                   const Codec codec(o->bpe);
                   Input in(o->input, ctx);
                   IndexedLines sources(o->source, ctx);
                   Output out(o->output, ctx);
                   CandidateGroups groups(in.get());
                   std::size_t idx = 0;
                   std::vector<decode::Candidate> cands;
                   while (groups.next(idx, cands)) {
                     const auto src = codec.source(sources.at(idx));
                     const auto ranked = with_line(idx, [&] {
                       return decode::noisy_channel_rerank(cands, *rev, *lm, o->cfg, src);
                     });
                     for (std::size_t r = 0; r < ranked.size(); ++r) {
                       out.get() << decode::format_candidate_line(idx, r, ranked[r]) << '\n';
                     }
                   }
                   out.close();
                 }});
}

void add_oracle_bleu(CLI::App& app, Registry& reg) {
  struct Opts {
    std::string input, ref, bpe, choices, output;
  };
  auto o = std::make_shared<Opts>();
  auto* sub = app.add_subcommand("oracle-bleu", "Rank-1 and oracle corpus BLEU of a candidate dump");
  sub->add_option("-i,--input", o->input, "Candidate dump (default stdin)");
  sub->add_option("--ref", o->ref, "References, one per line")->required();
  sub->add_option("--bpe", o->bpe, "References are text; decode candidates with this BPE model");
  sub->add_option("--choices", o->choices, "Write idx<TAB>rank<TAB>sentence BLEU of each oracle pick");
  sub->add_option("-o,--output", o->output, "Scores (default stdout)");
  reg.push_back({sub, [o](Context& ctx) {
                   const Codec codec(o->bpe);
                   Input in(o->input, ctx);
                   IndexedLines refs(o->ref, ctx);
                   std::optional<Output> choices;
                   if (!o->choices.empty()) choices.emplace(o->choices, ctx);
                   CandidateGroups groups(in.get());
                   eval::BleuStats top, oracle;
                   std::size_t idx = 0, groups_seen = 0;
                   std::vector<decode::Candidate> cands;
                   while (groups.next(idx, cands)) {
                     const auto ref = codec.reference(refs.at(idx));
                     std::vector<eval::Words> hyps;
                     for (const auto& c : cands) hyps.push_back(codec.hypothesis(c.tokens));
                     const auto pick = eval::oracle_select(hyps, ref);
                     top += eval::bleu_stats(hyps.front(), ref);
                     oracle += eval::bleu_stats(hyps[pick.index], ref);
                     if (choices) choices->get() << idx << '\t' << pick.index << '\t' << format_double(pick.score) << '\n';
                     ++groups_seen;
                   }
                   if (groups_seen == 0) fail(ErrorCode::EmptyCorpus, "oracle-bleu: empty candidate dump");
                   if (choices) choices->close();
                   Output out(o->output, ctx);
                   out.get() << "rank1\t" << format_bleu(eval::bleu_from_stats(top)) << '\n';
                   out.get() << "oracle\t" << format_bleu(eval::bleu_from_stats(oracle)) << '\n';
                   out.close();
                 }});
}

std::vector<double> parse_grid(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    double v = 0.0;
    if (!parse_double(item, v) || v < 0.0) fail(ErrorCode::InvalidArgument, "bad grid value '" + item + "'");
    out.push_back(v);
  }
  if (out.empty()) fail(ErrorCode::InvalidArgument, "empty grid");
  return out;
}

void add_tune_lambda(CLI::App& app, Registry& reg) {
  struct Opts {
    std::vector<std::string> models;
    std::string lm, rev, source, ref, bpe, output;
    std::string sf_grid = "0,0.05,0.1,0.15,0.2";
    std::string ncr_grid = "0,0.25,0.5,0.75,1";
    decode::DecodeConfig cfg;
  };
  auto o = std::make_shared<Opts>();
  auto* sub = app.add_subcommand("tune-lambda", "Grid search over fusion and re-ranking weights on a dev set");
  sub->add_option("--model", o->models, "Forward scorer (repeat to ensemble)")->required();
  sub->add_option("--lm", o->lm, "Target language model")->required();
  sub->add_option("--rev", o->rev, "Reverse scorer")->required();
  sub->add_option("--source", o->source, "Dev sources")->required();
  sub->add_option("--ref", o->ref, "Dev references")->required();
  sub->add_option("--bpe", o->bpe, "Sources and references are text; use this BPE model");
  sub->add_option("--sf-grid", o->sf_grid, "Comma-separated fusion weights")->capture_default_str();
  sub->add_option("--ncr-grid", o->ncr_grid, "Comma-separated re-ranking weights")->capture_default_str();
  sub->add_option("-o,--output", o->output, "lambda_sf<TAB>lambda_ncr<TAB>bleu table (default stdout)");
  add_search_options(sub, o->cfg);
  reg.push_back({sub, [o](Context& ctx) {
                   const auto sf = parse_grid(o->sf_grid);
                   const auto ncr = parse_grid(o->ncr_grid);
                   const ScorerSet fwd(o->models);
                   const auto lm = models::load_scorer(o->lm);
                   const auto rev = models::load_scorer(o->rev);
                   const Codec codec(o->bpe);
                   const auto src_lines = read_lines(o->source, ctx);
                   const auto ref_lines = read_lines(o->ref, ctx);
                   if (src_lines.size() != ref_lines.size()) {
                     fail(ErrorCode::LengthMismatch, "tune-lambda: source and reference line counts differ");
                   }
                   if (src_lines.empty()) fail(ErrorCode::EmptyCorpus, "tune-lambda: empty dev set");
                   std::vector<TokenSequence> sources;
                   std::vector<eval::Words> refs;
                   for (std::size_t i = 0; i < src_lines.size(); ++i) {
                     sources.push_back(with_line(i, [&] { return codec.source(src_lines[i]); }));
                     refs.push_back(codec.reference(ref_lines[i]));
                   }
                   Output out(o->output, ctx);
                   out.get() << "lambda_sf\tlambda_ncr\tbleu\n";
                   for (double l_sf : sf) {
                     auto cfg = o->cfg;
                     cfg.fusion_lambda = l_sf;
                     cfg.validate();
                     std::vector<std::vector<decode::Candidate>> beams(sources.size());
                     parallel_for(sources.size(), ctx.threads, [&](std::size_t i) {
                       beams[i] = with_line(i, [&] { return decode::beam_search(fwd.get(), lm.get(), sources[i], cfg); });
                     });
                     for (double l_ncr : ncr) {
                       decode::NoisyChannelConfig nc;
                       nc.lambda = l_ncr;
                       std::vector<eval::Words> hyps(sources.size());
                       parallel_for(sources.size(), ctx.threads, [&](std::size_t i) {
                         const auto ranked = decode::noisy_channel_rerank(beams[i], *rev, *lm, nc, sources[i]);
                         hyps[i] = codec.hypothesis(ranked.front().tokens);
                       });
                       const auto bleu = eval::corpus_bleu(hyps, refs);
                       out.get() << format_double(l_sf) << '\t' << format_double(l_ncr) << '\t'
                                 << format_double(bleu.score) << '\n';
                     }
                   }
                   out.close();
                 }});
}

}  // namespace

void add_decode_commands(CLI::App& app, Registry& reg) {
  add_decode(app, reg);
  add_sample(app, reg);
  add_rerank(app, reg);
  add_oracle_bleu(app, reg);
  add_tune_lambda(app, reg);
}

}  // namespace nmtk::cli
