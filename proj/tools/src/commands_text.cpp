#include "common.hpp"
#include "nmtk/bpe.hpp"
#include "nmtk/decode.hpp"
#include "nmtk/error.hpp"
#include "nmtk/numfmt.hpp"
#include "nmtk/rng.hpp"
#include "nmtk/textnorm.hpp"

namespace nmtk::cli {
namespace {

void add_normalize(CLI::App& app, Registry& reg) {
  struct Opts {
    std::string input, output, rules;
  };
  auto o = std::make_shared<Opts>();
  auto* sub = app.add_subcommand("normalize", "Punctuation normalization, one line at a time");
  sub->add_option("-i,--input", o->input, "Input file (default stdin)");
  sub->add_option("-o,--output", o->output, "Output file (default stdout)");
  sub->add_option("--rules", o->rules, "Rules file (default: builtin table)");
  reg.push_back({sub, [o](Context& ctx) {
                   std::optional<textnorm::NormalizationRules> custom;
                   if (!o->rules.empty()) custom = textnorm::NormalizationRules::load(o->rules);
                   const auto& rules = custom ? *custom : textnorm::NormalizationRules::builtin();
                   Input in(o->input, ctx);
                   Output out(o->output, ctx);
                   std::string line;
                   while (read_line(in.get(), line)) out.get() << rules.apply(line) << '\n';
                   out.close();
                 }});
}

void add_tokenize(CLI::App& app, Registry& reg) {
  struct Opts {
    std::string input, output, lang = "en", prefixes;
    bool detok = false, german_quotes = false;
  };
  auto o = std::make_shared<Opts>();
  auto* sub = app.add_subcommand("tokenize", "Word tokenization or detokenization");
  sub->add_option("-i,--input", o->input, "Input file (default stdin)");
  sub->add_option("-o,--output", o->output, "Output file (default stdout)");
  sub->add_option("--lang", o->lang, "Language for non-breaking prefixes")->capture_default_str();
  sub->add_option("--prefixes", o->prefixes, "Non-breaking prefix file (overrides --lang)");
  sub->add_flag("--detok", o->detok, "Join space-separated tokens back into text");
  sub->add_flag("--german-quotes", o->german_quotes, "Rewrite paired straight quotes as German quotes");
  reg.push_back({sub, [o](Context& ctx) {
                   std::optional<textnorm::NonBreakingPrefixes> custom;
                   if (!o->prefixes.empty()) custom = textnorm::NonBreakingPrefixes::load(o->prefixes);
                   const auto& prefixes = custom ? *custom : textnorm::NonBreakingPrefixes::builtin(o->lang);
                   Input in(o->input, ctx);
                   Output out(o->output, ctx);
                   std::string line;
                   while (read_line(in.get(), line)) {
                     std::string result;
                     if (o->detok) {
                       result = textnorm::detokenize(eval::split_words(line));
                     } else {
                       const auto toks = textnorm::word_tokenize(line, prefixes);
                       for (std::size_t i = 0; i < toks.size(); ++i) {
                         if (i) result += ' ';
                         result += toks[i];
                       }
                     }
                     if (o->german_quotes) result = textnorm::german_quote_postprocess(result);
                     out.get() << result << '\n';
                   }
                   out.close();
                 }});
}

void add_bpe_train(CLI::App& app, Registry& reg) {
  struct Opts {
    std::string input, output;
    std::size_t vocab_size = 0;
  };
  auto o = std::make_shared<Opts>();
  auto* sub = app.add_subcommand("bpe-train", "Learn BPE merges from a text corpus");
  sub->add_option("-i,--input", o->input, "Training text (default stdin)");
  sub->add_option("-o,--output", o->output, "Model file")->required();
  sub->add_option("--vocab-size", o->vocab_size, "Subword vocabulary size")->required();
  reg.push_back({sub, [o](Context& ctx) {
                   const auto lines = read_lines(o->input, ctx);
                   const auto model = bpe::BpeModel::train(lines, o->vocab_size);
                   model.save(o->output);
                   ctx.err << "bpe-train\tvocab_size\t" << model.vocab_size() << "\tmerges\t"
                           << model.merges().size() << '\n';
                 }});
}

void add_bpe_encode(CLI::App& app, Registry& reg) {
  struct Opts {
    std::string input, output, model;
    double dropout = 0.0;
    bool pieces = false, append_eos = false;
  };
  auto o = std::make_shared<Opts>();
  auto* sub = app.add_subcommand("bpe-encode", "Encode text lines as ids or pieces");
  sub->add_option("-i,--input", o->input, "Input file (default stdin)");
  sub->add_option("-o,--output", o->output, "Output file (default stdout)");
  sub->add_option("--model", o->model, "BPE model")->required();
  sub->add_option("--dropout", o->dropout, "BPE-dropout probability")
      ->check(CLI::Range(0.0, 1.0))
      ->capture_default_str();
  sub->add_flag("--pieces", o->pieces, "Print pieces instead of ids");
  sub->add_flag("--append-eos", o->append_eos, "Terminate each id line with </s>");
  reg.push_back({sub, [o](Context& ctx) {
                   const auto model = bpe::BpeModel::load(o->model);
                   Input in(o->input, ctx);
                   Output out(o->output, ctx);
                   std::string line;
                   for (std::uint64_t n = 0; read_line(in.get(), line); ++n) {
                     const auto seed = derive_seed(ctx.seed, n);
                     if (o->pieces) {
                       const auto ps = model.encode_pieces(line, o->dropout, seed);
                       for (std::size_t i = 0; i < ps.size(); ++i) out.get() << (i ? " " : "") << ps[i];
                       if (o->append_eos) out.get() << (ps.empty() ? "" : " ") << model.token(kEosId);
                     } else {
                       auto ids = model.encode(line, o->dropout, seed);
                       if (o->append_eos) ids.push_back(kEosId);
                       out.get() << decode::format_ids(ids);
                     }
                     out.get() << '\n';
                   }
                   out.close();
                 }});
}

void add_bpe_decode(CLI::App& app, Registry& reg) {
  struct Opts {
    std::string input, output, model;
  };
  auto o = std::make_shared<Opts>();
  auto* sub = app.add_subcommand("bpe-decode", "Decode id lines back to text");
  sub->add_option("-i,--input", o->input, "Input file (default stdin)");
  sub->add_option("-o,--output", o->output, "Output file (default stdout)");
  sub->add_option("--model", o->model, "BPE model")->required();
  reg.push_back({sub, [o](Context& ctx) {
                   const auto model = bpe::BpeModel::load(o->model);
                   Input in(o->input, ctx);
                   Output out(o->output, ctx);
                   std::string line;
                   while (read_line(in.get(), line)) out.get() << model.decode(decode::parse_ids(line)) << '\n';
                   out.close();
                 }});
}

void add_score_bleu(CLI::App& app, Registry& reg) {
  struct Opts {
    std::string hyp, ref, sentence, output;
    bool tokenized = false;
  };
  auto o = std::make_shared<Opts>();
  auto* sub = app.add_subcommand("score-bleu", "Corpus BLEU of a hypothesis file against references");
  sub->add_option("--hyp", o->hyp, "Hypotheses, one per line")->required();
  sub->add_option("--ref", o->ref, "References, one per line")->required();
  sub->add_option("--sentence", o->sentence, "Write idx<TAB>sentence BLEU here");
  sub->add_option("-o,--output", o->output, "Corpus score output (default stdout)");
  sub->add_flag("--tokenized", o->tokenized, "Input is already tokenized; split on whitespace only");
  reg.push_back({sub, [o](Context& ctx) {
                   auto words = [&](const std::string& line) {
                     return o->tokenized ? eval::split_words(line) : textnorm::word_tokenize(line);
                   };
                   Input hyp(o->hyp, ctx);
                   Input ref(o->ref, ctx);
                   std::optional<Output> sent;
                   if (!o->sentence.empty()) sent.emplace(o->sentence, ctx);
                   eval::BleuStats total;
                   std::string h, r;
                   std::size_t n = 0;
                   for (;; ++n) {
                     const bool has_h = read_line(hyp.get(), h);
                     const bool has_r = read_line(ref.get(), r);
                     if (has_h != has_r) {
                       fail(ErrorCode::LengthMismatch, "score-bleu: hypothesis and reference line counts differ");
                     }
                     if (!has_h) break;
                     const auto hw = words(h);
                     const auto rw = words(r);
                     total += eval::bleu_stats(hw, rw);
                     if (sent) sent->get() << n << '\t' << format_double(eval::sentence_bleu(hw, rw)) << '\n';
                   }
                   if (n == 0) fail(ErrorCode::EmptyCorpus, "score-bleu: no sentence pairs");
                   if (sent) sent->close();
                   Output out(o->output, ctx);
                   out.get() << format_bleu(eval::bleu_from_stats(total)) << '\n';
                   out.close();
                 }});
}

}  // namespace

void add_text_commands(CLI::App& app, Registry& reg) {
  add_normalize(app, reg);
  add_tokenize(app, reg);
  add_bpe_train(app, reg);
  add_bpe_encode(app, reg);
  add_bpe_decode(app, reg);
  add_score_bleu(app, reg);
}

}  // namespace nmtk::cli
