#include <algorithm>
#include <filesystem>
#include <numeric>

#include "common.hpp"
#include "nmtk/checkpoint.hpp"
#include "nmtk/corpus.hpp"
#include "nmtk/domain.hpp"
#include "nmtk/error.hpp"
#include "nmtk/langid.hpp"
#include "nmtk/numfmt.hpp"

namespace nmtk::cli {
namespace {

corpus::Provenance provenance_arg(const std::string& name) {
  auto p = corpus::parse_provenance(name);
  if (!p) fail(ErrorCode::InvalidArgument, "unknown provenance '" + name + "'");
  return *p;
}

void add_filter(CLI::App& app, Registry& reg) {
  struct Opts {
    std::string input, output, report, langid, src_lang, tgt_lang;
    corpus::FilterConfig cfg;
  };
  auto o = std::make_shared<Opts>();
  auto* sub = app.add_subcommand("filter", "Length, ratio, language and score filtering of a TSV corpus");
  sub->add_option("-i,--input", o->input, "Input TSV (default stdin)");
  sub->add_option("-o,--output", o->output, "Kept lines (default stdout)");
  sub->add_option("--report", o->report, "Report file (default stderr)");
  sub->add_option("--max-len", o->cfg.max_len_tokens, "Maximum tokens per side")->capture_default_str();
  sub->add_option("--min-len", o->cfg.min_len_tokens, "Minimum tokens per side")->capture_default_str();
  sub->add_option("--max-ratio", o->cfg.max_len_ratio, "Maximum length ratio, either direction")
      ->capture_default_str();
  sub->add_option("--min-score", o->cfg.min_external_score, "Minimum cleanliness score")->capture_default_str();
  sub->add_option("--langid", o->langid, "Language-id model; enables the language rules");
  sub->add_option("--src-lang", o->src_lang, "Expected source language");
  sub->add_option("--tgt-lang", o->tgt_lang, "Expected target language");
  sub->add_flag("--monolingual", o->cfg.monolingual, "One sentence per line; length bounds only");
  reg.push_back({sub, [o](Context& ctx) {
                   auto cfg = o->cfg;
                   std::optional<langid::LangIdModel> model;
                   if (!o->langid.empty()) {
                     if (o->src_lang.empty() || o->tgt_lang.empty()) {
                       fail(ErrorCode::InvalidArgument, "filter: --langid needs --src-lang and --tgt-lang");
                     }
                     model = langid::LangIdModel::load(o->langid);
                     cfg.required_langs = std::pair{o->src_lang, o->tgt_lang};
                   }
                   cfg.validate();
                   Input in(o->input, ctx);
                   Output out(o->output, ctx);
                   const auto report = corpus::filter_stream(
                       in.get(), out.get(), cfg, model ? &*model : nullptr, ctx.threads,
                       [&](std::uint64_t line_no, const std::string& what) {
                         ctx.err << "malformed\t" << line_no << '\t' << what << '\n';
                       });
                   out.close();
                   if (o->report.empty()) {
                     ctx.err << report.serialize();
                   } else {
                     Output rep(o->report, ctx);
                     rep.get() << report.serialize();
                     rep.close();
                   }
                 }});
}

void add_langid_train(CLI::App& app, Registry& reg) {
  struct Opts {
    std::string input, output;
    langid::TrainOptions train;
  };
  auto o = std::make_shared<Opts>();
  auto* sub = app.add_subcommand("langid-train", "Train the language-id classifier from lang<TAB>text lines");
  sub->add_option("-i,--input", o->input, "Training TSV (default stdin)");
  sub->add_option("-o,--output", o->output, "Model file")->required();
  sub->add_option("--epochs", o->train.epochs, "SGD epochs")->capture_default_str();
  sub->add_option("--lr", o->train.learning_rate, "Initial learning rate")->capture_default_str();
  reg.push_back({sub, [o](Context& ctx) {
                   std::vector<langid::LabeledText> data;
                   Input in(o->input, ctx);
                   std::string line;
                   for (std::uint64_t n = 1; read_line(in.get(), line); ++n) {
                     if (line.empty()) continue;
                     const auto tab = line.find('\t');
                     if (tab == std::string::npos || tab == 0) {
                       fail(ErrorCode::MalformedLine, "langid-train: line " + std::to_string(n) + " is not lang<TAB>text");
                     }
                     data.push_back({line.substr(tab + 1), line.substr(0, tab)});
                   }
                   auto opts = o->train;
                   opts.seed = ctx.seed;
                   langid::LangIdModel::train(data, opts).save(o->output);
                 }});
}

void add_domain_train(CLI::App& app, Registry& reg) {
  struct Opts {
    std::string lang, positives, negatives, output;
    domain::DomainTrainOptions train;
  };
  auto o = std::make_shared<Opts>();
  auto* sub = app.add_subcommand("domain-train", "Train an in-domain vs out-of-domain classifier");
  sub->add_option("--lang", o->lang, "Language code stored in the model")->required();
  sub->add_option("--positives", o->positives, "In-domain sentences")->required();
  sub->add_option("--negatives", o->negatives, "Out-of-domain sentences")->required();
  sub->add_option("-o,--output", o->output, "Model file")->required();
  sub->add_option("--iterations", o->train.iterations, "Gradient steps")->capture_default_str();
  sub->add_option("--lr", o->train.learning_rate, "Learning rate")->capture_default_str();
  sub->add_option("--l2", o->train.l2, "L2 penalty")->capture_default_str();
  sub->add_option("--heldout", o->train.heldout_fraction, "Held-out fraction per class")
      ->check(CLI::Range(0.0, 0.9))
      ->capture_default_str();
  reg.push_back({sub, [o](Context& ctx) {
                   const auto pos = read_lines(o->positives, ctx);
                   const auto neg = read_lines(o->negatives, ctx);
                   auto opts = o->train;
                   opts.seed = ctx.seed;
                   const auto res = domain::domain_train(o->lang, pos, neg, opts);
                   res.classifier.save(o->output);
                   ctx.err << "domain-train\ttrain\t" << res.train_size << "\theldout\t" << res.heldout_size
                           << "\theldout_accuracy\t" << format_double(res.heldout_accuracy) << '\n';
                 }});
}

void add_domain_select(CLI::App& app, Registry& reg) {
  struct Opts {
    std::string input, output, en, ru, side = "source";
    domain::SelectionConfig cfg;
  };
  auto o = std::make_shared<Opts>();
  auto* sub = app.add_subcommand("domain-select", "Two-stage in-domain selection of a parallel corpus");
  sub->add_option("-i,--input", o->input, "Input TSV (default stdin)");
  sub->add_option("-o,--output", o->output, "Selected pairs with both scores (default stdout)");
  sub->add_option("--en", o->en, "English classifier")->required();
  sub->add_option("--ru", o->ru, "Russian classifier")->required();
  sub->add_option("--english-side", o->side, "Which column holds English")
      ->check(CLI::IsMember({"source", "target"}))
      ->capture_default_str();
  sub->add_option("--stage1", o->cfg.stage1_threshold, "English score must exceed this")->capture_default_str();
  sub->add_option("--final", o->cfg.final_threshold, "Mean score must reach this")->capture_default_str();
  reg.push_back({sub, [o](Context& ctx) {
                   o->cfg.validate();
                   const auto en = domain::DomainClassifier::load(o->en);
                   const auto ru = domain::DomainClassifier::load(o->ru);
                   const auto side = o->side == "source" ? domain::EnglishSide::Source : domain::EnglishSide::Target;
                   Input in(o->input, ctx);
                   Output out(o->output, ctx);
                   constexpr std::size_t kBlock = 4096;
                   domain::SelectionCounts counts;
                   std::vector<corpus::ParallelExample> block;
                   auto flush = [&] {
                     const auto res = domain::bilingual_select(block, en, ru, o->cfg, side, ctx.threads);
                     for (const auto& s : res.selected) out.get() << domain::format_selected(s) << '\n';
                     counts.input += res.counts.input;
                     counts.stage1_kept += res.counts.stage1_kept;
                     counts.stage2_scored += res.counts.stage2_scored;
                     counts.selected += res.counts.selected;
                     block.clear();
                   };
                   std::string line;
                   for (std::uint64_t n = 0; read_line(in.get(), line); ++n) {
                     block.push_back(corpus::parse_tsv_line(line, n));
                     if (block.size() == kBlock) flush();
                   }
                   flush();
                   out.close();
                   ctx.err << "input\t" << counts.input << "\nstage1_kept\t" << counts.stage1_kept
                           << "\nstage2_scored\t" << counts.stage2_scored << "\nselected\t" << counts.selected << '\n';
                 }});
}

void add_mix(CLI::App& app, Registry& reg) {
  struct Opts {
    std::vector<std::string> corpora, tags;
    std::vector<double> weights;
    std::size_t n = 0;
    std::string output;
  };
  auto o = std::make_shared<Opts>();
  auto* sub = app.add_subcommand("mix", "Weighted sampling from several corpora");
  sub->add_option("--corpus", o->corpora, "Corpus TSV (repeat)")->required();
  sub->add_option("--weight", o->weights, "Weight per corpus, same order (repeat)")->required();
  sub->add_option("--tag", o->tags, "Provenance per corpus, same order (repeat; optional)");
  sub->add_option("-n,--count", o->n, "Number of examples to draw")->required();
  sub->add_option("-o,--output", o->output, "Output TSV with provenance (default stdout)");
  reg.push_back({sub, [o](Context& ctx) {
                   if (o->weights.size() != o->corpora.size()) {
                     fail(ErrorCode::InvalidArgument, "mix: need one --weight per --corpus");
                   }
                   if (!o->tags.empty() && o->tags.size() != o->corpora.size()) {
                     fail(ErrorCode::InvalidArgument, "mix: need one --tag per --corpus");
                   }
                   std::vector<std::vector<corpus::ParallelExample>> data(o->corpora.size());
                   for (std::size_t c = 0; c < o->corpora.size(); ++c) {
                     const auto lines = read_lines(o->corpora[c], ctx);
                     for (std::size_t i = 0; i < lines.size(); ++i) {
                       auto ex = corpus::parse_tsv_line(lines[i], i);
                       if (!o->tags.empty()) ex.provenance = provenance_arg(o->tags[c]);
                       data[c].push_back(std::move(ex));
                     }
                   }
                   std::vector<corpus::WeightedCorpus> weighted;
                   for (std::size_t c = 0; c < data.size(); ++c) weighted.push_back({data[c], o->weights[c]});
                   const auto mixed = corpus::mix_sample(weighted, o->n, ctx.seed);
                   Output out(o->output, ctx);
                   for (const auto& ex : mixed) out.get() << corpus::format_tsv_line(ex, true) << '\n';
                   out.close();
                 }});
}

void add_reverse_target(CLI::App& app, Registry& reg) {
  struct Opts {
    std::string input, output, retag;
  };
  auto o = std::make_shared<Opts>();
  auto* sub = app.add_subcommand("reverse-target", "Reverse the target token order of each pair");
  sub->add_option("-i,--input", o->input, "Input TSV (default stdin)");
  sub->add_option("-o,--output", o->output, "Output TSV (default stdout)");
  sub->add_option("--retag", o->retag, "Set this provenance on every pair");
  reg.push_back({sub, [o](Context& ctx) {
                   std::optional<corpus::Provenance> retag;
                   if (!o->retag.empty()) retag = provenance_arg(o->retag);
                   Input in(o->input, ctx);
                   Output out(o->output, ctx);
                   std::string line;
                   for (std::uint64_t n = 0; read_line(in.get(), line); ++n) {
                     const auto ex = corpus::parse_tsv_line(line, n);
                     const bool had_tag = std::count(line.begin(), line.end(), '\t') >= 3;
                     out.get() << corpus::format_tsv_line(corpus::reverse_target(ex, retag), had_tag || retag)
                               << '\n';
                   }
                   out.close();
                 }});
}

void add_avg_checkpoints(CLI::App& app, Registry& reg) {
  struct Opts {
    std::vector<std::string> inputs;
    std::string output;
    std::size_t top_k = 0, last_k = 0;
  };
  auto o = std::make_shared<Opts>();
  auto* sub = app.add_subcommand("avg-checkpoints", "Average checkpoint files elementwise");
  sub->add_option("inputs", o->inputs, "Checkpoint files")->required();
  sub->add_option("-o,--output", o->output, "Averaged checkpoint")->required();
  auto* top = sub->add_option("--top-k", o->top_k, "Average the k best by validation score");
  auto* last = sub->add_option("--last-k", o->last_k, "Average the k with the highest step");
  top->excludes(last);
  reg.push_back({sub, [o](Context& ctx) {
                   struct Item {
                     std::filesystem::path path;
                     models::CheckpointMetadata meta;
                     std::size_t order;
                   };
                   std::vector<Item> items;
                   for (std::size_t i = 0; i < o->inputs.size(); ++i) {
                     models::CheckpointReader r(o->inputs[i]);
                     items.push_back({o->inputs[i], r.metadata(), i});
                   }
                   std::size_t k = items.size();
                   if (o->top_k > 0) {
                     for (const auto& it : items) {
                       if (!it.meta.validation_score) {
                         fail(ErrorCode::InvalidArgument,
                              "avg-checkpoints: --top-k needs a validation score in " + it.path.string());
                       }
                     }
                     std::stable_sort(items.begin(), items.end(), [](const Item& a, const Item& b) {
                       return *a.meta.validation_score > *b.meta.validation_score;
                     });
                     k = std::min(k, o->top_k);
                   } else if (o->last_k > 0) {
                     std::stable_sort(items.begin(), items.end(),
                                      [](const Item& a, const Item& b) { return a.meta.step > b.meta.step; });
                     k = std::min(k, o->last_k);
                   }
                   items.resize(k);
                   std::sort(items.begin(), items.end(), [](const Item& a, const Item& b) { return a.order < b.order; });
                   std::vector<std::filesystem::path> chosen;
                   for (const auto& it : items) {
                     chosen.push_back(it.path);
                     ctx.err << "avg-checkpoints\tinput\t" << it.path.string() << '\n';
                   }
                   models::average_checkpoint_files(chosen, o->output);
                 }});
}

}  // namespace

void add_corpus_commands(CLI::App& app, Registry& reg) {
  add_filter(app, reg);
  add_langid_train(app, reg);
  add_domain_train(app, reg);
  add_domain_select(app, reg);
  add_mix(app, reg);
  add_reverse_target(app, reg);
  add_avg_checkpoints(app, reg);
}

}  // namespace nmtk::cli
