#include "fixtures.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include <unistd.h>
#include <cmath>

#include "nmtk/error.hpp"
#include "nmtk/numfmt.hpp"

namespace nmtk::fixtures {
namespace {

struct Lexicon {
  std::vector<std::string> dets, nouns, verbs, adjs, joins, abbrevs;
};

const Lexicon& lexicon(Lang lang) {
  static const Lexicon en{
      {"the", "a", "this", "every", "our"},
      {"cat", "house", "protein", "doctor", "river", "government", "patient", "market", "study", "village",
       "engine", "garden", "teacher", "letter", "window", "therapy", "kidney", "weather"},
      {"sees", "builds", "reads", "finds", "describes", "wants", "visits", "helps", "measures", "follows"},
      {"old", "green", "quiet", "clinical", "strong", "small", "bright", "careful", "chronic"},
      {"and", "but", "while", "because", "although"},
      {"Dr.", "Mr.", "Prof.", "approx."}};
  static const Lexicon de{
      {"der", "die", "das", "ein", "jede"},
      {"Katze", "Haus", "Eiweiß", "Arzt", "Fluss", "Regierung", "Patientin", "Markt", "Studie", "Dorf",
       "Motor", "Garten", "Lehrer", "Brief", "Fenster", "Straße", "Größe", "Niere"},
      {"sieht", "baut", "liest", "findet", "beschreibt", "möchte", "besucht", "hilft", "misst", "folgt"},
      {"alte", "grüne", "ruhige", "klinische", "starke", "kleine", "helle", "vorsichtige", "schöne"},
      {"und", "aber", "während", "weil", "obwohl"},
      {"Dr.", "Nr.", "Prof.", "z.B."}};
  static const Lexicon ru{
      {"этот", "каждый", "наш", "тот", "весь"},
      {"кошка", "дом", "белок", "врач", "река", "правительство", "пациент", "рынок", "исследование",
       "деревня", "двигатель", "сад", "учитель", "письмо", "окно", "почка", "погода"},
      {"видит", "строит", "читает", "находит", "описывает", "хочет", "посещает", "помогает", "измеряет"},
      {"старый", "зелёный", "тихий", "клинический", "сильный", "малый", "яркий", "осторожный"},
      {"и", "но", "пока", "потому", "хотя"},
      {"т.е.", "г.", "проф.", "др."}};
  switch (lang) {
    case Lang::En: return en;
    case Lang::De: return de;
    case Lang::Ru: return ru;
  }
  return en;
}

const std::string& pick(const std::vector<std::string>& v, Rng& rng) { return v[rng.below(v.size())]; }

std::string capitalize(std::string w) {
  if (!w.empty() && w[0] >= 'a' && w[0] <= 'z') w[0] = static_cast<char>(w[0] - 'a' + 'A');
  return w;
}

std::string number(Rng& rng) {
  switch (rng.below(3)) {
    case 0: return std::to_string(rng.below(100));
    case 1: return std::to_string(rng.below(10)) + "." + std::to_string(rng.below(10));
    default: return std::to_string(1 + rng.below(9)) + ",000";
  }
}

}  // namespace

std::string_view code(Lang lang) {
  switch (lang) {
    case Lang::En: return "en";
    case Lang::De: return "de";
    case Lang::Ru: return "ru";
  }
  return "en";
}

std::string plain_sentence(Lang lang, Rng& rng, std::size_t words) {
  const auto& lx = lexicon(lang);
  std::string out;
  for (std::size_t i = 0; i < words; ++i) {
    if (i) out += ' ';
    switch (i % 4) {
      case 0: out += pick(lx.dets, rng); break;
      case 1: out += pick(lx.adjs, rng); break;
      case 2: out += pick(lx.nouns, rng); break;
      default: out += pick(lx.verbs, rng); break;
    }
  }
  return out;
}

std::string rich_sentence(Lang lang, Rng& rng) {
  const auto& lx = lexicon(lang);
  std::vector<std::string> parts;
  parts.push_back(capitalize(pick(lx.dets, rng)));
  parts.push_back(pick(lx.adjs, rng));
  parts.push_back(pick(lx.nouns, rng));
  parts.push_back(pick(lx.verbs, rng));
  switch (rng.below(5)) {
    case 0: parts.push_back("\"" + pick(lx.nouns, rng) + " " + pick(lx.nouns, rng) + "\""); break;
    case 1: parts.push_back("(" + number(rng) + " " + pick(lx.nouns, rng) + ")"); break;
    case 2: parts.push_back(pick(lx.abbrevs, rng) + " " + pick(lx.nouns, rng)); break;
    case 3: parts.push_back(number(rng) + "%"); break;
    default: parts.push_back(pick(lx.nouns, rng)); break;
  }
  if (rng.below(2) == 0) {
    parts.back() += ",";
    parts.push_back(pick(lx.joins, rng));
    parts.push_back(pick(lx.dets, rng));
    parts.push_back(pick(lx.nouns, rng));
    parts.push_back(pick(lx.verbs, rng));
  }
  static const char* const kEnds[] = {".", ".", ".", "!", "?"};
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out += ' ';
    out += parts[i];
  }
  return out + kEnds[rng.below(5)];
}

std::vector<std::string> trilingual_lines(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<std::string> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.push_back(rich_sentence(static_cast<Lang>(i % 3), rng));
  return out;
}

langid::LangIdModel train_langid(std::uint64_t seed) {
  Rng rng(seed);
  std::vector<langid::LabeledText> data;
  for (int i = 0; i < 600; ++i) {
    for (Lang l : {Lang::En, Lang::De, Lang::Ru}) {
      const std::string text = i % 2 ? rich_sentence(l, rng) : plain_sentence(l, rng, 3 + rng.below(10));
      data.push_back({text, std::string(code(l))});
    }
  }
  langid::TrainOptions opts;
  opts.seed = seed;
  return langid::LangIdModel::train(data, opts);
}

PlantedCorpus planted_filter_corpus(std::uint64_t seed) {
  enum Kind { Clean, LangSrc, LangTgt, TooLong, Ratio, Score };
  std::vector<Kind> kinds(900, Clean);
  kinds.insert(kinds.end(), 13, LangSrc);
  kinds.insert(kinds.end(), 12, LangTgt);
  kinds.insert(kinds.end(), 25, TooLong);
  kinds.insert(kinds.end(), 25, Ratio);
  kinds.insert(kinds.end(), 25, Score);
  Rng rng(seed);
  for (std::size_t i = kinds.size(); i > 1; --i) std::swap(kinds[i - 1], kinds[rng.below(i)]);

  PlantedCorpus pc;
  for (std::size_t i = 0; i < kinds.size(); ++i) {
    // Words plus a final period; both sides get the same count unless the
    // line plants a ratio violation.
    std::size_t len_s = 6 + rng.below(14);
    std::size_t len_t = len_s;
    Lang ls = Lang::En, lt = Lang::De;
    std::string score;
    switch (rng.below(4)) {
      case 0: score = ""; break;
      case 1: score = "0.6"; break;
      default: score = format_double(0.6 + 0.01 * static_cast<double>(rng.below(41))); break;
    }
    switch (kinds[i]) {
      case Clean: pc.expected.keep(); break;
      case LangSrc:
        ls = Lang::Ru;
        pc.expected.reject(corpus::FilterRule::LangidSrc);
        break;
      case LangTgt:
        lt = Lang::Ru;
        pc.expected.reject(corpus::FilterRule::LangidTgt);
        break;
      case TooLong:
        len_s = 250;  // 251 tokens with the period
        len_t = 230 + rng.below(30);
        if (rng.below(2)) std::swap(len_s, len_t);
        pc.expected.reject(corpus::FilterRule::TooLong);
        break;
      case Ratio:
        len_s = 9;  // 10 vs 14 tokens
        len_t = 13;
        if (rng.below(2)) std::swap(len_s, len_t);
        pc.expected.reject(corpus::FilterRule::Ratio);
        break;
      case Score:
        score = "0.59";
        pc.expected.reject(corpus::FilterRule::Score);
        break;
    }
    std::string line = plain_sentence(ls, rng, len_s) + " .\t" + plain_sentence(lt, rng, len_t) + " .";
    if (!score.empty() || rng.below(2)) line += "\t" + score;
    pc.lines.push_back(std::move(line));
  }
  return pc;
}

models::TableScorer random_table(std::size_t vocab, std::size_t max_len, std::uint64_t seed,
                                 double zero_fraction, bool quantized) {
  Rng rng(seed);
  std::vector<std::string> names;
  for (std::size_t i = 0; i < vocab; ++i) names.push_back("t" + std::to_string(i));

  auto row = [&] {
    std::vector<double> w(vocab);
    for (auto& x : w) {
      if (rng.uniform() < zero_fraction) {
        x = 0.0;
      } else {
        x = quantized ? static_cast<double>(1 + rng.below(4)) : 0.05 + rng.uniform();
      }
    }
    if (std::all_of(w.begin(), w.end(), [](double x) { return x == 0.0; })) w[rng.below(vocab)] = 1.0;
    double sum = 0.0;
    for (double x : w) sum += x;
    for (auto& x : w) x /= sum;
    return w;
  };

  models::TableScorer t(names, row());
  std::vector<TokenSequence> frontier{{}};
  for (std::size_t len = 0; len < max_len; ++len) {
    std::vector<TokenSequence> next;
    for (const auto& p : frontier) {
      t.set_any_source(p, row());
      for (std::size_t w = 0; w < vocab; ++w) {
        auto q = p;
        q.push_back(static_cast<TokenId>(w));
        next.push_back(std::move(q));
      }
    }
    frontier = std::move(next);
  }
  return t;
}

std::filesystem::path temp_dir(std::string_view name) {
  static std::uint64_t counter = 0;
  const auto base = std::filesystem::temp_directory_path() /
                    ("nmtk-" + std::string(name) + "-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
  std::filesystem::remove_all(base);
  std::filesystem::create_directories(base);
  return base;
}

void write_lines(const std::filesystem::path& path, const std::vector<std::string>& lines) {
  std::ofstream out(path, std::ios::binary);
  for (const auto& l : lines) out << l << '\n';
  if (!out) fail(ErrorCode::Io, "cannot write " + path.string());
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::Io, "cannot read " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

}  // namespace nmtk::fixtures
