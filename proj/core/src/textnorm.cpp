#include "nmtk/textnorm.hpp"

#include <fstream>
#include <regex>
#include <sstream>

#include "nmtk/error.hpp"

namespace nmtk::textnorm {
namespace {

// Order matters: character substitutions first, then bracket spacing, then
// attachment of punctuation, then whitespace cleanup.
const std::vector<Rewrite>& builtin_rewrites() {
  static const std::vector<Rewrite> rules = {
      {"\\r", ""},
      {"„", "\""},
      {"“", "\""},
      {"”", "\""},
      {"« ?", "\""},
      {" ?»", "\""},
      {"–", "-"},
      {"—", " - "},
      {"´", "'"},
      {"`", "'"},
      {"‘", "'"},
      {"‚", "'"},
      {"’", "'"},
      {"''", "\""},
      {"…", "..."},
      {"\\(", " ("},
      {"\\)", ") "},
      {" +", " "},
      {"\\( ", "("},
      {" \\)", ")"},
      {"\\) ([.!:?;,])", ")$1"},
      {" ([%:;?!])", "$1"},
      {"^ ", ""},
      {" $", ""},
  };
  return rules;
}

const char* const kEnPrefixes[] = {
    "A", "B", "C", "D", "E", "F", "G", "H", "I", "J", "K", "L", "M",
    "N", "O", "P", "Q", "R", "S", "T", "U", "V", "W", "X", "Y", "Z",
    "Adj", "Adm", "Adv", "Apr", "Aug", "Capt", "Col", "Corp", "Dec", "Dept",
    "Dr", "Feb", "Gen", "Gov", "Inc", "Jan", "Jr", "Jul", "Jun", "Lt", "Ltd",
    "Mar", "Mr", "Mrs", "Ms", "Mt", "No", "Nov", "Oct", "Prof", "Rep", "Rev",
    "Sen", "Sep", "Sept", "Sgt", "Sr", "St", "vs", "etc", "approx", "fig",
    "Fig", "no", "vol", "Vol",
};

const char* const kDePrefixes[] = {
    "A", "B", "C", "D", "E", "F", "G", "H", "I", "J", "K", "L", "M",
    "N", "O", "P", "Q", "R", "S", "T", "U", "V", "W", "X", "Y", "Z",
    "Abs", "Abb", "Bd", "bzw", "ca", "Dr", "evtl", "ggf", "Hr", "Hrsg", "inkl",
    "Jh", "Mio", "Mrd", "Nr", "Prof", "Str", "usw", "vgl", "Tel", "Tsd", "zzgl",
};

const char* const kRuPrefixes[] = {
    "А", "Б", "В", "Г", "Д", "Е", "Ж", "З", "И", "К", "Л", "М", "Н",
    "О", "П", "Р", "С", "Т", "У", "Ф", "Х", "Ц", "Ч", "Ш", "Э", "Ю", "Я",
    "г", "гг", "др", "им", "й", "млн", "млрд", "проф", "руб", "см", "стр",
    "тыс", "ул", "д", "ч", "рис", "акад",
};

template <std::size_t N>
NonBreakingPrefixes make_prefixes(const char* const (&words)[N]) {
  std::unordered_set<std::string> set;
  for (const char* w : words) set.emplace(w);
  return NonBreakingPrefixes(std::move(set));
}

bool is_ascii_letter(char c) {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z');
}

bool has_letter(std::string_view s) {
  for (char c : s) {
    if (is_ascii_letter(c) || static_cast<unsigned char>(c) >= 0x80) return true;
  }
  return false;
}

constexpr std::string_view kLeadingPeel = "\"([{";
constexpr std::string_view kTrailingPeel = "\")]},;:!?%";
constexpr std::string_view kAttachLeft = ")]},;:!?%.";
constexpr std::string_view kAttachRight = "([{";

bool keeps_period(std::string_view stem, const NonBreakingPrefixes& prefixes) {
  if (stem.empty()) return false;
  if (prefixes.contains(stem)) return true;
  // Acronyms and abbreviations with inner periods: U.S., z.B., т.е.
  return stem.find('.') != std::string_view::npos && has_letter(stem);
}

void tokenize_chunk(std::string_view chunk, const NonBreakingPrefixes& prefixes,
                    std::vector<std::string>& out) {
  while (!chunk.empty() && chunk.size() > 1 &&
         kLeadingPeel.find(chunk.front()) != std::string_view::npos) {
    out.emplace_back(1, chunk.front());
    chunk.remove_prefix(1);
  }

  std::vector<std::string> tail;
  while (chunk.size() > 1) {
    const char last = chunk.back();
    if (kTrailingPeel.find(last) != std::string_view::npos) {
      tail.emplace_back(1, last);
      chunk.remove_suffix(1);
      continue;
    }
    if (last == '.') {
      std::size_t dots = chunk.find_last_not_of('.');
      if (dots == std::string_view::npos) break;  // all periods
      const std::size_t run = chunk.size() - dots - 1;
      const std::string_view stem = chunk.substr(0, dots + 1);
      if (run == 1 && keeps_period(stem, prefixes)) break;
      tail.emplace_back(chunk.substr(dots + 1));
      chunk = stem;
      continue;
    }
    break;
  }
  if (!chunk.empty()) out.emplace_back(chunk);
  out.insert(out.end(), tail.rbegin(), tail.rend());
}

bool all_of_set(std::string_view token, std::string_view set) {
  if (token.empty()) return false;
  for (char c : token) {
    if (set.find(c) == std::string_view::npos) return false;
  }
  return true;
}

}  // namespace

struct NormalizationRules::Compiled {
  std::vector<std::regex> regexes;
};

NormalizationRules::NormalizationRules(std::string version, std::vector<Rewrite> rules)
    : version_(std::move(version)),
      rules_(std::move(rules)),
      compiled_(std::make_unique<Compiled>()) {
  compiled_->regexes.reserve(rules_.size());
  for (const auto& r : rules_) {
    try {
      compiled_->regexes.emplace_back(r.pattern, std::regex::ECMAScript | std::regex::optimize);
    } catch (const std::regex_error& e) {
      fail(ErrorCode::Format, "bad rewrite pattern '" + r.pattern + "': " + e.what());
    }
  }
}

NormalizationRules::~NormalizationRules() = default;
NormalizationRules::NormalizationRules(NormalizationRules&&) noexcept = default;
NormalizationRules& NormalizationRules::operator=(NormalizationRules&&) noexcept = default;

const NormalizationRules& NormalizationRules::builtin() {
  static const NormalizationRules rules(std::string(kBuiltinRulesVersion), builtin_rewrites());
  return rules;
}

NormalizationRules NormalizationRules::parse(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string line;
  if (!std::getline(in, line) || !line.starts_with("nmtk-rules ")) {
    fail(ErrorCode::Format, "rules file must start with 'nmtk-rules <version>'");
  }
  std::string version = line.substr(11);
  std::vector<Rewrite> rules;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos || tab == 0) {
      fail(ErrorCode::Format, "rules line " + std::to_string(line_no) + ": expected pattern<TAB>replacement");
    }
    rules.push_back({line.substr(0, tab), line.substr(tab + 1)});
  }
  return NormalizationRules(std::move(version), std::move(rules));
}

NormalizationRules NormalizationRules::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::Io, "cannot open rules file " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse(buf.str());
}

std::string NormalizationRules::apply(std::string_view text) const {
  std::string s(text);
  for (std::size_t i = 0; i < rules_.size(); ++i) {
    s = std::regex_replace(s, compiled_->regexes[i], rules_[i].replacement);
  }
  return s;
}

std::string NormalizationRules::serialize() const {
  std::string out = "nmtk-rules " + version_ + "\n";
  for (const auto& r : rules_) out += r.pattern + "\t" + r.replacement + "\n";
  return out;
}

std::string normalize_punct(std::string_view text) {
  return NormalizationRules::builtin().apply(text);
}

std::string normalize_punct(std::string_view text, const NormalizationRules& rules) {
  return rules.apply(text);
}

const NonBreakingPrefixes& NonBreakingPrefixes::builtin(std::string_view lang) {
  static const NonBreakingPrefixes en = make_prefixes(kEnPrefixes);
  static const NonBreakingPrefixes de = make_prefixes(kDePrefixes);
  static const NonBreakingPrefixes ru = make_prefixes(kRuPrefixes);
  static const NonBreakingPrefixes none;
  if (lang == "en") return en;
  if (lang == "de") return de;
  if (lang == "ru") return ru;
  return none;
}

NonBreakingPrefixes NonBreakingPrefixes::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::Io, "cannot open prefix file " + path.string());
  std::unordered_set<std::string> words;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') continue;
    words.insert(line);
  }
  return NonBreakingPrefixes(std::move(words));
}

std::vector<std::string> word_tokenize(std::string_view text, const NonBreakingPrefixes& prefixes) {
  std::vector<std::string> out;
  std::size_t pos = 0;
  while (pos < text.size()) {
    const std::size_t start = text.find_first_not_of(" \t", pos);
    if (start == std::string_view::npos) break;
    std::size_t end = text.find_first_of(" \t", start);
    if (end == std::string_view::npos) end = text.size();
    tokenize_chunk(text.substr(start, end - start), prefixes, out);
    pos = end;
  }
  return out;
}

std::vector<std::string> word_tokenize(std::string_view text) {
  return word_tokenize(text, NonBreakingPrefixes());
}

std::string detokenize(std::span<const std::string> tokens) {
  std::string out;
  bool glue_next = true;  // no space before the first token
  bool quote_open = false;
  for (const auto& tok : tokens) {
    bool attach_left = all_of_set(tok, kAttachLeft);
    bool attach_right = all_of_set(tok, kAttachRight);
    if (tok == "\"") {
      attach_left = quote_open;
      attach_right = !quote_open;
      quote_open = !quote_open;
    }
    if (!glue_next && !attach_left) out += ' ';
    out += tok;
    glue_next = attach_right;
  }
  return out;
}

std::string german_quote_postprocess(std::string_view text) {
  std::size_t total = 0;
  for (char c : text) total += (c == '"');
  const std::size_t paired = total - total % 2;

  std::string out;
  out.reserve(text.size() + paired * 2);
  std::size_t seen = 0;
  for (char c : text) {
    if (c == '"' && seen < paired) {
      out += (seen % 2 == 0) ? "„" : "“";
      ++seen;
    } else {
      out += c;
    }
  }
  return out;
}

}  // namespace nmtk::textnorm
