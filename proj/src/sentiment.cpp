#include "flusense/sentiment.hpp"

#include <cmath>
#include <fstream>

#include "flusense/config.hpp"
#include "flusense/csv.hpp"
#include "flusense/error.hpp"

namespace flusense::sentiment {

namespace {
constexpr const char* kModule = "sentiment";

std::pair<std::string, double> tab_pair(const std::string& line, const std::filesystem::path& path) {
  const auto tab = line.find('\t');
  if (tab == std::string::npos) throw validation_error(kModule, path.string() + ": expected key<TAB>value: " + line);
  try {
    return {trim(line.substr(0, tab)), std::stod(line.substr(tab + 1))};
  } catch (const std::exception&) {
    throw validation_error(kModule, path.string() + ": bad number in: " + line);
  }
}
}  // namespace

std::string_view to_string(Polarity p) {
  switch (p) {
    case Polarity::Positive: return "Positive";
    case Polarity::Negative: return "Negative";
    case Polarity::Neutral: return "Neutral";
  }
  return "?";
}

std::string_view to_string(IntensityMode m) {
  switch (m) {
    case IntensityMode::Absolute: return "Absolute";
    case IntensityMode::PositiveOnly: return "PositiveOnly";
    case IntensityMode::NegativeOnly: return "NegativeOnly";
  }
  return "?";
}

void SentimentLexicon::add_word(const std::string& word, double strength) {
  if (strength == 0.0 || !std::isfinite(strength)) {
    throw validation_error(kModule, "sentiment strength of '" + word + "' must be non-zero and finite");
  }
  words_[word] = strength;
}

void SentimentLexicon::add_degree(const std::string& adverb, double multiplier) {
  if (!(multiplier > 0.0) || !std::isfinite(multiplier)) {
    throw validation_error(kModule, "degree multiplier of '" + adverb + "' must be positive");
  }
  degrees_[adverb] = multiplier;
}

void SentimentLexicon::add_negation(const std::string& word) { negations_.insert(word); }

SentimentLexicon SentimentLexicon::load(const std::filesystem::path& words, const std::filesystem::path& degrees,
                                        const std::filesystem::path& negations) {
  SentimentLexicon lex;
  for (const auto& line : read_lines(words)) {
    auto [w, s] = tab_pair(line, words);
    lex.add_word(w, s);
  }
  for (const auto& line : read_lines(degrees)) {
    auto [w, m] = tab_pair(line, degrees);
    lex.add_degree(w, m);
  }
  for (const auto& line : read_lines(negations)) lex.add_negation(line);
  return lex;
}

std::optional<double> SentimentLexicon::strength(const std::string& token) const {
  auto it = words_.find(token);
  if (it == words_.end()) return std::nullopt;
  return it->second;
}

std::optional<double> SentimentLexicon::degree(const std::string& token) const {
  auto it = degrees_.find(token);
  if (it == degrees_.end()) return std::nullopt;
  return it->second;
}

Polarity polarity_of(double value) {
  if (value > 0.0) return Polarity::Positive;
  if (value < 0.0) return Polarity::Negative;
  return Polarity::Neutral;
}

SentimentScore score_text(const std::vector<std::string>& tokens, const SentimentLexicon& lexicon) {
  double total = 0.0;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    const auto base = lexicon.strength(tokens[i]);
    if (!base) continue;
    double multiplier = 1.0;
    bool have_degree = false;
    bool negated = false;
    const std::size_t lo = i >= kContextWindow ? i - kContextWindow : 0;
    for (std::size_t j = i; j-- > lo;) {  // nearest first
      if (!have_degree) {
        if (auto m = lexicon.degree(tokens[j])) {
          multiplier = *m;
          have_degree = true;
        }
      }
      if (lexicon.is_negation(tokens[j])) negated = true;
    }
    total += *base * multiplier * (negated ? -1.0 : 1.0);
  }
  return {total, polarity_of(total)};
}

std::vector<SentimentScore> filter_range(const std::vector<SentimentScore>& scores) {
  std::vector<SentimentScore> out;
  for (const auto& s : scores) {
    if (s.value >= -100.0 && s.value <= 100.0) out.push_back(s);
  }
  return out;
}

bool in_analysis_set(const SentimentScore& s) {
  return s.value >= -100.0 && s.value <= 100.0 && s.polarity != Polarity::Neutral;
}

std::vector<SentimentScore> analysis_set(const std::vector<SentimentScore>& scores) {
  std::vector<SentimentScore> out;
  for (const auto& s : scores) {
    if (in_analysis_set(s)) out.push_back(s);
  }
  return out;
}

double mean_of(const std::vector<double>& values, IntensityMode mode, bool* defined) {
  double sum = 0.0;
  std::size_t n = 0;
  for (double v : values) {
    switch (mode) {
      case IntensityMode::Absolute:
        sum += std::fabs(v);
        ++n;
        break;
      case IntensityMode::PositiveOnly:
        if (v > 0.0) {
          sum += v;
          ++n;
        }
        break;
      case IntensityMode::NegativeOnly:
        if (v < 0.0) {
          sum += v;
          ++n;
        }
        break;
    }
  }
  if (defined) *defined = n > 0;
  return n > 0 ? sum / static_cast<double>(n) : 0.0;
}

std::map<GroupKey, double> mean_intensity(const std::vector<ScoredPost>& posts, IntensityMode mode) {
  std::map<GroupKey, std::vector<double>> groups;
  for (const auto& p : posts) {
    if (in_analysis_set(p.score)) groups[{p.region, p.season}].push_back(p.score.value);
  }
  std::map<GroupKey, double> out;
  for (const auto& [key, values] : groups) {
    bool defined = false;
    const double m = mean_of(values, mode, &defined);
    if (defined) out.emplace(key, m);
  }
  return out;
}

EmoticonFrequency emoticon_frequency(const std::vector<corpus::Post>& posts, const text::EmoticonTable& table) {
  EmoticonFrequency f;
  std::array<std::array<std::size_t, 4>, 2> totals{};
  for (const auto& p : posts) {
    if (!p.region) throw validation_error(kModule, "post " + p.id + " has no region");
    const auto r = static_cast<std::size_t>(*p.region);
    ++f.posts[r];
    const auto counts = text::extract_emoticons(p.text, table);
    for (std::size_t c = 0; c < 4; ++c) totals[r][c] += counts[c];
  }
  for (std::size_t r = 0; r < 2; ++r) {
    if (f.posts[r] == 0) continue;
    for (std::size_t c = 0; c < 4; ++c) {
      f.frequency[r][c] = static_cast<double>(totals[r][c]) / static_cast<double>(f.posts[r]);
    }
  }
  for (std::size_t c = 0; c < 4; ++c) {
    const auto& north = f.frequency[0][c];
    const auto& south = f.frequency[1][c];
    if (north && south && *south > 0.0) f.rate[c] = *north / *south;
  }
  return f;
}

void write_intensity_csv(const std::filesystem::path& path, const std::vector<ScoredPost>& posts) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw runtime_error(kModule, "cannot write " + path.string());
  out << "region,season,mode,value\n";
  for (auto mode : {IntensityMode::Absolute, IntensityMode::PositiveOnly, IntensityMode::NegativeOnly}) {
    for (const auto& [key, value] : mean_intensity(posts, mode)) {
      out << corpus::to_string(key.region) << ',' << corpus::to_string(key.season) << ',' << to_string(mode) << ','
          << csv::format_double(value) << '\n';
    }
  }
}

}  // namespace flusense::sentiment
